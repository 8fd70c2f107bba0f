"""provenir: git history -> provenance property graph -> role-annotated
collaboration drawings and statistics."""

__version__ = "0.1.0"
