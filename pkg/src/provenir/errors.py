"""Exception hierarchy shared by all provenir modules."""

from __future__ import annotations


class ProvenirError(Exception):
    """Base class for every error raised by this package."""


# --- graph model ---

class DuplicateId(ProvenirError):
    """A node or edge id is already present in the graph."""


class DanglingEndpoint(ProvenirError):
    """An edge references a node id that does not exist."""


class KindMismatch(ProvenirError):
    """Edge endpoints violate the relation's endpoint-kind constraint."""


class MissingRole(ProvenirError):
    """A ContributesTo edge lacks a valid 'team'/'contributor' role attribute."""


class UnknownId(ProvenirError):
    """A lookup referenced a node id that is not in the graph."""


class GraphInvariantError(ProvenirError):
    """A graph handed to a downstream stage fails validation."""


# --- git extraction ---

class NotARepository(ProvenirError):
    """The given path is not a readable git repository."""


class UnknownBranch(ProvenirError):
    """The requested branch/ref cannot be resolved to a commit."""


class CorruptObject(ProvenirError):
    """git reported an object-store failure while walking history."""


# --- membership / forge client ---

class AuthError(ProvenirError):
    """The forge rejected the supplied credentials (401/403)."""


class NotFound(ProvenirError):
    """The forge organization does not exist or is not visible."""


class RateLimited(ProvenirError):
    """The forge rate limit is exhausted; reset_at is a unix timestamp if known."""

    def __init__(self, message: str, reset_at: int | None = None):
        super().__init__(message)
        self.reset_at = reset_at


class NetworkError(ProvenirError):
    """The forge was unreachable after bounded retries."""


# --- queries ---

class NotAnnotated(ProvenirError):
    """The graph has no ContributesTo edges; run role annotation first."""


# --- layout / styling ---

class EmptyGraph(ProvenirError):
    """Layout requires at least one node."""


class UnknownRole(ProvenirError):
    """A drawing edge carries a role outside {team, contributor}."""


# --- serialization ---

class ParseError(ProvenirError):
    """An input file does not conform to its expected grammar/schema."""


class UnknownKind(ProvenirError):
    """An imported node carries a kind outside the known node kinds."""
