"""The collaboration query (files changed by both team members and external
contributors) and per-repository summary statistics."""

from __future__ import annotations

import io
import json
from dataclasses import asdict, dataclass

from .errors import NotAnnotated
from .model import (
    NodeKind,
    ProvEdge,
    ProvGraph,
    ProvNode,
    RelationKind,
    is_file_entity,
    is_revision_entity,
)
from .roles import ROLE_CONTRIBUTOR, ROLE_TEAM

STATS_FIELDS = ("project", "entities", "agents", "activities",
                "team_contr", "ext_contr", "nodes_vis", "edges_vis")
STATS_CSV_HEADER = ",".join(STATS_FIELDS)


@dataclass
class StatsRow:
    project: str
    entities: int        # file-level Entity count
    agents: int
    activities: int
    team_contr: int      # change events (revisions) by team agents
    ext_contr: int       # change events by external agents
    nodes_vis: int       # collaboration subgraph node count
    edges_vis: int       # collaboration subgraph edge count


def collaboration_query(graph: ProvGraph) -> ProvGraph:
    """Subgraph of files contributed to by both roles.

    Returns the file Entities having at least one incoming team edge and
    one incoming contributor edge, every Agent with a ContributesTo edge
    into such a file, and all ContributesTo edges incident to the matched
    files (both roles). Nodes and edges are ordered by id.

    Raises NotAnnotated when the graph has no ContributesTo edges at all,
    to distinguish "annotation never ran" from "no collaboration found".
    """
    contrib = [e for e in graph.edges()
               if e.kind is RelationKind.CONTRIBUTES_TO]
    if not contrib:
        raise NotAnnotated("graph has no ContributesTo edges; "
                           "run role annotation first")

    roles_per_file: dict[str, set[str]] = {}
    for e in contrib:
        roles_per_file.setdefault(e.target, set()).add(
            e.attributes.get("role", ""))
    matched_files = {f for f, roles in roles_per_file.items()
                     if ROLE_TEAM in roles and ROLE_CONTRIBUTOR in roles}

    kept_edges = [e for e in contrib if e.target in matched_files]
    kept_nodes = matched_files | {e.source for e in kept_edges}

    sub = ProvGraph(metadata={**graph.metadata, "query": "collab"})
    for nid in sorted(kept_nodes):
        n = graph.node(nid)
        sub.add_node(ProvNode(id=n.id, kind=n.kind, label=n.label,
                              attributes=dict(n.attributes)))
    for e in sorted(kept_edges, key=lambda e: e.id):
        sub.add_edge(ProvEdge(id=e.id, source=e.source, target=e.target,
                              kind=e.kind, attributes=dict(e.attributes)))
    return sub


def _agent_roles(graph: ProvGraph) -> dict[str, str]:
    """Role per agent, read off its ContributesTo edges (one role each)."""
    roles: dict[str, str] = {}
    for e in graph.edges():
        if e.kind is RelationKind.CONTRIBUTES_TO:
            roles[e.source] = e.attributes.get("role", "")
    return roles


def compute_stats(graph: ProvGraph, subgraph: ProvGraph) -> StatsRow:
    """Table-style counts for one repository: totals from the annotated
    graph, drawing sizes from the collaboration subgraph."""
    entities = agents = activities = 0
    team = ext = 0
    roles = _agent_roles(graph)
    for node in graph.nodes():
        if node.kind is NodeKind.AGENT:
            agents += 1
        elif node.kind is NodeKind.ACTIVITY:
            activities += 1
        elif is_file_entity(node):
            entities += 1
        elif is_revision_entity(node):
            authors = graph.neighbors(node.id, "out",
                                      RelationKind.WAS_ATTRIBUTED_TO)
            for a in authors:
                role = roles.get(a)
                if role == ROLE_TEAM:
                    team += 1
                elif role == ROLE_CONTRIBUTOR:
                    ext += 1
    return StatsRow(
        project=graph.metadata.get("repository", ""),
        entities=entities,
        agents=agents,
        activities=activities,
        team_contr=team,
        ext_contr=ext,
        nodes_vis=subgraph.node_count,
        edges_vis=subgraph.edge_count,
    )


def render_stats(rows: list[StatsRow], fmt: str = "table") -> str:
    """Render rows as an aligned table, CSV, or JSON array."""
    if fmt == "csv":
        out = io.StringIO()
        out.write(STATS_CSV_HEADER + "\n")
        for r in rows:
            out.write(",".join(str(getattr(r, f)) for f in STATS_FIELDS))
            out.write("\n")
        return out.getvalue()
    if fmt == "json":
        return json.dumps([asdict(r) for r in rows], indent=2) + "\n"
    if fmt == "table":
        cells = [[str(getattr(r, f)) for f in STATS_FIELDS] for r in rows]
        widths = [max(len(h), *(len(row[i]) for row in cells)) if cells
                  else len(h)
                  for i, h in enumerate(STATS_FIELDS)]
        lines = ["  ".join(h.ljust(widths[i])
                           for i, h in enumerate(STATS_FIELDS)).rstrip()]
        for row in cells:
            lines.append("  ".join(
                row[i].ljust(widths[i]) if i == 0 else row[i].rjust(widths[i])
                for i in range(len(row))).rstrip())
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown stats format {fmt!r}")
