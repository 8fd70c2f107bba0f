"""PROV-style labeled property graph: typed nodes and relations, validity
rules, an in-memory store with basic traversal, and the canonical JSON
serialization (provgraph JSON v1)."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterator, Literal
from urllib.parse import quote

from .errors import (
    DanglingEndpoint,
    DuplicateId,
    KindMismatch,
    MissingRole,
    ParseError,
    UnknownId,
)

Direction = Literal["in", "out", "both"]

ROLES = ("team", "contributor")


class NodeKind(str, Enum):
    ENTITY = "Entity"
    ACTIVITY = "Activity"
    AGENT = "Agent"


class RelationKind(str, Enum):
    USED = "Used"
    WAS_GENERATED_BY = "WasGeneratedBy"
    WAS_ASSOCIATED_WITH = "WasAssociatedWith"
    WAS_ATTRIBUTED_TO = "WasAttributedTo"
    WAS_DERIVED_FROM = "WasDerivedFrom"
    SPECIALIZATION_OF = "SpecializationOf"
    WAS_INFORMED_BY = "WasInformedBy"
    CONTRIBUTES_TO = "ContributesTo"


# Legal (source kind, target kind) per relation.
ENDPOINT_KINDS: dict[RelationKind, tuple[NodeKind, NodeKind]] = {
    RelationKind.USED: (NodeKind.ACTIVITY, NodeKind.ENTITY),
    RelationKind.WAS_GENERATED_BY: (NodeKind.ENTITY, NodeKind.ACTIVITY),
    RelationKind.WAS_ASSOCIATED_WITH: (NodeKind.ACTIVITY, NodeKind.AGENT),
    RelationKind.WAS_ATTRIBUTED_TO: (NodeKind.ENTITY, NodeKind.AGENT),
    RelationKind.WAS_DERIVED_FROM: (NodeKind.ENTITY, NodeKind.ENTITY),
    RelationKind.SPECIALIZATION_OF: (NodeKind.ENTITY, NodeKind.ENTITY),
    RelationKind.WAS_INFORMED_BY: (NodeKind.ACTIVITY, NodeKind.ACTIVITY),
    RelationKind.CONTRIBUTES_TO: (NodeKind.AGENT, NodeKind.ENTITY),
}

# The dependency relations whose subgraph must stay acyclic.
DAG_KINDS = frozenset({
    RelationKind.USED,
    RelationKind.WAS_GENERATED_BY,
    RelationKind.WAS_DERIVED_FROM,
    RelationKind.WAS_INFORMED_BY,
    RelationKind.SPECIALIZATION_OF,
})


@dataclass
class ProvNode:
    id: str
    kind: NodeKind
    label: str = ""
    attributes: dict[str, str] = field(default_factory=dict)


@dataclass
class ProvEdge:
    id: str
    source: str
    target: str
    kind: RelationKind
    attributes: dict[str, str] = field(default_factory=dict)


@dataclass
class Violation:
    """One invariant breach found by ProvGraph.validate()."""

    code: str       # dangling-endpoint | kind-mismatch | missing-role | cycle
    subject: str    # offending edge id, or smallest node id of a cycle
    message: str


# --- deterministic id scheme shared by extraction, roles, and queries ---

ACTIVITY_PREFIX = "activity:"
FILE_PREFIX = "file:"
REVISION_PREFIX = "revision:"
AGENT_PREFIX = "agent:"


def activity_id(commit_hash: str) -> str:
    return ACTIVITY_PREFIX + commit_hash


def file_id(path: str) -> str:
    return FILE_PREFIX + path


def revision_id(path: str, commit_hash: str) -> str:
    return f"{REVISION_PREFIX}{path}@{commit_hash}"


def agent_id(identity: str) -> str:
    return AGENT_PREFIX + identity


def edge_id(tag: str, source_id: str, target_id: str) -> str:
    """Deterministic, injective edge id from a short tag and the endpoint ids.

    Endpoint ids are percent-encoded so paths containing separator
    characters cannot make two distinct endpoint pairs collide.
    """
    return f"{tag}:{quote(source_id, safe='')}:{quote(target_id, safe='')}"


def is_file_entity(node: ProvNode) -> bool:
    return node.kind is NodeKind.ENTITY and node.id.startswith(FILE_PREFIX)


def is_revision_entity(node: ProvNode) -> bool:
    return node.kind is NodeKind.ENTITY and node.id.startswith(REVISION_PREFIX)


class ProvGraph:
    """In-memory labeled property graph. Append-only: nodes and edges are
    added, never mutated or removed; reads are safe once construction ends."""

    def __init__(self, metadata: dict[str, str] | None = None):
        self.metadata: dict[str, str] = dict(metadata or {})
        self._nodes: dict[str, ProvNode] = {}
        self._edges: dict[str, ProvEdge] = {}
        self._out: dict[str, list[str]] = {}   # node id -> outgoing edge ids
        self._in: dict[str, list[str]] = {}    # node id -> incoming edge ids

    # --- introspection ---

    @property
    def node_count(self) -> int:
        return len(self._nodes)

    @property
    def edge_count(self) -> int:
        return len(self._edges)

    def nodes(self) -> Iterator[ProvNode]:
        return iter(self._nodes.values())

    def edges(self) -> Iterator[ProvEdge]:
        return iter(self._edges.values())

    def has_node(self, node_id: str) -> bool:
        return node_id in self._nodes

    def node(self, node_id: str) -> ProvNode:
        try:
            return self._nodes[node_id]
        except KeyError:
            raise UnknownId(f"no node with id {node_id!r}") from None

    def edge(self, edge_id_: str) -> ProvEdge:
        try:
            return self._edges[edge_id_]
        except KeyError:
            raise UnknownId(f"no edge with id {edge_id_!r}") from None

    # --- construction ---

    def add_node(self, node: ProvNode) -> str:
        if node.id in self._nodes:
            raise DuplicateId(f"node id {node.id!r} already exists")
        self._nodes[node.id] = node
        self._out[node.id] = []
        self._in[node.id] = []
        return node.id

    def add_edge(self, edge: ProvEdge) -> str:
        if edge.id in self._edges:
            raise DuplicateId(f"edge id {edge.id!r} already exists")
        src = self._nodes.get(edge.source)
        dst = self._nodes.get(edge.target)
        if src is None or dst is None:
            missing = edge.source if src is None else edge.target
            raise DanglingEndpoint(
                f"edge {edge.id!r} references missing node {missing!r}")
        want = ENDPOINT_KINDS[edge.kind]
        if (src.kind, dst.kind) != want:
            raise KindMismatch(
                f"{edge.kind.value} requires {want[0].value}->{want[1].value}, "
                f"got {src.kind.value}->{dst.kind.value} on edge {edge.id!r}")
        if edge.kind is RelationKind.CONTRIBUTES_TO:
            role = edge.attributes.get("role")
            if role not in ROLES:
                raise MissingRole(
                    f"ContributesTo edge {edge.id!r} needs attribute "
                    f"role in {ROLES}, got {role!r}")
        self._edges[edge.id] = edge
        self._out[edge.source].append(edge.id)
        self._in[edge.target].append(edge.id)
        return edge.id

    # --- traversal ---

    def neighbors(self, node_id: str, direction: Direction = "both",
                  kind: RelationKind | None = None) -> list[str]:
        """Adjacent node ids, one entry per matching edge (parallel edges
        repeat), sorted ascending."""
        if node_id not in self._nodes:
            raise UnknownId(f"no node with id {node_id!r}")
        if direction not in ("in", "out", "both"):
            raise ValueError(f"direction must be in|out|both, got {direction!r}")
        found: list[str] = []
        if direction in ("out", "both"):
            for eid in self._out[node_id]:
                e = self._edges[eid]
                if kind is None or e.kind is kind:
                    found.append(e.target)
        if direction in ("in", "both"):
            for eid in self._in[node_id]:
                e = self._edges[eid]
                if kind is None or e.kind is kind:
                    found.append(e.source)
        found.sort()
        return found

    def in_edges(self, node_id: str) -> list[ProvEdge]:
        if node_id not in self._nodes:
            raise UnknownId(f"no node with id {node_id!r}")
        return [self._edges[eid] for eid in self._in[node_id]]

    def out_edges(self, node_id: str) -> list[ProvEdge]:
        if node_id not in self._nodes:
            raise UnknownId(f"no node with id {node_id!r}")
        return [self._edges[eid] for eid in self._out[node_id]]

    def degree(self, node_id: str, direction: Direction = "both") -> int:
        """Edge count at a node; parallel edges count individually."""
        if node_id not in self._nodes:
            raise UnknownId(f"no node with id {node_id!r}")
        if direction not in ("in", "out", "both"):
            raise ValueError(f"direction must be in|out|both, got {direction!r}")
        n = 0
        if direction in ("out", "both"):
            n += len(self._out[node_id])
        if direction in ("in", "both"):
            n += len(self._in[node_id])
        return n

    # --- validation ---

    def validate(self) -> list[Violation]:
        """Check every graph invariant; returns one record per breach.

        Violations are data, not failures: a clean graph returns [].
        """
        violations: list[Violation] = []
        for edge in self._edges.values():
            src = self._nodes.get(edge.source)
            dst = self._nodes.get(edge.target)
            if src is None or dst is None:
                missing = [x for x in (edge.source, edge.target)
                           if x not in self._nodes]
                violations.append(Violation(
                    "dangling-endpoint", edge.id,
                    f"edge {edge.id!r} references missing node(s) {missing}"))
                continue
            want = ENDPOINT_KINDS[edge.kind]
            if (src.kind, dst.kind) != want:
                violations.append(Violation(
                    "kind-mismatch", edge.id,
                    f"{edge.kind.value} requires "
                    f"{want[0].value}->{want[1].value}, got "
                    f"{src.kind.value}->{dst.kind.value}"))
            if edge.kind is RelationKind.CONTRIBUTES_TO:
                if edge.attributes.get("role") not in ROLES:
                    violations.append(Violation(
                        "missing-role", edge.id,
                        f"ContributesTo edge {edge.id!r} lacks a valid role"))
        violations.extend(self._cycle_violations())
        return violations

    def _cycle_violations(self) -> list[Violation]:
        """One violation per strongly connected cycle in the subgraph of
        dependency relations (Used, WasGeneratedBy, WasDerivedFrom,
        WasInformedBy, SpecializationOf)."""
        adj: dict[str, list[str]] = {}
        self_loops: set[str] = set()
        for edge in self._edges.values():
            if edge.kind not in DAG_KINDS:
                continue
            if edge.source not in self._nodes or edge.target not in self._nodes:
                continue
            adj.setdefault(edge.source, []).append(edge.target)
            adj.setdefault(edge.target, [])
            if edge.source == edge.target:
                self_loops.add(edge.source)

        # Iterative Tarjan: history chains can be thousands of nodes deep.
        index_of: dict[str, int] = {}
        low: dict[str, int] = {}
        on_stack: set[str] = set()
        stack: list[str] = []
        counter = 0
        sccs: list[list[str]] = []

        for root in adj:
            if root in index_of:
                continue
            work: list[tuple[str, int]] = [(root, 0)]
            while work:
                v, i = work[-1]
                if i == 0:
                    index_of[v] = low[v] = counter
                    counter += 1
                    stack.append(v)
                    on_stack.add(v)
                advanced = False
                for j in range(i, len(adj[v])):
                    w = adj[v][j]
                    if w not in index_of:
                        work[-1] = (v, j + 1)
                        work.append((w, 0))
                        advanced = True
                        break
                    if w in on_stack:
                        low[v] = min(low[v], index_of[w])
                if advanced:
                    continue
                work.pop()
                if low[v] == index_of[v]:
                    comp = []
                    while True:
                        w = stack.pop()
                        on_stack.discard(w)
                        comp.append(w)
                        if w == v:
                            break
                    sccs.append(comp)
                if work:
                    parent = work[-1][0]
                    low[parent] = min(low[parent], low[v])

        out: list[Violation] = []
        for comp in sccs:
            if len(comp) > 1 or comp[0] in self_loops:
                members = sorted(comp)
                out.append(Violation(
                    "cycle", members[0],
                    f"dependency cycle through {members}"))
        out.sort(key=lambda v: v.subject)
        return out


# --- provgraph JSON v1 ---

def to_json_dict(graph: ProvGraph) -> dict:
    """Canonical dict form: metadata, then nodes/edges sorted by id."""
    return {
        "metadata": {k: graph.metadata[k] for k in sorted(graph.metadata)},
        "nodes": [
            {
                "id": n.id,
                "kind": n.kind.value,
                "label": n.label,
                "attributes": {k: n.attributes[k] for k in sorted(n.attributes)},
            }
            for n in sorted(graph.nodes(), key=lambda n: n.id)
        ],
        "edges": [
            {
                "id": e.id,
                "source": e.source,
                "target": e.target,
                "kind": e.kind.value,
                "attributes": {k: e.attributes[k] for k in sorted(e.attributes)},
            }
            for e in sorted(graph.edges(), key=lambda e: e.id)
        ],
    }


def to_json(graph: ProvGraph) -> str:
    return json.dumps(to_json_dict(graph), indent=2, ensure_ascii=False) + "\n"


def from_json_dict(data: dict) -> ProvGraph:
    try:
        graph = ProvGraph(metadata={str(k): str(v)
                                    for k, v in data.get("metadata", {}).items()})
        for n in data["nodes"]:
            graph.add_node(ProvNode(
                id=n["id"],
                kind=NodeKind(n["kind"]),
                label=n.get("label", ""),
                attributes=dict(n.get("attributes", {})),
            ))
        for e in data["edges"]:
            graph.add_edge(ProvEdge(
                id=e["id"],
                source=e["source"],
                target=e["target"],
                kind=RelationKind(e["kind"]),
                attributes=dict(e.get("attributes", {})),
            ))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"not a provgraph JSON v1 document: {exc}") from exc
    return graph


def from_json(text: str) -> ProvGraph:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    return from_json_dict(data)


def save(graph: ProvGraph, path: str | Path) -> None:
    Path(path).write_text(to_json(graph), encoding="utf-8")


def load(path: str | Path) -> ProvGraph:
    return from_json(Path(path).read_text(encoding="utf-8"))
