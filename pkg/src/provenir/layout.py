"""Force-directed 2-D layout (Fruchterman-Reingold and ForceAtlas2),
degree-proportional node sizing, and qualitative-palette styling for
collaboration subgraphs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyGraph, UnknownRole
from .model import NodeKind, ProvGraph

# Default palette: nodes from the 3-class Set2 qualitative scheme, edges
# from 3-class Set1 (see README for the colorblind-safe alternative).
FILE_COLOR = "#66C2A5"
AGENT_COLOR = "#FC8D62"
TEAM_EDGE_COLOR = "#377EB8"
CONTRIBUTOR_EDGE_COLOR = "#E41A1C"

CB_SAFE_FILE_COLOR = "#009E73"
CB_SAFE_AGENT_COLOR = "#E69F00"
CB_SAFE_TEAM_EDGE_COLOR = "#0072B2"
CB_SAFE_CONTRIBUTOR_EDGE_COLOR = "#D55E00"

ALGORITHMS = ("fruchterman_reingold", "forceatlas2")
SIZE_MODES = ("entity_in_degree", "agent_out_degree")


@dataclass
class LayoutParams:
    algorithm: str = "fruchterman_reingold"
    iterations: int = 500
    width: float = 1000.0
    height: float = 1000.0
    seed: int = 42
    fr_c: float = 1.0           # optimal-distance coefficient
    fa2_scaling: float = 2.0    # repulsion scaling k_r
    fa2_gravity: float = 1.0

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown layout algorithm {self.algorithm!r}")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("frame dimensions must be positive")


@dataclass
class SizeMode:
    mode: str = "entity_in_degree"
    size_min: float = 4.0
    size_max: float = 40.0

    def __post_init__(self):
        if self.mode not in SIZE_MODES:
            raise ValueError(f"unknown size mode {self.mode!r}")
        if not self.size_min < self.size_max:
            raise ValueError("size_min must be < size_max")


@dataclass
class StyleTable:
    node_colors: dict[str, str] = field(default_factory=lambda: {
        NodeKind.ENTITY.value: FILE_COLOR,
        NodeKind.AGENT.value: AGENT_COLOR,
        NodeKind.ACTIVITY.value: "#999999",
    })
    edge_colors: dict[str, str] = field(default_factory=lambda: {
        "team": TEAM_EDGE_COLOR,
        "contributor": CONTRIBUTOR_EDGE_COLOR,
    })

    def __post_init__(self):
        if self.node_colors.get(NodeKind.ENTITY.value) == \
                self.node_colors.get(NodeKind.AGENT.value):
            raise ValueError("file and agent colors must differ")
        if self.edge_colors.get("team") == self.edge_colors.get("contributor"):
            raise ValueError("team and contributor edge colors must differ")

    @classmethod
    def cb_safe(cls) -> "StyleTable":
        """Colorblind-safe alternative palette (Okabe-Ito hues)."""
        return cls(
            node_colors={
                NodeKind.ENTITY.value: CB_SAFE_FILE_COLOR,
                NodeKind.AGENT.value: CB_SAFE_AGENT_COLOR,
                NodeKind.ACTIVITY.value: "#999999",
            },
            edge_colors={
                "team": CB_SAFE_TEAM_EDGE_COLOR,
                "contributor": CB_SAFE_CONTRIBUTOR_EDGE_COLOR,
            },
        )


@dataclass
class DrawingNode:
    id: str
    label: str
    kind: str
    x: float
    y: float
    size: float
    color: str


@dataclass
class DrawingEdge:
    id: str
    source: str
    target: str
    role: str
    color: str


@dataclass
class DrawingGraph:
    nodes: list[DrawingNode] = field(default_factory=list)
    edges: list[DrawingEdge] = field(default_factory=list)
    width: float = 1000.0
    height: float = 1000.0

    def problems(self) -> list[str]:
        """Invariant breaches: non-finite coordinates/sizes or positions
        outside the frame."""
        out = []
        for n in self.nodes:
            if not (math.isfinite(n.x) and math.isfinite(n.y)):
                out.append(f"node {n.id!r} has non-finite position")
            elif not (0 <= n.x <= self.width and 0 <= n.y <= self.height):
                out.append(f"node {n.id!r} lies outside the frame")
            if not math.isfinite(n.size) or n.size <= 0:
                out.append(f"node {n.id!r} has invalid size {n.size}")
        return out


def _index_graph(graph: ProvGraph):
    ids = [n.id for n in graph.nodes()]
    if not ids:
        raise EmptyGraph("layout requires at least one node")
    index = {nid: i for i, nid in enumerate(ids)}
    edges = [(index[e.source], index[e.target]) for e in graph.edges()
             if e.source != e.target]
    return ids, index, edges


def layout_fr(graph: ProvGraph, params: LayoutParams,
              on_step=None) -> dict[str, tuple[float, float]]:
    """Classic Fruchterman-Reingold layout.

    Optimal distance k = C*sqrt(W*H/n); repulsion k^2/d between all pairs
    and attraction d^2/k along edges; per-iteration displacement is capped
    by a temperature cooled linearly from W/10 to 0. Initial positions are
    uniform-random in the frame from the seed, and positions are clamped
    to the frame, so the result is a pure function of (graph order,
    params). `on_step(iteration, positions, temperature)` is an optional
    instrumentation hook, called with iteration -1 for the initial
    placement and then after every iteration.
    """
    ids, _, edges = _index_graph(graph)
    n = len(ids)
    w, h = params.width, params.height
    if n == 1:
        return {ids[0]: (w / 2.0, h / 2.0)}

    rng = np.random.default_rng(params.seed)
    pos = rng.uniform(size=(n, 2)) * np.array([w, h])
    k = params.fr_c * math.sqrt(w * h / n)
    t0 = w / 10.0
    eps = 1e-9
    if on_step is not None:
        on_step(-1, pos.copy(), t0)

    src = np.array([e[0] for e in edges], dtype=np.intp)
    dst = np.array([e[1] for e in edges], dtype=np.intp)

    for it in range(params.iterations):
        t = t0 * (1.0 - it / params.iterations)

        delta = pos[:, None, :] - pos[None, :, :]
        dist = np.sqrt(np.sum(delta * delta, axis=2))
        np.fill_diagonal(dist, 1.0)
        dist = np.maximum(dist, eps)
        # repulsion k^2/d along delta/d  ->  delta * k^2/d^2
        coeff = (k * k) / (dist * dist)
        np.fill_diagonal(coeff, 0.0)
        disp = np.sum(delta * coeff[:, :, None], axis=1)

        if len(edges):
            edelta = pos[src] - pos[dst]
            edist = np.maximum(np.sqrt(np.sum(edelta * edelta, axis=1)), eps)
            # attraction d^2/k along delta/d  ->  delta * d/k
            pull = edelta * (edist / k)[:, None]
            np.add.at(disp, src, -pull)
            np.add.at(disp, dst, pull)

        length = np.maximum(np.sqrt(np.sum(disp * disp, axis=1)), eps)
        factor = np.minimum(length, t) / length
        pos = pos + disp * factor[:, None]
        pos[:, 0] = np.clip(pos[:, 0], 0.0, w)
        pos[:, 1] = np.clip(pos[:, 1], 0.0, h)
        if on_step is not None:
            on_step(it, pos.copy(), t)

    return {nid: (float(pos[i, 0]), float(pos[i, 1]))
            for i, nid in enumerate(ids)}


def layout_fa2(graph: ProvGraph, params: LayoutParams,
               on_step=None) -> dict[str, tuple[float, float]]:
    """ForceAtlas2 layout with the published adaptive-speed heuristic.

    Linear attraction along edges, degree-weighted repulsion
    k_r*(deg_u+1)*(deg_v+1)/d, and gravity g*(deg+1) toward the frame
    center. Global speed follows the swinging/traction heuristic with
    jitter tolerance 1; determinism and clamping match layout_fr.
    """
    ids, index, edges = _index_graph(graph)
    n = len(ids)
    w, h = params.width, params.height
    if n == 1:
        return {ids[0]: (w / 2.0, h / 2.0)}

    rng = np.random.default_rng(params.seed)
    pos = rng.uniform(size=(n, 2)) * np.array([w, h])
    center = np.array([w / 2.0, h / 2.0])
    mass = np.ones(n)
    for nid in ids:
        mass[index[nid]] += graph.degree(nid, "both")
    k_r = params.fa2_scaling
    g = params.fa2_gravity
    eps = 1e-9

    src = np.array([e[0] for e in edges], dtype=np.intp)
    dst = np.array([e[1] for e in edges], dtype=np.intp)

    speed = 1.0
    speed_efficiency = 1.0
    forces_old = np.zeros((n, 2))
    if on_step is not None:
        on_step(-1, pos.copy(), speed)

    for it in range(params.iterations):
        delta = pos[:, None, :] - pos[None, :, :]
        dist = np.sqrt(np.sum(delta * delta, axis=2))
        np.fill_diagonal(dist, 1.0)
        dist = np.maximum(dist, eps)
        # repulsion k_r*m_u*m_v/d along delta/d  ->  delta * k_r*m_u*m_v/d^2
        coeff = k_r * (mass[:, None] * mass[None, :]) / (dist * dist)
        np.fill_diagonal(coeff, 0.0)
        forces = np.sum(delta * coeff[:, :, None], axis=1)

        if len(edges):
            # attraction proportional to d  ->  -delta
            edelta = pos[src] - pos[dst]
            np.add.at(forces, src, -edelta)
            np.add.at(forces, dst, edelta)

        to_center = center - pos
        cdist = np.maximum(np.sqrt(np.sum(to_center * to_center, axis=1)),
                           eps)
        forces += to_center / cdist[:, None] * (g * mass)[:, None]

        swinging = np.sqrt(np.sum((forces - forces_old) ** 2, axis=1))
        traction = 0.5 * np.sqrt(np.sum((forces + forces_old) ** 2, axis=1))
        total_swing = max(float(np.sum(mass * swinging)), eps)
        total_traction = max(float(np.sum(mass * traction)), eps)

        jitter = 0.05 * math.sqrt(n)
        jt = max(math.sqrt(jitter),
                 min(10.0, jitter * total_traction / (n * n)))
        if total_swing / total_traction > 2.0:
            speed_efficiency = max(speed_efficiency * 0.5, 0.05)
            jt = max(jt, 1.0)
        target_speed = jt * speed_efficiency * total_traction / total_swing
        if total_swing > jt * total_traction:
            speed_efficiency = max(speed_efficiency * 0.7, 0.05)
        elif speed < 1000.0:
            speed_efficiency *= 1.3
        speed = speed + min(target_speed - speed, 0.5 * speed)

        factor = speed / (1.0 + np.sqrt(speed * mass * swinging))
        pos = pos + forces * factor[:, None]
        pos[:, 0] = np.clip(pos[:, 0], 0.0, w)
        pos[:, 1] = np.clip(pos[:, 1], 0.0, h)
        forces_old = forces
        if on_step is not None:
            on_step(it, pos.copy(), speed)

    return {nid: (float(pos[i, 0]), float(pos[i, 1]))
            for i, nid in enumerate(ids)}


def assign_sizes(graph: ProvGraph, mode: SizeMode) -> dict[str, float]:
    """Linear degree-to-size interpolation for the scaled node class.

    entity_in_degree scales Entity nodes by in-degree, agent_out_degree
    scales Agent nodes by out-degree; the other class gets size_min. When
    all scaled degrees are equal every scaled node gets the midpoint.
    """
    if mode.mode == "entity_in_degree":
        scaled_kind, direction = NodeKind.ENTITY, "in"
    else:
        scaled_kind, direction = NodeKind.AGENT, "out"

    degrees = {n.id: graph.degree(n.id, direction)
               for n in graph.nodes() if n.kind is scaled_kind}
    sizes = {n.id: mode.size_min for n in graph.nodes()}
    if not degrees:
        return sizes
    lo, hi = min(degrees.values()), max(degrees.values())
    if lo == hi:
        mid = (mode.size_min + mode.size_max) / 2.0
        for nid in degrees:
            sizes[nid] = mid
        return sizes
    span = mode.size_max - mode.size_min
    for nid, deg in degrees.items():
        sizes[nid] = mode.size_min + span * (deg - lo) / (hi - lo)
    return sizes


def assign_styles(graph: ProvGraph, table: StyleTable | None = None
                  ) -> tuple[dict[str, str], dict[str, str]]:
    """Colors per node id (by kind) and per edge id (by role attribute)."""
    table = table or StyleTable()
    node_colors = {n.id: table.node_colors.get(n.kind.value, "#999999")
                   for n in graph.nodes()}
    edge_colors: dict[str, str] = {}
    for e in graph.edges():
        role = e.attributes.get("role", "")
        if role not in table.edge_colors:
            raise UnknownRole(
                f"edge {e.id!r} has role {role!r}, expected one of "
                f"{sorted(table.edge_colors)}")
        edge_colors[e.id] = table.edge_colors[role]
    return node_colors, edge_colors


def build_drawing(graph: ProvGraph, params: LayoutParams | None = None,
                  size_mode: SizeMode | None = None,
                  style: StyleTable | None = None) -> DrawingGraph:
    """Lay out, size, and color a subgraph into a renderable drawing."""
    params = params or LayoutParams()
    size_mode = size_mode or SizeMode()
    if params.algorithm == "forceatlas2":
        positions = layout_fa2(graph, params)
    else:
        positions = layout_fr(graph, params)
    sizes = assign_sizes(graph, size_mode)
    node_colors, edge_colors = assign_styles(graph, style)

    drawing = DrawingGraph(width=params.width, height=params.height)
    for n in graph.nodes():
        x, y = positions[n.id]
        drawing.nodes.append(DrawingNode(
            id=n.id, label=n.label, kind=n.kind.value,
            x=x, y=y, size=sizes[n.id], color=node_colors[n.id]))
    for e in graph.edges():
        drawing.edges.append(DrawingEdge(
            id=e.id, source=e.source, target=e.target,
            role=e.attributes.get("role", ""), color=edge_colors[e.id]))
    return drawing
