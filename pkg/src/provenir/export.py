"""Serialization of graphs and drawings (GraphML, CSV, DOT, provgraph JSON)
and standalone SVG rendering. All writers are bit-exact for identical
inputs."""

from __future__ import annotations

import json
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path
from xml.sax.saxutils import escape, quoteattr

from .errors import ParseError, UnknownKind
from .layout import DrawingEdge, DrawingGraph, DrawingNode, SizeMode, StyleTable
from .model import NodeKind, ProvGraph, to_json

GRAPHML_NS = "http://graphml.graphdrawing.org/xmlns"
_XSI = "http://www.w3.org/2001/XMLSchema-instance"
_SCHEMA = f"{GRAPHML_NS} {GRAPHML_NS}/1.0/graphml.xsd"

# Declared GraphML keys, in emission order.
_NODE_KEYS = (("d0", "label", "string"), ("d1", "kind", "string"),
              ("d2", "size", "double"), ("d3", "x", "double"),
              ("d4", "y", "double"), ("d5", "color", "string"))
_EDGE_KEYS = (("d6", "role", "string"), ("d7", "color", "string"))


def _node_rows(obj: ProvGraph | DrawingGraph) -> list[dict]:
    if isinstance(obj, DrawingGraph):
        rows = [{"id": n.id, "label": n.label, "kind": n.kind, "size": n.size,
                 "x": n.x, "y": n.y, "color": n.color} for n in obj.nodes]
    else:
        rows = [{"id": n.id, "label": n.label, "kind": n.kind.value,
                 "size": None, "x": None, "y": None, "color": None}
                for n in obj.nodes()]
    rows.sort(key=lambda r: r["id"])
    return rows


def _edge_rows(obj: ProvGraph | DrawingGraph) -> list[dict]:
    if isinstance(obj, DrawingGraph):
        rows = [{"id": e.id, "source": e.source, "target": e.target,
                 "role": e.role, "color": e.color} for e in obj.edges]
    else:
        rows = [{"id": e.id, "source": e.source, "target": e.target,
                 "role": e.attributes.get("role"), "color": None}
                for e in obj.edges()]
    rows.sort(key=lambda r: r["id"])
    return rows


def _fmt(value) -> str:
    return repr(value) if isinstance(value, float) else str(value)


# --- GraphML ---

def graphml_string(obj: ProvGraph | DrawingGraph) -> str:
    """GraphML 1.0 document with the declared node/edge keys; elements
    sorted by id; data elements omitted for absent values."""
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<graphml xmlns="{GRAPHML_NS}" xmlns:xsi="{_XSI}" '
        f'xsi:schemaLocation="{_SCHEMA}">',
    ]
    for kid, name, typ in _NODE_KEYS:
        lines.append(f'  <key id="{kid}" for="node" attr.name="{name}" '
                     f'attr.type="{typ}"/>')
    for kid, name, typ in _EDGE_KEYS:
        lines.append(f'  <key id="{kid}" for="edge" attr.name="{name}" '
                     f'attr.type="{typ}"/>')
    lines.append('  <graph id="G" edgedefault="directed">')
    for row in _node_rows(obj):
        datas = [(kid, row[name]) for kid, name, _ in _NODE_KEYS
                 if row[name] is not None]
        lines.append(f'    <node id={quoteattr(row["id"])}>')
        for kid, value in datas:
            lines.append(f'      <data key="{kid}">{escape(_fmt(value))}'
                         f'</data>')
        lines.append('    </node>')
    for row in _edge_rows(obj):
        lines.append(f'    <edge id={quoteattr(row["id"])} '
                     f'source={quoteattr(row["source"])} '
                     f'target={quoteattr(row["target"])}>')
        for kid, name, _ in _EDGE_KEYS:
            if row[name] is not None:
                lines.append(f'      <data key="{kid}">'
                             f'{escape(_fmt(row[name]))}</data>')
        lines.append('    </edge>')
    lines.append('  </graph>')
    lines.append('</graphml>')
    return "\n".join(lines) + "\n"


def export_graphml(obj: ProvGraph | DrawingGraph, path: str | Path) -> None:
    Path(path).write_text(graphml_string(obj), encoding="utf-8")


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def import_graphml(path: str | Path) -> DrawingGraph:
    """Read a GraphML file written with our key set back into a drawing.

    Missing data default to size 4, position (0,0), and color by kind; the
    frame is inferred from the position bounds (at least 1000x1000).
    """
    try:
        tree = ET.parse(str(path))
    except ET.ParseError as exc:
        raise ParseError(f"GraphML parse failure in {path}: {exc}") from exc
    root = tree.getroot()
    if _local(root.tag) != "graphml":
        raise ParseError(f"{path}: root element is {root.tag!r}, "
                         f"expected graphml")
    graph_el = next((el for el in root if _local(el.tag) == "graph"), None)
    if graph_el is None:
        raise ParseError(f"{path}: no <graph> element")

    key_names: dict[str, str] = {}
    for el in root:
        if _local(el.tag) == "key" and "id" in el.attrib:
            key_names[el.attrib["id"]] = el.attrib.get("attr.name", "")

    def data_of(el) -> dict[str, str]:
        out = {}
        for child in el:
            if _local(child.tag) == "data":
                name = key_names.get(child.attrib.get("key", ""), "")
                out[name] = child.text or ""
        return out

    style = StyleTable()
    default_size = SizeMode().size_min
    valid_kinds = {k.value for k in NodeKind}

    drawing = DrawingGraph()
    for el in graph_el:
        tag = _local(el.tag)
        if tag == "node":
            if "id" not in el.attrib:
                raise ParseError(f"{path}: <node> without id")
            d = data_of(el)
            kind = d.get("kind", NodeKind.ENTITY.value)
            if kind not in valid_kinds:
                raise UnknownKind(
                    f"{path}: node {el.attrib['id']!r} has kind {kind!r}")
            try:
                x = float(d.get("x", "0") or 0)
                y = float(d.get("y", "0") or 0)
                size = float(d.get("size", "") or default_size)
            except ValueError as exc:
                raise ParseError(
                    f"{path}: bad numeric data on node "
                    f"{el.attrib['id']!r}: {exc}") from exc
            color = d.get("color") or style.node_colors.get(kind, "#999999")
            drawing.nodes.append(DrawingNode(
                id=el.attrib["id"], label=d.get("label", ""), kind=kind,
                x=x, y=y, size=size, color=color))
        elif tag == "edge":
            if not {"source", "target"} <= el.attrib.keys():
                raise ParseError(f"{path}: <edge> without source/target")
            d = data_of(el)
            role = d.get("role", "")
            color = d.get("color") or style.edge_colors.get(role, "#999999")
            drawing.edges.append(DrawingEdge(
                id=el.attrib.get("id",
                                 f'{el.attrib["source"]}->{el.attrib["target"]}'),
                source=el.attrib["source"], target=el.attrib["target"],
                role=role, color=color))

    span_x = max((n.x for n in drawing.nodes), default=0.0)
    span_y = max((n.y for n in drawing.nodes), default=0.0)
    drawing.width = max(1000.0, span_x)
    drawing.height = max(1000.0, span_y)
    bad = drawing.problems()
    if bad:
        raise ParseError(f"{path}: imported drawing invalid: {bad[0]}")
    return drawing


# --- CSV ---

NODES_CSV_HEADER = ["id", "kind", "label", "size", "x", "y", "color"]
EDGES_CSV_HEADER = ["id", "source", "target", "role", "color"]


def export_csv(obj: ProvGraph | DrawingGraph, nodes_path: str | Path,
               edges_path: str | Path) -> None:
    """RFC-4180 CSV pair (nodes + edges), rows sorted by id."""
    import csv

    with open(nodes_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(NODES_CSV_HEADER)
        for r in _node_rows(obj):
            writer.writerow([r["id"], r["kind"], r["label"],
                             "" if r["size"] is None else _fmt(r["size"]),
                             "" if r["x"] is None else _fmt(r["x"]),
                             "" if r["y"] is None else _fmt(r["y"]),
                             r["color"] or ""])
    with open(edges_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(EDGES_CSV_HEADER)
        for r in _edge_rows(obj):
            writer.writerow([r["id"], r["source"], r["target"],
                             r["role"] or "", r["color"] or ""])


# --- provgraph JSON (v1, plus drawing extensions) ---

def json_string(obj: ProvGraph | DrawingGraph) -> str:
    """provgraph JSON v1; drawings add x/y/size/color to the same shape."""
    if isinstance(obj, ProvGraph):
        return to_json(obj)
    doc = {
        "metadata": {"frame_height": _fmt(obj.height),
                     "frame_width": _fmt(obj.width)},
        "nodes": [
            {"id": n.id, "kind": n.kind, "label": n.label, "attributes": {},
             "x": n.x, "y": n.y, "size": n.size, "color": n.color}
            for n in sorted(obj.nodes, key=lambda n: n.id)
        ],
        "edges": [
            {"id": e.id, "source": e.source, "target": e.target,
             "kind": "ContributesTo", "attributes": {"role": e.role},
             "color": e.color}
            for e in sorted(obj.edges, key=lambda e: e.id)
        ],
    }
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def export_json(obj: ProvGraph | DrawingGraph, path: str | Path) -> None:
    Path(path).write_text(json_string(obj), encoding="utf-8")


# --- DOT ---

def _dot_quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_dot(obj: ProvGraph | DrawingGraph) -> str:
    """DOT digraph with fillcolor/width on nodes and color on edges where
    known; all ids quoted."""
    lines = ["digraph {"]
    for r in _node_rows(obj):
        attrs = []
        if r["color"]:
            attrs.append(f'fillcolor="{r["color"]}"')
            attrs.append("style=filled")
        if r["size"] is not None:
            attrs.append(f'width={r["size"] / 96:.4f}')  # px -> inches
        suffix = f' [{", ".join(attrs)}]' if attrs else ""
        lines.append(f'  {_dot_quote(r["id"])}{suffix};')
    for r in _edge_rows(obj):
        attr = f' [color="{r["color"]}"]' if r["color"] else ""
        lines.append(f'  {_dot_quote(r["source"])} -> '
                     f'{_dot_quote(r["target"])}{attr};')
    lines.append("}")
    return "\n".join(lines) + "\n"


# --- SVG ---

@dataclass
class RenderOptions:
    width_px: int = 1000
    height_px: int = 1000
    edge_opacity: float = 0.6
    background: str = "#FFFFFF"


def svg_string(drawing: DrawingGraph,
               options: RenderOptions | None = None) -> str:
    """Standalone SVG 1.1: background rect, then edges, then nodes.

    The abstract frame maps affinely onto the pixel viewport preserving
    aspect ratio; node radius is size/2 in pixels.
    """
    opts = options or RenderOptions()
    bad = drawing.problems()
    if bad:
        raise ValueError(f"drawing violates invariants: {bad[0]}")

    scale = min(opts.width_px / drawing.width,
                opts.height_px / drawing.height)
    off_x = (opts.width_px - scale * drawing.width) / 2.0
    off_y = (opts.height_px - scale * drawing.height) / 2.0

    def px(x: float, y: float) -> tuple[str, str]:
        return f"{off_x + scale * x:.2f}", f"{off_y + scale * y:.2f}"

    place = {n.id: px(n.x, n.y) for n in drawing.nodes}
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{opts.width_px}" height="{opts.height_px}">',
        f'  <rect x="0" y="0" width="{opts.width_px}" '
        f'height="{opts.height_px}" fill="{opts.background}"/>',
    ]
    for e in drawing.edges:
        if e.source not in place or e.target not in place:
            raise ValueError(f"edge {e.id!r} references a node missing "
                             f"from the drawing")
        (x1, y1), (x2, y2) = place[e.source], place[e.target]
        lines.append(f'  <line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" '
                     f'stroke="{e.color}" stroke-width="1" '
                     f'stroke-opacity="{opts.edge_opacity}"/>')
    for n in drawing.nodes:
        cx, cy = place[n.id]
        lines.append(f'  <circle cx="{cx}" cy="{cy}" r="{n.size / 2:.2f}" '
                     f'fill="{n.color}"/>')
    lines.append('</svg>')
    return "\n".join(lines) + "\n"


def render_svg(drawing: DrawingGraph, path: str | Path,
               options: RenderOptions | None = None) -> None:
    Path(path).write_text(svg_string(drawing, options), encoding="utf-8")
