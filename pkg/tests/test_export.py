from __future__ import annotations

import csv
import json
import random
import xml.etree.ElementTree as ET
from dataclasses import asdict

import pytest

from provenir.errors import ParseError, UnknownKind
from provenir.export import (
    EDGES_CSV_HEADER,
    NODES_CSV_HEADER,
    RenderOptions,
    export_csv,
    export_dot,
    export_graphml,
    export_json,
    graphml_string,
    import_graphml,
    json_string,
    svg_string,
)
from provenir.layout import (
    DrawingEdge,
    DrawingGraph,
    DrawingNode,
    LayoutParams,
    SizeMode,
    build_drawing,
)
from provenir.model import NodeKind, ProvEdge, ProvGraph, ProvNode, RelationKind

from dot_grammar import check_dot

TRICKY = ["dir/a b.txt", 'quo"te.md', "comma,name.py", "ünïcôde.rs",
          "<tag>&amp.md", "it's.txt"]


def tiny_drawing() -> DrawingGraph:
    return DrawingGraph(
        nodes=[
            DrawingNode("agent:alice", "Alice", "Agent", 120.5, 80.25,
                        12.0, "#FC8D62"),
            DrawingNode("file:README.md", "README.md", "Entity", 640.0,
                        512.125, 22.0, "#66C2A5"),
        ],
        edges=[
            DrawingEdge("c0", "agent:alice", "file:README.md", "team",
                        "#377EB8"),
        ],
    )


def random_drawing(rng: random.Random, n_nodes: int = 8,
                   n_edges: int = 10) -> DrawingGraph:
    nodes = []
    for i in range(n_nodes):
        name = rng.choice(TRICKY)
        kind = rng.choice(["Entity", "Agent"])
        nodes.append(DrawingNode(
            id=f"{kind.lower()}:{name}#{i}", label=name, kind=kind,
            x=round(rng.uniform(0, 1000), 6), y=round(rng.uniform(0, 1000), 6),
            size=round(rng.uniform(4, 40), 6),
            color=rng.choice(["#66C2A5", "#FC8D62"])))
    edges = []
    for j in range(n_edges):
        a, b = rng.sample(nodes, 2)
        edges.append(DrawingEdge(
            id=f"e{j}", source=a.id, target=b.id,
            role=rng.choice(["team", "contributor"]),
            color=rng.choice(["#377EB8", "#E41A1C"])))
    return DrawingGraph(nodes=nodes, edges=edges)


def prov_fixture() -> ProvGraph:
    g = ProvGraph(metadata={"repository": "demo"})
    g.add_node(ProvNode(id="agent:a", kind=NodeKind.AGENT, label="a"))
    g.add_node(ProvNode(id="file:f", kind=NodeKind.ENTITY, label="f"))
    g.add_node(ProvNode(id="file:g", kind=NodeKind.ENTITY, label="g"))
    g.add_edge(ProvEdge(id="c0", source="agent:a", target="file:f",
                        kind=RelationKind.CONTRIBUTES_TO,
                        attributes={"role": "team"}))
    return g


class TestGraphML:
    def test_empty_graph_is_valid_graphml(self):
        text = graphml_string(ProvGraph())
        root = ET.fromstring(text)
        assert root.tag.endswith("graphml")
        graph = [el for el in root if el.tag.endswith("graph")]
        assert len(graph) == 1
        assert len([el for el in graph[0] if el.tag.endswith("node")]) == 0

    def test_two_nodes_one_team_edge(self):
        text = graphml_string(tiny_drawing())
        root = ET.fromstring(text)
        graph = next(el for el in root if el.tag.endswith("graph"))
        nodes = [el for el in graph if el.tag.endswith("node")]
        edges = [el for el in graph if el.tag.endswith("edge")]
        assert len(nodes) == 2
        assert len(edges) == 1
        role_data = [d.text for d in edges[0] if d.get("key") == "d6"]
        assert role_data == ["team"]

    def test_export_import_export_byte_identical(self, tmp_path):
        drawing = tiny_drawing()
        p1 = tmp_path / "one.graphml"
        p2 = tmp_path / "two.graphml"
        export_graphml(drawing, p1)
        export_graphml(import_graphml(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_import_is_field_for_field_identity(self, tmp_path):
        drawing = tiny_drawing()
        path = tmp_path / "d.graphml"
        export_graphml(drawing, path)
        again = import_graphml(path)
        assert [asdict(n) for n in sorted(again.nodes, key=lambda n: n.id)] \
            == [asdict(n) for n in sorted(drawing.nodes, key=lambda n: n.id)]
        assert [asdict(e) for e in again.edges] == \
            [asdict(e) for e in drawing.edges]
        assert (again.width, again.height) == (drawing.width, drawing.height)

    def test_round_trip_with_tricky_labels(self, tmp_path):
        drawing = random_drawing(random.Random(5))
        p1 = tmp_path / "one.graphml"
        p2 = tmp_path / "two.graphml"
        export_graphml(drawing, p1)
        export_graphml(import_graphml(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_missing_keys_get_defaults(self, tmp_path):
        path = tmp_path / "min.graphml"
        path.write_text(
            '<graphml xmlns="http://graphml.graphdrawing.org/xmlns">'
            '<key id="k" for="node" attr.name="kind" attr.type="string"/>'
            '<graph edgedefault="directed">'
            '<node id="n1"><data key="k">Agent</data></node>'
            '<node id="n2"/>'
            '<edge source="n1" target="n2"/>'
            "</graph></graphml>")
        drawing = import_graphml(path)
        n1 = next(n for n in drawing.nodes if n.id == "n1")
        n2 = next(n for n in drawing.nodes if n.id == "n2")
        assert (n1.x, n1.y, n1.size) == (0.0, 0.0, 4.0)
        assert n1.color == "#FC8D62"        # color falls back by kind
        assert n2.kind == "Entity"          # kind itself defaults to Entity
        assert drawing.edges[0].id == "n1->n2"

    def test_parse_error_has_context(self, tmp_path):
        bad = tmp_path / "bad.graphml"
        bad.write_text("<graphml><graph><node id='x'></graph>")
        with pytest.raises(ParseError):
            import_graphml(bad)
        notgraphml = tmp_path / "not.xml"
        notgraphml.write_text("<svg></svg>")
        with pytest.raises(ParseError):
            import_graphml(notgraphml)

    def test_unknown_kind_rejected(self, tmp_path):
        path = tmp_path / "kind.graphml"
        path.write_text(
            '<graphml xmlns="http://graphml.graphdrawing.org/xmlns">'
            '<key id="k" for="node" attr.name="kind" attr.type="string"/>'
            '<graph><node id="n1"><data key="k">Blob</data></node>'
            "</graph></graphml>")
        with pytest.raises(UnknownKind):
            import_graphml(path)


class TestCSV:
    def test_empty_graph_headers_only(self, tmp_path):
        export_csv(ProvGraph(), tmp_path / "n.csv", tmp_path / "e.csv")
        nodes = (tmp_path / "n.csv").read_text().strip().splitlines()
        edges = (tmp_path / "e.csv").read_text().strip().splitlines()
        assert nodes == [",".join(NODES_CSV_HEADER)]
        assert edges == [",".join(EDGES_CSV_HEADER)]

    def test_three_node_fixture_rows(self, tmp_path):
        export_csv(prov_fixture(), tmp_path / "n.csv", tmp_path / "e.csv")
        with open(tmp_path / "n.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 3
        assert rows[0]["id"] == "agent:a"   # sorted by id
        assert rows[0]["kind"] == "Agent"

    def test_round_trip_counts_on_random_drawings(self, tmp_path):
        for i in range(10):
            drawing = random_drawing(random.Random(i))
            export_csv(drawing, tmp_path / "n.csv", tmp_path / "e.csv")
            with open(tmp_path / "n.csv", newline="") as fh:
                node_rows = list(csv.DictReader(fh))
            with open(tmp_path / "e.csv", newline="") as fh:
                edge_rows = list(csv.DictReader(fh))
            assert {r["id"] for r in node_rows} == \
                {n.id for n in drawing.nodes}
            assert len(edge_rows) == len(drawing.edges)

    def test_rfc4180_quoting(self, tmp_path):
        drawing = DrawingGraph(nodes=[
            DrawingNode('a"b', 'comma,label', "Entity", 1.0, 2.0, 4.0,
                        "#66C2A5")])
        export_csv(drawing, tmp_path / "n.csv", tmp_path / "e.csv")
        raw = (tmp_path / "n.csv").read_text()
        assert '"a""b"' in raw
        assert '"comma,label"' in raw
        with open(tmp_path / "n.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert rows[0]["id"] == 'a"b'
        assert rows[0]["label"] == "comma,label"


class TestDot:
    def test_empty_graph_exact_text(self):
        assert export_dot(ProvGraph()) == "digraph {\n}\n"

    def test_single_edge_line(self):
        text = export_dot(prov_fixture())
        assert '"agent:a" -> "file:f" ' in text or \
            '"agent:a" -> "file:f";' in text

    def test_accepted_by_external_grammar(self):
        counts = check_dot(export_dot(prov_fixture()))
        assert counts["node_stmts"] == 3
        assert counts["edge_stmts"] == 1

    def test_drawing_attributes_accepted_by_grammar(self):
        text = export_dot(random_drawing(random.Random(3)))
        counts = check_dot(text)
        assert counts["node_stmts"] == 8
        assert counts["edge_stmts"] == 10

    def test_quotes_escaped(self):
        drawing = DrawingGraph(nodes=[
            DrawingNode('he said "hi"', "l", "Entity", 0.0, 0.0, 4.0,
                        "#66C2A5")])
        text = export_dot(drawing)
        check_dot(text)
        assert '\\"hi\\"' in text


class TestJSON:
    def test_prov_graph_reuses_v1(self, tmp_path):
        g = prov_fixture()
        export_json(g, tmp_path / "g.json")
        data = json.loads((tmp_path / "g.json").read_text())
        assert set(data) == {"metadata", "nodes", "edges"}
        assert data["nodes"][0]["id"] == "agent:a"

    def test_drawing_adds_position_fields(self):
        data = json.loads(json_string(tiny_drawing()))
        node = data["nodes"][0]
        assert {"id", "kind", "label", "attributes", "x", "y", "size",
                "color"} <= set(node)
        edge = data["edges"][0]
        assert edge["kind"] == "ContributesTo"
        assert edge["attributes"]["role"] == "team"

    def test_csv_json_graphml_counts_agree(self, tmp_path):
        for i in range(10):
            drawing = random_drawing(random.Random(100 + i))
            export_csv(drawing, tmp_path / "n.csv", tmp_path / "e.csv")
            data = json.loads(json_string(drawing))
            root = ET.fromstring(graphml_string(drawing))
            graph = next(el for el in root if el.tag.endswith("graph"))
            xml_nodes = [el.get("id") for el in graph
                         if el.tag.endswith("node")]
            xml_edges = [el for el in graph if el.tag.endswith("edge")]
            with open(tmp_path / "n.csv", newline="") as fh:
                csv_nodes = [r["id"] for r in csv.DictReader(fh)]
            with open(tmp_path / "e.csv", newline="") as fh:
                csv_edges = list(csv.DictReader(fh))
            json_ids = [n["id"] for n in data["nodes"]]
            assert set(xml_nodes) == set(csv_nodes) == set(json_ids)
            assert len(xml_edges) == len(csv_edges) == len(data["edges"])


class TestSVG:
    def test_empty_drawing_background_only(self):
        text = svg_string(DrawingGraph())
        assert text.count("<rect") == 1
        assert text.count("<circle") == 0
        assert text.count("<line") == 0

    def test_single_node_maps_to_viewport_center(self):
        drawing = DrawingGraph(nodes=[
            DrawingNode("n", "n", "Entity", 500.0, 500.0, 10.0, "#66C2A5")])
        text = svg_string(drawing)
        assert '<circle cx="500.00" cy="500.00" r="5.00"' in text

    def test_aspect_preserving_map_centers_offsets(self):
        drawing = DrawingGraph(
            nodes=[DrawingNode("n", "n", "Entity", 500.0, 500.0, 10.0,
                               "#66C2A5")],
            width=1000.0, height=500.0)
        text = svg_string(drawing, RenderOptions(width_px=1000,
                                                 height_px=1000))
        # frame is half as tall: scaled 1:1 but shifted down by 250
        assert '<circle cx="500.00" cy="750.00"' in text

    def test_element_counts_match_drawing(self):
        drawing = random_drawing(random.Random(11))
        text = svg_string(drawing)
        assert text.count("<circle") == len(drawing.nodes)
        assert text.count("<line") == len(drawing.edges)

    def test_edges_drawn_beneath_nodes(self):
        text = svg_string(tiny_drawing())
        assert text.index("<line") < text.index("<circle")

    def test_deterministic(self, fixture_repo):
        from provenir.extract import extract
        from provenir.query import collaboration_query
        from provenir.roles import Membership, annotate_roles
        from repo_factory import FIXTURE_TEAM

        g = extract(fixture_repo)
        annotate_roles(g, Membership(frozenset(FIXTURE_TEAM), "file"))
        sub = collaboration_query(g)
        drawing = build_drawing(sub, LayoutParams(iterations=60), SizeMode())
        assert svg_string(drawing) == svg_string(drawing)

    def test_invalid_drawing_rejected(self):
        drawing = DrawingGraph(nodes=[
            DrawingNode("n", "n", "Entity", float("nan"), 0.0, 4.0, "#fff")])
        with pytest.raises(ValueError):
            svg_string(drawing)
