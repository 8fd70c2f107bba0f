"""Subcommand front end: extract -> annotate -> query -> draw -> stats,
individually or as one pipeline run. Progress goes to stderr, data to
files or stdout; exit codes are 0 (ok), 1 (runtime failure), 2 (usage)."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import __version__, export, model, query, roles
from .errors import ProvenirError
from .extract import ExtractionOptions, extract
from .layout import LayoutParams, SizeMode, StyleTable, build_drawing

_LAYOUTS = {"fr": "fruchterman_reingold", "fa2": "forceatlas2"}
_SIZE_MODES = {"entity-in": "entity_in_degree", "agent-out": "agent_out_degree"}

# config-file keys mirroring the draw flags, with hard defaults
_DRAW_DEFAULTS = {
    "layout": "fr",
    "size_by": "entity-in",
    "seed": 42,
    "iters": 500,
    "frame_width": 1000.0,
    "frame_height": 1000.0,
    "fr_c": 1.0,
    "fa2_scaling": 2.0,
    "fa2_gravity": 1.0,
    "size_min": 4.0,
    "size_max": 40.0,
    "palette": "default",
    "file_color": None,            # per-color overrides on the palette
    "agent_color": None,
    "team_edge_color": None,
    "contributor_edge_color": None,
    "svg_width": 1000,
    "svg_height": 1000,
    "edge_opacity": 0.6,
    "background": "#FFFFFF",
}


def _progress(message: str) -> None:
    print(message, file=sys.stderr)


def _load_json_map(path: str | None) -> dict[str, str] | None:
    if not path:
        return None
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return {str(k): str(v) for k, v in data.items()}


def _add_draw_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--layout", choices=sorted(_LAYOUTS))
    sub.add_argument("--size-by", choices=sorted(_SIZE_MODES))
    sub.add_argument("--seed", type=int)
    sub.add_argument("--iters", type=int)
    sub.add_argument("--frame-width", type=float)
    sub.add_argument("--frame-height", type=float)
    sub.add_argument("--fr-c", type=float)
    sub.add_argument("--fa2-scaling", type=float)
    sub.add_argument("--fa2-gravity", type=float)
    sub.add_argument("--size-min", type=float)
    sub.add_argument("--size-max", type=float)
    sub.add_argument("--palette", choices=["default", "cb-safe"])
    sub.add_argument("--file-color")
    sub.add_argument("--agent-color")
    sub.add_argument("--team-edge-color")
    sub.add_argument("--contributor-edge-color")
    sub.add_argument("--svg-width", type=int)
    sub.add_argument("--svg-height", type=int)
    sub.add_argument("--edge-opacity", type=float)
    sub.add_argument("--background")
    sub.add_argument("--config", help="TOML file whose keys mirror these flags")


def _add_membership_flags(sub: argparse.ArgumentParser) -> None:
    group = sub.add_mutually_exclusive_group(required=True)
    group.add_argument("--team-file", help="membership file, one identity per line")
    group.add_argument("--forge-org", help="forge organization to fetch members from")
    sub.add_argument("--token-env",
                     help="environment variable holding the forge token")
    sub.add_argument("--forge-url", default="https://api.github.com")
    sub.add_argument("--membership-out",
                     help="write a JSON snapshot of the fetched membership")


def _draw_settings(args) -> tuple[LayoutParams, SizeMode, StyleTable,
                                  export.RenderOptions]:
    merged = dict(_DRAW_DEFAULTS)
    if getattr(args, "config", None):
        with open(args.config, "rb") as fh:
            config = tomllib.load(fh)
        for key in merged:
            if key in config:
                merged[key] = config[key]
    for key in merged:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    params = LayoutParams(
        algorithm=_LAYOUTS[merged["layout"]],
        iterations=int(merged["iters"]),
        width=float(merged["frame_width"]),
        height=float(merged["frame_height"]),
        seed=int(merged["seed"]),
        fr_c=float(merged["fr_c"]),
        fa2_scaling=float(merged["fa2_scaling"]),
        fa2_gravity=float(merged["fa2_gravity"]),
    )
    size_mode = SizeMode(mode=_SIZE_MODES[merged["size_by"]],
                         size_min=float(merged["size_min"]),
                         size_max=float(merged["size_max"]))
    base = StyleTable.cb_safe() if merged["palette"] == "cb-safe" \
        else StyleTable()
    node_colors = dict(base.node_colors)
    edge_colors = dict(base.edge_colors)
    if merged["file_color"]:
        node_colors["Entity"] = str(merged["file_color"])
    if merged["agent_color"]:
        node_colors["Agent"] = str(merged["agent_color"])
    if merged["team_edge_color"]:
        edge_colors["team"] = str(merged["team_edge_color"])
    if merged["contributor_edge_color"]:
        edge_colors["contributor"] = str(merged["contributor_edge_color"])
    style = StyleTable(node_colors=node_colors, edge_colors=edge_colors)
    render = export.RenderOptions(width_px=int(merged["svg_width"]),
                                  height_px=int(merged["svg_height"]),
                                  edge_opacity=float(merged["edge_opacity"]),
                                  background=str(merged["background"]))
    return params, size_mode, style, render


def _membership_from_args(args) -> roles.Membership:
    if args.team_file:
        return roles.load_membership_file(args.team_file)
    if not args.token_env:
        raise ProvenirError("--forge-org requires --token-env")
    token = os.environ.get(args.token_env)
    if token is None:
        raise ProvenirError(
            f"environment variable {args.token_env} is not set")
    membership = roles.fetch_membership_forge(args.forge_org, token,
                                              base_url=args.forge_url)
    if args.membership_out:
        roles.save_membership(membership, args.membership_out)
    return membership


def cmd_extract(args) -> int:
    options = ExtractionOptions(
        branch=args.branch,
        include_merges=not args.no_merges,
        detect_renames=not args.no_renames,
        path_filters=args.path_filter or None,
        alias_map=_load_json_map(args.alias_map),
    )
    graph = extract(args.repo, options)
    model.save(graph, args.out)
    _progress(f"extracted {graph.node_count} nodes / "
              f"{graph.edge_count} edges -> {args.out}")
    return 0


def cmd_annotate(args) -> int:
    graph = model.load(getattr(args, "in"))
    membership = _membership_from_args(args)
    bridge = _load_json_map(args.alias_map)
    added = roles.annotate_roles(graph, membership, bridge)
    model.save(graph, args.out)
    _progress(f"added {added} ContributesTo edges -> {args.out}")
    return 0


def cmd_query(args) -> int:
    graph = model.load(getattr(args, "in"))
    sub = query.collaboration_query(graph)
    model.save(sub, args.out)
    _progress(f"collaboration subgraph: {sub.node_count} nodes / "
              f"{sub.edge_count} edges -> {args.out}")
    return 0


def cmd_draw(args) -> int:
    sub = model.load(getattr(args, "in"))
    params, size_mode, style, render = _draw_settings(args)
    drawing = build_drawing(sub, params, size_mode, style)
    export.render_svg(drawing, args.out_svg, render)
    _progress(f"rendered {len(drawing.nodes)} nodes / "
              f"{len(drawing.edges)} edges -> {args.out_svg}")
    if args.out_graphml:
        export.export_graphml(drawing, args.out_graphml)
        _progress(f"wrote {args.out_graphml}")
    if args.out_csv_prefix:
        nodes_path = f"{args.out_csv_prefix}-nodes.csv"
        edges_path = f"{args.out_csv_prefix}-edges.csv"
        export.export_csv(drawing, nodes_path, edges_path)
        _progress(f"wrote {nodes_path} and {edges_path}")
    return 0


def cmd_stats(args) -> int:
    graph = model.load(getattr(args, "in"))
    if args.sub:
        sub = model.load(args.sub)
    else:
        sub = query.collaboration_query(graph)
    row = query.compute_stats(graph, sub)
    sys.stdout.write(query.render_stats([row], args.format))
    return 0


def cmd_pipeline(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    options = ExtractionOptions(
        branch=args.branch,
        alias_map=_load_json_map(args.alias_map),
    )
    graph = extract(args.repo, options)
    model.save(graph, out_dir / "provgraph.json")
    _progress(f"extract: {graph.node_count} nodes")

    membership = _membership_from_args(args)
    roles.annotate_roles(graph, membership)
    model.save(graph, out_dir / "annotated.json")
    _progress("annotate: done")

    sub = query.collaboration_query(graph)
    model.save(sub, out_dir / "collab.json")
    _progress(f"query: {sub.node_count} nodes / {sub.edge_count} edges")

    params, sizing, style, render = _draw_settings(args)
    for flag, filename in (("entity-in", "drawing-entity-in.svg"),
                           ("agent-out", "drawing-agent-out.svg")):
        size_mode = SizeMode(mode=_SIZE_MODES[flag],
                             size_min=sizing.size_min,
                             size_max=sizing.size_max)
        drawing = build_drawing(sub, params, size_mode, style)
        export.render_svg(drawing, out_dir / filename, render)
        _progress(f"draw: {filename}")

    row = query.compute_stats(graph, sub)
    (out_dir / "stats.csv").write_text(query.render_stats([row], "csv"),
                                       encoding="utf-8")
    sys.stdout.write(query.render_stats([row], args.format))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="provenir",
        description="Mine git history into a provenance graph and draw "
                    "team/contributor collaboration.")
    parser.add_argument("--version", action="version",
                        version=f"provenir {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("extract", help="repository -> provgraph JSON")
    p.add_argument("--repo", required=True)
    p.add_argument("--branch")
    p.add_argument("--out", required=True)
    p.add_argument("--no-renames", action="store_true",
                   help="disable rename detection")
    p.add_argument("--no-merges", action="store_true",
                   help="skip merge commits entirely")
    p.add_argument("--path-filter", action="append", metavar="GLOB")
    p.add_argument("--alias-map",
                   help="JSON map of author identity aliases")
    p.set_defaults(func=cmd_extract)

    p = subs.add_parser("annotate", help="add role-tagged contribution edges")
    p.add_argument("--in", required=True)
    p.add_argument("--out", required=True)
    _add_membership_flags(p)
    p.add_argument("--alias-map",
                   help="JSON map bridging agent identities to membership "
                        "identities")
    p.set_defaults(func=cmd_annotate)

    p = subs.add_parser("query", help="run a built-in graph query")
    p.add_argument("pattern", choices=["collab"])
    p.add_argument("--in", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_query)

    p = subs.add_parser("draw", help="lay out and render a subgraph")
    p.add_argument("--in", required=True)
    p.add_argument("--out-svg", required=True)
    p.add_argument("--out-graphml")
    p.add_argument("--out-csv-prefix")
    _add_draw_flags(p)
    p.set_defaults(func=cmd_draw)

    p = subs.add_parser("stats", help="per-repository summary statistics")
    p.add_argument("--in", required=True)
    p.add_argument("--sub", help="collaboration subgraph JSON "
                                 "(computed on the fly when omitted)")
    p.add_argument("--format", choices=["table", "csv", "json"],
                   default="table")
    p.set_defaults(func=cmd_stats)

    p = subs.add_parser("pipeline",
                        help="extract, annotate, query, draw, and report "
                             "in one run")
    p.add_argument("--repo", required=True)
    p.add_argument("--branch")
    p.add_argument("--out-dir", required=True)
    _add_membership_flags(p)
    p.add_argument("--alias-map",
                   help="JSON map of author identity aliases")
    p.add_argument("--format", choices=["table", "csv", "json"],
                   default="table")
    _add_draw_flags(p)
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed usage/help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ProvenirError as exc:
        print(f"provenir: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"provenir: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
