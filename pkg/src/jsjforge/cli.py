"""Command line front end.

Subcommands mirror the pipeline stages: `split` decides one relative
splitting question, `maximal` iterates it to a maximal splitting, `jsj`
adds the flavor-specific reassembly, and `gog` applies single graph
transformations to a saved graph-of-groups document.

Exit codes: 0 decided, 3 exhausted (budget ran out), 4 window
insufficient (the truncated geometric window provably cannot certify an
answer at the requested parameters).
"""

import argparse
import json
import sys

from .words import default_backend, parse_presentation
from .geometry import CuspedSpace
from .hyperbolicity import derive_constants, parse_const_file
from .gog import (GraphOfGroups, assemble_jsj, collapse_edges,
                  decide_split_relative, internal_surface_edges,
                  maximal_splitting, tree_of_cylinders, validate_gog,
                  zmax_fold)

EXIT_DECIDED = 0
EXIT_EXHAUSTED = 3
EXIT_WINDOW = 4


def _load_presentation(path):
    with open(path, encoding="utf-8") as fh:
        return parse_presentation(fh.read())


def _load_gog(path):
    with open(path, encoding="utf-8") as fh:
        return GraphOfGroups.from_json(fh.read())


def _load_seeds(path):
    if path is None:
        return None
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _load_table(path):
    with open(path, encoding="utf-8") as fh:
        values = parse_const_file(fh.read())
    return derive_constants(
        values.pop("delta"), values.pop("delta_per", 0),
        n=values.pop("n", None), B=values.pop("B", None),
        V=values.pop("V", None), overrides=values)


def _geometry(args, presentation):
    if args.window is None:
        return None
    if args.const is None:
        raise SystemExit("--window requires --const")
    r_max, h_max = (int(x) for x in args.window.split(","))
    table = _load_table(args.const)
    backend = default_backend(presentation)
    space = CuspedSpace(presentation, backend, r_max, h_max)
    return space, table, args.n_cap


def _emit_dot(args, graph):
    if args.dot:
        with open(args.dot, "w", encoding="utf-8") as fh:
            fh.write(graph.to_dot())


def _common(sub):
    sub.add_argument("--budget", type=int, default=24)
    sub.add_argument("--window", metavar="R,h",
                     help="cusped-space window: ball radius, horoball height")
    sub.add_argument("--const", metavar="FILE",
                     help="JSON constant inputs (delta, delta_per, n, B, V, "
                          "overrides)")
    sub.add_argument("--seed-markings", metavar="FILE",
                     help="JSON seed file; every entry is re-verified and "
                          "labelled in the trace")
    sub.add_argument("--n-cap", type=int, default=None)
    sub.add_argument("--dot", metavar="FILE", help="write Graphviz output")


def main(argv=None):
    parser = argparse.ArgumentParser(prog="jsj-forge", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)

    for name in ("split", "maximal", "jsj"):
        sub = subs.add_parser(name)
        sub.add_argument("input", help=".grp presentation file")
        if name == "jsj":
            sub.add_argument("--flavor", choices=("vc", "z", "zmax"),
                             default="vc")
        _common(sub)

    gog = subs.add_parser("gog")
    gog.add_argument("action",
                     choices=("collapse", "cylinders", "fold", "trace"))
    gog.add_argument("input", help=".gog document")
    gog.add_argument("--edges", help="comma-separated edge ids to collapse "
                     "(default: internal surface edges)")
    _common(gog)

    args = parser.parse_args(argv)
    if args.command == "gog":
        return _run_gog(args)
    return _run_pipeline(args)


def _run_pipeline(args):
    p = _load_presentation(args.input)
    peripherals = tuple(p.peripherals)
    seeds = _load_seeds(args.seed_markings)
    geometry = _geometry(args, p)

    if args.command == "split":
        dec = decide_split_relative(p, peripherals, budget=args.budget,
                                    seeds=seeds, geometry=geometry)
        print("answer: %s" % dec.answer)
        print("reason: %s" % dec.reason)
        print("trace: %s" % " -> ".join(dec.trace))
        if dec.answer == "splits" and args.dot:
            from .gog import witness_to_gog
            _emit_dot(args, witness_to_gog(dec.witness)[0])
        if dec.window_insufficient:
            return EXIT_WINDOW
        return EXIT_DECIDED if dec.answer != "exhausted" else EXIT_EXHAUSTED

    if args.command == "maximal":
        g, report = maximal_splitting(p, peripherals, budget=args.budget,
                                      seeds=seeds, geometry=geometry)
        print(g.to_json())
        for vid, answer, reason, trace in report["log"]:
            print("# v%d: %s (%s) %s"
                  % (vid, answer, reason, " -> ".join(trace)),
                  file=sys.stderr)
        _emit_dot(args, g)
        if report.get("window_insufficient"):
            return EXIT_WINDOW
        return EXIT_EXHAUSTED if report["partial"] else EXIT_DECIDED

    g, artifacts = assemble_jsj(p, flavor=args.flavor,
                                peripherals=peripherals, budget=args.budget,
                                seeds=seeds, geometry=geometry)
    print(g.to_json())
    for warning in artifacts["warnings"]:
        print("# %s" % warning, file=sys.stderr)
    _emit_dot(args, g)
    report = artifacts["report"]
    if report.get("window_insufficient"):
        return EXIT_WINDOW
    return EXIT_EXHAUSTED if report["partial"] else EXIT_DECIDED


def _run_gog(args):
    g = _load_gog(args.input)
    warnings = []
    if args.action == "trace":
        diagnostics = validate_gog(g)
        for line in diagnostics:
            print(line)
        if not diagnostics:
            print("ok")
        return EXIT_DECIDED if not diagnostics else EXIT_EXHAUSTED
    if args.action == "collapse":
        if args.edges:
            edges = {int(x) for x in args.edges.split(",")}
        else:
            edges, warnings = internal_surface_edges(g, budget=args.budget)
        out = collapse_edges(g, edges)
    elif args.action == "cylinders":
        out = tree_of_cylinders(g, budget=args.budget)
    else:
        out, warnings = zmax_fold(g, budget=args.budget)
    print(out.to_json())
    for warning in warnings:
        print("# %s" % warning, file=sys.stderr)
    _emit_dot(args, out)
    return EXIT_DECIDED


if __name__ == "__main__":
    sys.exit(main())
