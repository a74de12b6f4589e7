"""Command-line interface.

Subcommands mirror the library surface: swatch-type enumeration, cloth
computation, cloth distances, subsample bands, distance curves from
archived checkpoint graphs, network evolution, and the experiment
drivers (build-ref, run-convergence, compare-eqs).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from cellcloth.graphcore import GRAIN_CONSTRAINT, DegreeConstraint, load_graph, save_graph

log = logging.getLogger("cellcloth")

_CONSTRAINTS = {
    "grain": GRAIN_CONSTRAINT,
    "none": DegreeConstraint({}),
}


def _cmd_enumerate(args):
    from cellcloth.swatch import enumerate_swatch_types

    levels = enumerate_swatch_types(
        args.radius, _CONSTRAINTS[args.constraint], root_ctype=args.root_ctype
    )
    for r, level in enumerate(levels):
        for t in level:
            print(f"{t.hex} {t.vertex_count}")
    return 0


def _cmd_cloth(args):
    from cellcloth.cloth import compute_cloth, write_cloth

    g = load_graph(args.graph)
    c = compute_cloth(g, rmax=args.rmax, root_ctype=args.root_ctype,
                      workers=args.workers)
    write_cloth(c, args.out)
    print(f"wrote {args.out}: {c.total_roots} roots, rmax {c.rmax}")
    return 0


def _cmd_dist(args):
    from cellcloth.cloth import read_cloth
    from cellcloth.metric import cloth_distance

    c1 = read_cloth(args.a)
    c2 = read_cloth(args.b)
    d = cloth_distance(c1, c2, args.r)
    print(f"{d:.12g}")
    return 0


def _cmd_band(args):
    from cellcloth.cloth import read_cloth
    from cellcloth.metric import subsample_band

    g = load_graph(args.ref)
    c = read_cloth(args.refcloth)
    mean, std, _ = subsample_band(
        g, c, n=args.n, k=args.k, r=args.r, seed=args.seed, workers=args.workers
    )
    print("n,mean,std")
    print(f"{args.n},{mean!r},{std!r}")
    return 0


def _cmd_curve(args):
    from cellcloth.cloth import compute_cloth, read_cloth
    from cellcloth.metric import cloth_distance

    ref = read_cloth(args.ref_cloth)
    rows = []
    for path in args.graphs:
        g = load_graph(path)
        c = compute_cloth(g, rmax=args.r, workers=args.workers)
        edges = len(g.vertices_of_ctype(1))
        rows.append((edges, cloth_distance(c, ref, args.r)))
    rows.sort(reverse=True)
    print("edges,d_r")
    for edges, d in rows:
        print(f"{edges},{d!r}")
    return 0


def _cmd_evolve(args):
    from cellcloth.grainsim import SimConfig, evolve, save_network
    from cellcloth.harness import make_initial_network

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    net = make_initial_network(args.init, args.seed, m=args.m, gamma=args.gamma,
                               M=args.M)
    cfg = SimConfig(m=args.m, gamma=args.gamma, M=args.M, eqs=args.eqs,
                    seed=args.seed)
    rows = []

    def checkpoint(net_, edges, time_):
        info = net_.export_graph()
        save_graph(info.graph, out / f"checkpoint_{edges}.graph")
        save_network(net_, out / f"checkpoint_{edges}.net2d")
        rows.append((edges, time_, net_.angle_deviation()))
        return None

    checkpoints = [int(c) for c in args.checkpoint_at.split(",")] if args.checkpoint_at else []
    stop = args.stop_edges if args.stop_edges else (min(checkpoints) if checkpoints else 0)
    evolve(net, cfg, stop_edges=stop, checkpoint_edges=checkpoints,
           on_checkpoint=checkpoint)
    with open(out / "evolution.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("edges,time,angleDeviation\n")
        for edges, t, dev in rows:
            fh.write(f"{edges},{t!r},{dev!r}\n")
    print(f"wrote {out}/evolution.csv ({len(rows)} checkpoints)")
    return 0


def _cmd_build_ref(args):
    from cellcloth.harness import build_reference

    build_reference(args.init, args.eqs, args.stop_edges, args.rmax, args.seed,
                    args.out, plan_overrides={"workers": args.workers})
    print(f"reference written to {args.out}")
    return 0


def _cmd_run_convergence(args):
    from cellcloth.cloth import read_cloth
    from cellcloth.harness import read_plan, run_convergence

    plan = read_plan(args.plan)
    ref_graph = load_graph(args.ref)
    ref_cloth = read_cloth(args.refcloth)
    report = run_convergence(plan, ref_graph, ref_cloth)
    for (edges, d), ok in zip(report.curve.entries, report.verdicts):
        print(f"{edges} edges: d_{plan.r} = {d:.12g} -> "
              f"{'within band' if ok else 'outside band'}")
    print(f"first sustained convergence: {report.first_sustained}")
    return 0


def _cmd_compare_eqs(args):
    from cellcloth.cloth import read_cloth
    from cellcloth.harness import compare_equation_sets

    sizes = {
        "init_edges": args.init_edges,
        "checkpoints": [int(c) for c in args.checkpoints.split(",")],
        "r": args.r,
        "band_k": args.k,
        "band_seed": args.band_seed,
        "M": args.M,
        "workers": args.workers,
    }
    ref_graph = load_graph(args.ref)
    ref_cloth = read_cloth(args.refcloth)
    reports = compare_equation_sets(args.seed_v, args.seed_l, sizes,
                                    ref_graph, ref_cloth, out_dir=args.out)
    for (family, eqs), rep in sorted(reports.items()):
        print(f"{family}/{eqs}: verdicts {rep.verdicts} "
              f"first sustained {rep.first_sustained}")
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="cellcloth",
        description="statistical topology of cell complexes and 2D grain growth",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enumerate", help="admissible swatch types per level")
    p.add_argument("--radius", type=int, required=True)
    p.add_argument("--constraint", choices=sorted(_CONSTRAINTS), default="grain")
    p.add_argument("--root-ctype", type=int, default=0)
    p.set_defaults(func=_cmd_enumerate)

    p = sub.add_parser("cloth", help="compute the cloth of a graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--rmax", type=int, default=7)
    p.add_argument("--root-ctype", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_cloth)

    p = sub.add_parser("dist", help="earth mover's distance between cloths")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--r", type=int, default=7)
    p.set_defaults(func=_cmd_dist)

    p = sub.add_parser("band", help="subsample distance band of a reference")
    p.add_argument("--ref", required=True, help="reference graph file")
    p.add_argument("--refcloth", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, default=20)
    p.add_argument("--r", type=int, default=7)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_band)

    p = sub.add_parser("curve", help="distance curve from checkpoint graphs")
    p.add_argument("--ref-cloth", required=True)
    p.add_argument("--r", type=int, default=7)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("graphs", nargs="+")
    p.set_defaults(func=_cmd_curve)

    p = sub.add_parser("evolve", help="run the grain-growth simulator")
    p.add_argument("--init", required=True, help="voronoi:N | lattice:C | honeycomb:C")
    p.add_argument("--eqs", choices=("vnm", "finiteMobility"), default="vnm")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--m", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--M", type=float, default=1.0)
    p.add_argument("--checkpoint-at", default="", help="comma-separated edge counts")
    p.add_argument("--stop-edges", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_evolve)

    p = sub.add_parser("build-ref", help="evolve and store a reference state")
    p.add_argument("--init", required=True)
    p.add_argument("--eqs", choices=("vnm", "finiteMobility"), default="vnm")
    p.add_argument("--stop-edges", type=int, required=True)
    p.add_argument("--rmax", type=int, default=7)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_build_ref)

    p = sub.add_parser("run-convergence", help="run a convergence plan file")
    p.add_argument("--plan", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--refcloth", required=True)
    p.set_defaults(func=_cmd_run_convergence)

    p = sub.add_parser("compare-eqs", help="compare equation sets against one reference")
    p.add_argument("--ref", required=True)
    p.add_argument("--refcloth", required=True)
    p.add_argument("--init-edges", type=int, required=True)
    p.add_argument("--checkpoints", required=True)
    p.add_argument("--r", type=int, default=7)
    p.add_argument("--k", type=int, default=20)
    p.add_argument("--band-seed", type=int, default=1)
    p.add_argument("--M", type=float, default=1.0)
    p.add_argument("--seed-v", type=int, default=2)
    p.add_argument("--seed-l", type=int, default=3)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_compare_eqs)

    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
