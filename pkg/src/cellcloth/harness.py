"""Experiment drivers: reference states, convergence runs, comparisons.

The convergence protocol tracks the cloth distance d_r from an evolving
network to a reference state believed to be in the topological steady
state.  Checkpoints are keyed by boundary count (a non-increasing
function of time).  At each checkpoint the exported graph's cloth is
compared against the reference cloth, and the distance is judged
against the band of distances that same-size random subsamples of the
reference produce: within one standard deviation above the mean counts
as converged.

Every run writes plot-ready CSV files plus a manifest (flat key=value
lines) so each row is reproducible bit-exactly from the plan and seed.
"""

from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

import cellcloth
from cellcloth.cloth import Cloth, compute_cloth, read_cloth, write_cloth
from cellcloth.graphcore import AdjacencyGraph, load_graph, save_graph
from cellcloth.grainsim import (
    Network2D,
    SimConfig,
    evolve,
    generate_perturbed_lattice,
    generate_voronoi,
    make_honeycomb,
    save_network,
)
from cellcloth.metric import DistanceCurve, cloth_distance, is_converged, subsample, subsample_band
from cellcloth.rng import substream

__all__ = [
    "ExperimentPlan",
    "ConvergenceReport",
    "build_reference",
    "run_convergence",
    "compare_equation_sets",
    "make_initial_network",
    "read_plan",
    "write_manifest",
]

log = logging.getLogger(__name__)


@dataclass
class ExperimentPlan:
    """Flat description of one convergence experiment."""

    init: str                  # e.g. "voronoi:20000", "lattice:142", "subsample:6000"
    eqs: str = "vnm"
    seed: int = 0
    checkpoints: tuple = ()    # strictly decreasing edge counts
    r: int = 7
    band_k: int = 20
    band_seed: int = 1
    out_dir: str = "."
    m: float = 1.0
    gamma: float = 1.0
    M: float = 1.0
    flip_frac: float = 0.10
    digon_frac: float = 0.10
    cfl: float = 0.3
    detect_every: int = 3
    coarsen_every: int = 4
    dt_quantile: float = 0.02
    workers: int = 1

    def __post_init__(self):
        cps = tuple(int(c) for c in self.checkpoints)
        if any(b >= a for a, b in zip(cps, cps[1:])):
            raise ValueError("checkpoint counts must strictly decrease")
        object.__setattr__(self, "checkpoints", cps)

    def sim_config(self) -> SimConfig:
        return SimConfig(
            m=self.m, gamma=self.gamma, M=self.M, eqs=self.eqs, seed=self.seed,
            cfl=self.cfl, flip_frac=self.flip_frac, digon_frac=self.digon_frac,
            detect_every=self.detect_every, coarsen_every=self.coarsen_every,
            dt_quantile=self.dt_quantile,
        )


@dataclass
class ConvergenceReport:
    curve: DistanceCurve
    band: dict                      # edges -> (mean, std)
    verdicts: list
    angle_deviations: list          # (edges, time, deviation)
    stationary: bool = False
    first_sustained: int | None = None  # edge count where convergence begins and holds

    def sustained_from(self):
        """Largest checkpoint edge count from which all verdicts are True."""
        first = None
        for (edges, _), ok in zip(self.curve.entries, self.verdicts):
            if ok and first is None:
                first = edges
            if not ok:
                first = None
        return first


def make_initial_network(spec: str, seed: int, m=1.0, gamma=1.0, M=1.0,
                         reference_graph: AdjacencyGraph = None):
    """Build the initial condition named by `spec`.

    Forms: ``voronoi:<points>``, ``lattice:<cellsPerSide>``,
    ``honeycomb:<cellsPerSide>``, and ``subsample:<edges>`` (a trimmed
    piece of the reference graph; yields no evolvable network, only a
    checkpoint-zero graph).
    """
    kind, _, arg = spec.partition(":")
    n = int(arg) if arg else 0
    if kind == "voronoi":
        return generate_voronoi(n, seed=seed, m=m, gamma=gamma, M=M)
    if kind == "lattice":
        return generate_perturbed_lattice(n, seed=seed, m=m, gamma=gamma, M=M)
    if kind == "honeycomb":
        return make_honeycomb(n, n, m=m, gamma=gamma, M=M)
    if kind == "subsample":
        if reference_graph is None:
            raise ValueError("subsample initial condition needs the reference graph")
        sub, cut, _ = subsample(reference_graph, n, substream(seed, 0xC0))
        return (sub, cut)
    raise ValueError(f"unknown initial condition {spec!r}")


def write_manifest(path, plan, extra=None):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"cellcloth={cellcloth.__version__}\n")
        for k, v in sorted(asdict(plan).items()):
            fh.write(f"{k}={v}\n")
        for k, v in sorted((extra or {}).items()):
            fh.write(f"{k}={v}\n")


def read_plan(path) -> ExperimentPlan:
    """Parse a flat key=value plan file."""
    raw = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            k, _, v = line.partition("=")
            raw[k.strip()] = v.strip()
    kwargs = {}
    for k, v in raw.items():
        if k in ("seed", "r", "band_k", "band_seed", "detect_every",
                 "coarsen_every", "workers"):
            kwargs[k] = int(v)
        elif k in ("m", "gamma", "M", "flip_frac", "digon_frac", "cfl"):
            kwargs[k] = float(v)
        elif k == "checkpoints":
            kwargs[k] = tuple(int(x) for x in v.split(",") if x)
        elif k in ("init", "eqs", "out_dir"):
            kwargs[k] = v
        else:
            raise ValueError(f"unknown plan key {k!r}")
    return ExperimentPlan(**kwargs)


def build_reference(init_spec, eqs, stop_edges, rmax, seed, out_dir,
                    min_ratio=10.0, plan_overrides=None):
    """Evolve an initial condition far down and record graph + cloth.

    The start must exceed `stop_edges` by at least `min_ratio` so the
    reference has forgotten its initial condition.  Writes
    ``reference.graph``, ``reference.cloth``, ``reference.net2d``, and a
    manifest with provenance.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    plan = ExperimentPlan(
        init=init_spec, eqs=eqs, seed=seed, checkpoints=(), r=rmax,
        out_dir=str(out), **(plan_overrides or {})
    )
    net = make_initial_network(init_spec, seed, plan.m, plan.gamma, plan.M)
    start_edges = net.n_boundaries
    if start_edges < min_ratio * stop_edges:
        raise ValueError(
            f"start has {start_edges} edges; need at least "
            f"{min_ratio:g} x {stop_edges}"
        )
    log.info("building reference: %s, %d -> %d edges", init_spec, start_edges, stop_edges)
    res = evolve(net, plan.sim_config(), stop_edges=stop_edges)
    info = net.export_graph()
    save_graph(info.graph, out / "reference.graph")
    save_network(net, out / "reference.net2d")
    cloth = compute_cloth(info.graph, rmax=rmax, workers=plan.workers)
    write_cloth(cloth, out / "reference.cloth")
    write_manifest(out / "manifest.txt", plan, {
        "kind": "reference",
        "start_edges": start_edges,
        "stop_edges": net.n_boundaries,
        "steps": res.steps,
        "surgeries": res.surgeries,
        "sim_time": repr(res.time),
    })
    return info.graph, cloth


def _band_for(graph, cloth, n, k, r, seed, workers, cache):
    key = (n, k, r, seed)
    if key not in cache:
        cache[key] = subsample_band(graph, cloth, n=n, k=k, r=r, seed=seed,
                                    workers=workers)
    return cache[key]


def run_convergence(plan: ExperimentPlan, ref_graph: AdjacencyGraph,
                    ref_cloth: Cloth, band_cache=None) -> ConvergenceReport:
    """Evolve per plan, measure d_r at each checkpoint, judge by the band.

    Emits ``curve.csv`` (edges,d_r), ``band.csv`` (n,mean,std),
    ``angles.csv`` (edges,deviation), per-checkpoint graphs, and
    ``manifest.txt`` in the plan's output directory.
    """
    out = Path(plan.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    band_cache = band_cache if band_cache is not None else {}
    entries = []
    angles = []
    records = []

    init = make_initial_network(plan.init, plan.seed, plan.m, plan.gamma, plan.M,
                                reference_graph=ref_graph)
    stationary = False
    if isinstance(init, tuple):
        # a reference subsample is already "evolved": one checkpoint only
        sub, cut = init
        c = compute_cloth(sub, rmax=plan.r, cut_mask=cut, workers=plan.workers)
        d = cloth_distance(c, ref_cloth, plan.r)
        edges = len(sub.vertices_of_ctype(1))
        entries.append((edges, d))
        records.append((edges, 0.0, None))
    else:
        net = init

        def checkpoint(net_, edges, time_):
            info = net_.export_graph()
            save_graph(info.graph, out / f"checkpoint_{edges}.graph")
            c = compute_cloth(info.graph, rmax=plan.r, workers=plan.workers)
            d = cloth_distance(c, ref_cloth, plan.r)
            dev = net_.angle_deviation()
            entries.append((edges, d))
            angles.append((edges, time_, dev))
            log.info("checkpoint %d edges: d_%d = %.6g, angle dev %.3g",
                     edges, plan.r, d, dev)
            return None

        res = evolve(
            net, plan.sim_config(),
            stop_edges=plan.checkpoints[-1] if plan.checkpoints else 0,
            checkpoint_edges=plan.checkpoints,
            on_checkpoint=checkpoint,
        )
        stationary = res.stationary
        records = list(res.checkpoints)

    curve = DistanceCurve(entries)
    band = {}
    for edges, _ in entries:
        mean, std, samples = _band_for(
            ref_graph, ref_cloth, edges, plan.band_k, plan.r, plan.band_seed,
            plan.workers, band_cache,
        )
        band[edges] = (mean, std, samples)
    verdicts = is_converged(curve, band)

    with open(out / "curve.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("edges,d_r\n")
        for edges, d in entries:
            fh.write(f"{edges},{d!r}\n")
    with open(out / "band.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("n,mean,std\n")
        for edges in sorted(band, reverse=True):
            mean, std = band[edges][0], band[edges][1]
            fh.write(f"{edges},{mean!r},{std!r}\n")
    with open(out / "angles.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("edges,deviation\n")
        for edges, _t, dev in angles:
            fh.write(f"{edges},{dev!r}\n")
    report = ConvergenceReport(
        curve=curve,
        band=band,
        verdicts=verdicts,
        angle_deviations=angles,
        stationary=stationary,
    )
    report.first_sustained = report.sustained_from()
    write_manifest(out / "manifest.txt", plan, {
        "kind": "convergence",
        "verdicts": ",".join(str(v) for v in verdicts),
        "first_sustained": report.first_sustained,
        "stationary": stationary,
    })
    return report


def compare_equation_sets(seed_v, seed_l, sizes, ref_graph, ref_cloth,
                          out_dir=".", band_cache=None, families=("voronoi", "lattice")):
    """Run both equation sets from both initial-condition families.

    `sizes` carries the shared knobs: ``init_edges``, ``checkpoints``,
    ``r``, ``band_k``, ``band_seed``, plus optional SimConfig overrides.
    Returns {(family, eqs): ConvergenceReport}.
    """
    band_cache = band_cache if band_cache is not None else {}
    out = Path(out_dir)
    reports = {}
    for family in families:
        if family == "voronoi":
            init = f"voronoi:{round(sizes['init_edges'] / 3)}"
            seed = seed_v
        else:
            side = round(math.sqrt(sizes["init_edges"] / 3))
            side += side % 2  # lattice construction needs an even side
            init = f"lattice:{side}"
            seed = seed_l
        for eqs in ("vnm", "finiteMobility"):
            plan = ExperimentPlan(
                init=init,
                eqs=eqs,
                seed=seed,
                checkpoints=tuple(sizes["checkpoints"]),
                r=sizes.get("r", 7),
                band_k=sizes.get("band_k", 20),
                band_seed=sizes.get("band_seed", 1),
                out_dir=str(out / f"{family}_{eqs}"),
                M=sizes.get("M", 1.0),
                workers=sizes.get("workers", 1),
            )
            reports[(family, eqs)] = run_convergence(
                plan, ref_graph, ref_cloth, band_cache=band_cache
            )
    return reports
