"""Simulation driver: motion, surgery, refinement, checkpoints.

Each timestep runs motion -> surgery -> refinement.  Checkpoints are
keyed by edge (boundary) count, a non-increasing function of time; a
checkpoint fires the first time the count reaches or crosses it.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from cellcloth.grainsim import dynamics, surgery
from cellcloth.grainsim.network import Network2D, NetworkError

__all__ = ["SimConfig", "EvolveResult", "evolve"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SimConfig:
    m: float = 1.0
    gamma: float = 1.0
    M: float = 1.0
    eqs: str = "vnm"  # or "finiteMobility"
    cfl: float = 0.2
    dt_max: float = 1e-3
    flip_frac: float = 0.05   # of current mean boundary length
    digon_frac: float = 0.05
    seed: int = 0
    vnm_tol: float = 1e-10
    vnm_max_iter: int = 200
    detect_every: int = 1   # surgery scan cadence, in steps
    coarsen_every: int = 1  # mesh-coarsening cadence, in steps
    # dt quantile: 0 = strict minimum over local ratios; a small positive
    # value lets dt follow the bulk of the network while displacements of
    # the few faster (sub-threshold, about-to-be-surgered) nodes are
    # clamped to their local scale
    dt_quantile: float = 0.0
    refine_max_angle: float = math.pi / 10.0
    refine_min_angle: float = math.pi / 40.0
    max_seg: float = 0.25
    compact_threshold: float = 0.5

    def __post_init__(self):
        if self.m <= 0 or self.gamma <= 0 or self.M <= 0:
            raise ValueError("physical constants must be positive")
        if not (0.0 < self.flip_frac < 1.0 and 0.0 < self.digon_frac < 1.0):
            raise ValueError("surgery thresholds must lie in (0, 1)")
        if self.eqs not in ("vnm", "finiteMobility"):
            raise ValueError(f"unknown equation set {self.eqs!r}")


@dataclass
class EvolveResult:
    time: float
    steps: int
    surgeries: int
    vnm_fallbacks: int
    checkpoints: list = field(default_factory=list)  # (edges, time, payload)
    stationary: bool = False


def evolve(
    net: Network2D,
    cfg: SimConfig,
    stop_edges: int = 0,
    checkpoint_edges=(),
    on_checkpoint=None,
    max_steps: int = 10**7,
    max_time: float = math.inf,
    validate: bool = False,
) -> EvolveResult:
    """Run until the boundary count drops to `stop_edges` (or other limits).

    `on_checkpoint(net, edges, time)` may return a payload stored with
    the checkpoint record.  With `validate`, the Euler identity is
    asserted after every step and every surgery; periodic array
    compaction keeps long coarsening runs dense.
    """
    if net.m != cfg.m or net.gamma != cfg.gamma or net.M != cfg.M:
        net.m, net.gamma, net.M = cfg.m, cfg.gamma, cfg.M
    pending = sorted(set(int(c) for c in checkpoint_edges), reverse=True)
    for a, b in zip(pending, pending[1:]):
        if b >= a:
            raise ValueError("checkpoint counts must strictly decrease")
    result = EvolveResult(time=0.0, steps=0, surgeries=0, vnm_fallbacks=0)
    stationary_steps = 0

    dynamics.refine(net, cfg.refine_max_angle, cfg.refine_min_angle, cfg.max_seg)

    def fire_checkpoints():
        edges = net.n_boundaries + net.n_loops
        while pending and edges <= pending[0]:
            cp = pending.pop(0)
            payload = on_checkpoint(net, edges, result.time) if on_checkpoint else None
            result.checkpoints.append((edges, result.time, payload))

    fire_checkpoints()
    while result.steps < max_steps and result.time < max_time:
        edges = net.n_boundaries + net.n_loops
        if edges <= stop_edges or edges == 0:
            break

        # the local rule decouples short slow segments from fast ones; the
        # globally capped variant remains available as adaptive_timestep
        dt = dynamics.local_timestep(
            net, cfg.cfl, cfg.eqs, cfg.dt_max, quantile=cfg.dt_quantile
        )
        clamp = cfg.cfl if cfg.dt_quantile > 0 else None
        before = net.pts[net.kind != 0].copy() if dt >= cfg.dt_max else None
        mean_len = net.mean_boundary_length()
        if cfg.eqs == "vnm":
            result.vnm_fallbacks += dynamics.step_vnm(
                net, dt, cfg.vnm_tol, cfg.vnm_max_iter, mean_len=mean_len,
                clamp_cfl=clamp,
            )
        else:
            dynamics.step_finite_mobility(net, dt, clamp_cfl=clamp)
        result.time += dt
        result.steps += 1
        if validate:
            net.euler_check()

        if result.steps % cfg.detect_every == 0:
            events = surgery.detect_events(
                net, cfg.flip_frac * mean_len, cfg.digon_frac * mean_len
            )
            if events:
                applied = surgery.apply_events(net, events)
                result.surgeries += len(applied)
                if validate and applied:
                    net.euler_check()

        dynamics.refine(
            net, cfg.refine_max_angle, cfg.refine_min_angle, cfg.max_seg,
            coarsen=(result.steps % cfg.coarsen_every == 0),
        )
        if validate:
            net.euler_check()

        # stationary fixed point (e.g. a perfect honeycomb): flag and stop
        if before is not None:
            after = net.pts[net.kind != 0]
            if after.shape == before.shape:
                moved = float(np.abs(after - before).max())
                stationary_steps = stationary_steps + 1 if moved < 1e-15 else 0
                if stationary_steps >= 10:
                    result.stationary = True
                    log.warning("network is stationary; stopping evolution")
                    break
            else:
                stationary_steps = 0

        alive_frac = np.count_nonzero(net.kind) / max(net.n_pts, 1)
        if alive_frac < cfg.compact_threshold and net.n_pts > 4096:
            net.compact()

        fire_checkpoints()

    fire_checkpoints()
    return result
