"""Initial conditions: periodic Voronoi networks, perturbed lattices,
exact honeycombs, and loop fixtures.

Periodic Voronoi diagrams are built by replicating the seed points to a
3x3 tile, computing the planar diagram, and identifying the central
period; simple and robust at desk scale.  Degenerate (cocircular) seed
sets yield junctions of the wrong valence and are retried with a tiny
seeded perturbation.
"""

from __future__ import annotations

import logging
import math

import numpy as np
from scipy.spatial import Voronoi

from cellcloth.grainsim.network import Network2D, NetworkError, mic
from cellcloth.rng import substream

__all__ = [
    "generate_voronoi",
    "generate_perturbed_lattice",
    "make_honeycomb",
    "make_loop",
    "voronoi_of_points",
]

log = logging.getLogger(__name__)

# longest allowed polyline segment; keeps minimum-image arithmetic exact
MAX_SEG = 0.2


def _subdivided(p1, p2, max_seg=MAX_SEG):
    """Interior node coordinates splitting p1 -> p2 into short segments.

    Endpoints are raw (unwrapped) plane coordinates, so segments longer
    than half the torus subdivide correctly; emitted nodes are wrapped.
    Every boundary carries at least one interior node so that junction
    force anchors are nodes, never other junctions.
    """
    d = np.asarray(p2, dtype=float) - np.asarray(p1, dtype=float)
    length = float(np.hypot(d[0], d[1]))
    k = max(2, int(math.ceil(length / max_seg)))
    return [(p1 + d * (i / k)) % 1.0 for i in range(1, k)]


def _key9(x, y):
    return (int(round((x % 1.0) * 1e9)) % 10**9, int(round((y % 1.0) * 1e9)) % 10**9)


def voronoi_of_points(points, m=1.0, gamma=1.0, M=1.0) -> Network2D:
    """Periodic Voronoi network of the given seed points in [0,1)^2."""
    pts = np.asarray(points, dtype=float) % 1.0
    n = len(pts)
    if n < 2:
        raise ValueError("need at least 2 seed points")
    offsets = [(0, 0)] + [
        (dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1) if (dx, dy) != (0, 0)
    ]
    tiled = np.concatenate([pts + np.array(o, dtype=float) for o in offsets])
    vor = Voronoi(tiled)

    jxref: dict = {}
    net = Network2D(m=m, gamma=gamma, M=M, cap_pts=max(64, 12 * n), cap_b=max(16, 4 * n))

    def junction_at(coord):
        key = _key9(coord[0], coord[1])
        j = jxref.get(key)
        if j is None:
            j = net.new_point(np.asarray(coord) % 1.0, kind=1)
            jxref[key] = j
        return j

    seen_boundaries = {}
    slots: dict = {}
    for ridge, (p, q) in zip(vor.ridge_vertices, vor.ridge_points):
        if p >= n and q >= n:
            continue  # ridge between image cells only
        v1, v2 = ridge
        if v1 < 0 or v2 < 0:
            continue  # unbounded ridge far from the central tile
        c1, c2 = vor.vertices[v1], vor.vertices[v2]
        # the true (unwrapped) midpoint identifies the boundary mod 1 even
        # when the segment is longer than half the torus
        mid = (c1 + c2) / 2.0
        j1 = junction_at(c1)
        j2 = junction_at(c2)
        bkey = (min(j1, j2), max(j1, j2), _key9(mid[0], mid[1]))
        if bkey in seen_boundaries:
            continue
        seen_boundaries[bkey] = (j1, j2, c1, c2)

    for (j1, j2, c1, c2) in seen_boundaries.values():
        nodes = [net.new_point(c, kind=2) for c in _subdivided(c1, c2)]
        b = net.new_boundary(j1, j2, nodes)
        slots.setdefault(j1, []).append((b, 0))
        slots.setdefault(j2, []).append((b, 1))

    for j, sl in slots.items():
        if len(sl) != 3:
            raise NetworkError(f"junction {j} has valence {len(sl)}")
        for k, (b, end) in enumerate(sl):
            net.set_slot(j, k, b, end)
    if len(slots) != net.n_junctions:
        raise NetworkError("isolated junctions produced by Voronoi assembly")

    faces = net.trace_faces()
    net.n_grains = len(faces)
    net.euler_check()
    if net.n_grains != n:
        raise NetworkError(f"expected {n} grains, traced {net.n_grains}")
    return net


def generate_voronoi(n_points, seed, m=1.0, gamma=1.0, M=1.0) -> Network2D:
    """Voronoi tessellation of uniformly random points on the unit torus."""
    if n_points < 4:
        raise ValueError("need at least 4 points")
    rng = substream(seed, 0xA0)
    pts = rng.random((n_points, 2))
    for attempt in range(5):
        try:
            return voronoi_of_points(pts, m=m, gamma=gamma, M=M)
        except NetworkError as exc:
            log.warning("degenerate Voronoi input (%s); perturbing and retrying", exc)
            pts = (pts + rng.normal(0.0, 1e-9, pts.shape)) % 1.0
    raise NetworkError("Voronoi generation failed after perturb-and-retry")


def generate_perturbed_lattice(
    cells_per_side, seed, m=1.0, gamma=1.0, M=1.0, sigma_factor=0.25
) -> Network2D:
    """Voronoi diagram of a jittered triangular lattice (honeycomb grains).

    Displacements are independent 2D Gaussians with standard deviation
    `sigma_factor` times the lattice spacing.  With `sigma_factor` 0 the
    exact equiangular honeycomb is built directly.  `cells_per_side`
    must be even: odd counts cannot close the offset rows periodically.
    """
    c = int(cells_per_side)
    if c < 2:
        raise ValueError("cells_per_side must be at least 2")
    if c % 2:
        raise ValueError("cells_per_side must be even to tile the torus")
    if sigma_factor == 0:
        return make_honeycomb(c, c, m=m, gamma=gamma, M=M)
    spacing = 1.0 / c
    base = np.empty((c * c, 2))
    k = 0
    for j in range(c):
        for i in range(c):
            base[k, 0] = (i + 0.25 + 0.5 * (j % 2)) * spacing
            base[k, 1] = (j + 0.5) * spacing
            k += 1
    rng = substream(seed, 0xB0)
    pts = (base + rng.normal(0.0, sigma_factor * spacing, base.shape)) % 1.0
    for attempt in range(5):
        try:
            return voronoi_of_points(pts, m=m, gamma=gamma, M=M)
        except NetworkError as exc:
            log.warning("degenerate lattice input (%s); perturbing and retrying", exc)
            pts = (pts + rng.normal(0.0, 1e-9, pts.shape)) % 1.0
    raise NetworkError("lattice generation failed after perturb-and-retry")


def make_honeycomb(nx, ny, m=1.0, gamma=1.0, M=1.0) -> Network2D:
    """Equiangular honeycomb: every junction angle is exactly 2pi/3.

    Hexagons are equiangular but not equilateral in general: the
    horizontal sides have length `h` and the diagonal sides length `d`,
    with diagonals at exactly +-60 degrees.  `nx` must be even so the
    column offsets close around the torus.
    """
    if nx % 2:
        raise ValueError("nx must be even to close the offset columns")
    s = 1.0 / (2 * ny)          # half the vertical period of one hex row
    d = 2.0 * s / math.sqrt(3)  # diagonal side: rise 2s over +-60 degrees => run d/2
    ax = 1.0 / nx               # column x-advance = h + d/2
    h = ax - d / 2.0
    if h <= 0:
        raise ValueError("aspect nx/ny too large for positive horizontal sides")
    w = h / 2.0 + d / 2.0

    corner_off = [
        (w, 0.0), (h / 2.0, s), (-h / 2.0, s), (-w, 0.0), (-h / 2.0, -s), (h / 2.0, -s)
    ]

    net = Network2D(m=m, gamma=gamma, M=M, cap_pts=24 * nx * ny, cap_b=6 * nx * ny)
    jxref: dict = {}

    def junction_at(x, y):
        key = _key9(x, y)
        j = jxref.get(key)
        if j is None:
            j = net.new_point((x % 1.0, y % 1.0), kind=1)
            jxref[key] = j
        return j

    seen = set()
    slots: dict = {}
    for i in range(nx):
        for j in range(ny):
            cx = (i + 0.5) * ax
            cy = (i * s + (j + 0.5) * 2 * s) % 1.0
            corners = [junction_at(cx + ox, cy + oy) for ox, oy in corner_off]
            coords = [(cx + ox, cy + oy) for ox, oy in corner_off]  # raw, unwrapped
            for k in range(6):
                a, b = corners[k], corners[(k + 1) % 6]
                p1 = np.array(coords[k])
                p2 = np.array(coords[(k + 1) % 6])
                mid = (p1 + p2) / 2.0
                ekey = (min(a, b), max(a, b), _key9(mid[0], mid[1]))
                if ekey in seen:
                    continue
                seen.add(ekey)
                nodes = [net.new_point(p, kind=2) for p in _subdivided(p1, p2)]
                bid = net.new_boundary(a, b, nodes)
                slots.setdefault(a, []).append((bid, 0))
                slots.setdefault(b, []).append((bid, 1))

    for j, sl in slots.items():
        if len(sl) != 3:
            raise NetworkError(f"honeycomb junction {j} has valence {len(sl)}")
        for k, (b, end) in enumerate(sl):
            net.set_slot(j, k, b, end)

    faces = net.trace_faces()
    net.n_grains = len(faces)
    net.euler_check()
    if net.n_grains != nx * ny:
        raise NetworkError(f"expected {nx * ny} hexagons, traced {net.n_grains}")
    return net


def make_loop(radius, n_nodes=720, center=(0.5, 0.5), m=1.0, gamma=1.0, M=1.0) -> Network2D:
    """A single circular loop boundary (no junctions): shrinkage fixture."""
    if 2 * radius >= 0.5:
        raise ValueError("loop diameter must stay below half the torus")
    net = Network2D(m=m, gamma=gamma, M=M, cap_pts=2 * n_nodes, cap_b=4)
    theta = 2.0 * math.pi * np.arange(n_nodes) / n_nodes
    nodes = [
        net.new_point(
            (center[0] + radius * math.cos(t), center[1] + radius * math.sin(t)),
            kind=2,
        )
        for t in theta
    ]
    net.new_boundary(-1, -1, nodes)
    net.n_grains = 0
    return net
