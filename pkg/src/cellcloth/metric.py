"""Distances between swatches and between cloths.

The ground distance between two swatch types of equal radius is the
reciprocal of the vertex count of their largest common subswatch, i.e.
of the deepest common ancestor in the swatch-type tree (restrictions
are unique, so the largest common subswatch is exactly that ancestor).
This makes the ground metric an ultrametric supported on a tree, and
the earth mover's distance between two cloth levels decomposes over
tree edges in closed form:

    d_r = sum over edges (child c -> parent p) of w(c) * |F1(c) - F2(c)|

with ``F_i(c)`` the level-r frequency mass of descendants of ``c``,
``w(c) = 1/(2 n(p))`` for level-r leaves and
``w(c) = 1/(2 n(p)) - 1/(2 n(c))`` otherwise.  Telescoping the edge
weights along the two leaf-to-ancestor paths reproduces the ground
distance exactly.  A generic transportation-problem solver over the
explicit cost matrix is kept as an independent oracle.

All cloth-distance arithmetic runs on exact rationals derived from
integer counts; callers choose float or Fraction output.
"""

from __future__ import annotations

import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from cellcloth.cloth import Cloth, ancestor_chain, compute_cloth
from cellcloth.graphcore import AdjacencyGraph
from cellcloth.rng import substream
from cellcloth.swatch import SwatchType

__all__ = [
    "swatch_distance",
    "cloth_distance",
    "cloth_distance_flow_oracle",
    "limit_distance",
    "DistanceCurve",
    "subsample",
    "subsample_band",
    "is_converged",
]


def swatch_distance(a: SwatchType, b: SwatchType):
    """1 / (vertex count of the largest common subswatch); 0 if equal.

    Defined for equal radii only; the largest common subswatch is found
    by descending restrictions until the canonical forms agree.
    """
    if a.radius != b.radius:
        raise ValueError(f"radius mismatch: {a.radius} != {b.radius}")
    if a == b:
        return Fraction(0)
    ca = ancestor_chain(a)
    cb = ancestor_chain(b)
    # chains run leaf -> root; find the deepest level where they agree
    for i in range(1, len(ca)):
        if ca[i] == cb[i]:
            return Fraction(1, ca[i].vertex_count)
    raise ValueError("swatches share no common subswatch (different roots)")


def _merged_tree(c1: Cloth, c2: Cloth, r: int):
    """Union ancestry of both cloths' level-r types.

    Returns (parent map, leaf set).  Nodes are SwatchTypes at levels
    0..r; every level-r type is a leaf.
    """
    if r not in c1.levels or not c1.levels[r]:
        raise ValueError(f"first cloth has no level {r}")
    if r not in c2.levels or not c2.levels[r]:
        raise ValueError(f"second cloth has no level {r}")
    leaves = set(c1.levels[r]) | set(c2.levels[r])
    parent = {}
    for leaf in leaves:
        chain = ancestor_chain(leaf)
        for child, par in zip(chain, chain[1:]):
            if child in parent:
                break
            parent[child] = par
    return parent, leaves


def cloth_distance(c1: Cloth, c2: Cloth, r: int, exact: bool = False):
    """Earth mover's distance between the level-r distributions (d_r)."""
    parent, leaves = _merged_tree(c1, c2, r)

    mass1 = {t: Fraction(c, c1.total_roots) for t, c in c1.levels[r].items()}
    mass2 = {t: Fraction(c, c2.total_roots) for t, c in c2.levels[r].items()}

    # accumulate descendant mass difference bottom-up, level by level
    total = Fraction(0)
    current = {
        t: mass1.get(t, Fraction(0)) - mass2.get(t, Fraction(0)) for t in leaves
    }
    for level in range(r, 0, -1):
        nxt: dict = {}
        for child, d in current.items():
            p = parent[child]
            np_ = p.vertex_count
            if level == r:
                w = Fraction(1, 2 * np_)
            else:
                w = Fraction(1, 2 * np_) - Fraction(1, 2 * child.vertex_count)
            if d:
                total += w * abs(d)
            nxt[p] = nxt.get(p, Fraction(0)) + d
        current = nxt
    if any(d for d in current.values()):
        raise ValueError("cloths have different root types: no common subswatch")
    return total if exact else float(total)


def cloth_distance_flow_oracle(
    c1: Cloth, c2: Cloth, r: int, max_support: int = 5000
):
    """Reference EMD: transportation problem over the explicit cost matrix.

    Solved with the HiGHS LP backend; intended for validation and for
    hypothetical non-tree ground metrics, not for production distances.
    """
    from scipy.optimize import linprog
    from scipy.sparse import lil_matrix

    t1 = sorted(c1.levels[r])
    t2 = sorted(c2.levels[r])
    m, n = len(t1), len(t2)
    if m + n > max_support:
        raise ValueError(f"combined support {m + n} exceeds bound {max_support}")
    p = np.array([c1.levels[r][t] / c1.total_roots for t in t1])
    q = np.array([c2.levels[r][t] / c2.total_roots for t in t2])

    cost = np.empty((m, n))
    for i, a in enumerate(t1):
        for j, b in enumerate(t2):
            cost[i, j] = float(swatch_distance(a, b))

    a_eq = lil_matrix((m + n - 1, m * n))
    b_eq = np.empty(m + n - 1)
    for i in range(m):
        a_eq[i, i * n:(i + 1) * n] = 1.0
        b_eq[i] = p[i]
    for j in range(n - 1):  # last column constraint is redundant
        a_eq[m + j, j::n] = 1.0
        b_eq[m + j] = q[j]
    res = linprog(
        cost.ravel(), A_eq=a_eq.tocsr(), b_eq=b_eq, bounds=(0, None), method="highs"
    )
    if not res.success:
        raise RuntimeError(f"transportation LP failed: {res.message}")
    return float(res.fun)


def limit_distance(c1: Cloth, c2: Cloth, tol: float = 1e-12):
    """(d_rmax, radius where d_r stabilized, or None if still growing).

    The stabilization radius is the smallest ``s`` after which no
    increment ``d_r - d_{r-1}`` exceeds `tol`; for finite complexes the
    sequence is non-decreasing and eventually constant.
    """
    if c1.rmax != c2.rmax:
        raise ValueError("cloths must share rmax")
    rmax = c1.rmax
    values = [cloth_distance(c1, c2, r, exact=True) for r in range(rmax + 1)]
    last_growth = 0
    for r in range(1, rmax + 1):
        if values[r] - values[r - 1] > tol:
            last_growth = r
    if last_growth == rmax and rmax > 0:
        return float(values[rmax]), None
    return float(values[rmax]), last_growth


@dataclass
class DistanceCurve:
    """(edge count, d_r) checkpoints along a coarsening run."""

    entries: list  # [(edges, value)]

    def __post_init__(self):
        counts = [e for e, _ in self.entries]
        if any(nxt >= cur for cur, nxt in zip(counts, counts[1:])):
            raise ValueError("checkpoint edge counts must strictly decrease")

    def edges(self):
        return [e for e, _ in self.entries]

    def values(self):
        return [v for _, v in self.entries]


# ---------------------------------------------------------------------------
# subsampling and the convergence band
# ---------------------------------------------------------------------------

def subsample(g: AdjacencyGraph, n_edges: int, rng) -> tuple:
    """Grow a ball around a random vertex until the edge budget is met.

    Whole BFS layers are added while the induced edge count stays below
    `n_edges`; the last layer is filled vertex by vertex in discovery
    order, skipping vertices that would overshoot.  Returns
    (subgraph, cut_mask, vertex map), where `cut_mask` marks vertices
    that lost at least one neighbor to the trimming.
    """
    if n_edges > g.n_edges:
        raise ValueError(f"subsample of {n_edges} edges exceeds graph size {g.n_edges}")
    start = int(rng.integers(0, g.n_vertices))
    included = {start}
    order = [start]
    edge_count = 0
    frontier = [start]

    def induced_new_edges(v):
        return sum(1 for u in g.neighbors(v) if int(u) in included)

    while frontier and edge_count < n_edges:
        nxt = []
        nxt_seen = set()
        for u in frontier:
            for w in g.neighbors(u):
                w = int(w)
                if w not in included and w not in nxt_seen:
                    nxt_seen.add(w)
                    nxt.append(w)
        if not nxt:
            break
        # count edges the whole layer would add
        layer_edges = 0
        tmp_in = set()
        for v in nxt:
            layer_edges += sum(
                1 for u in g.neighbors(v) if int(u) in included or int(u) in tmp_in
            )
            tmp_in.add(v)
        if edge_count + layer_edges <= n_edges:
            for v in nxt:
                edge_count += induced_new_edges(v)
                included.add(v)
                order.append(v)
            frontier = nxt
            continue
        # partial layer: add vertex by vertex in discovery order
        for v in nxt:
            add = induced_new_edges(v)
            if edge_count + add <= n_edges:
                included.add(v)
                order.append(v)
                edge_count += add
                if edge_count == n_edges:
                    break
        break

    local = {v: i for i, v in enumerate(order)}
    ctypes = [int(g.ctypes[v]) for v in order]
    edges = []
    for v in order:
        for u in g.neighbors(v):
            u = int(u)
            if u in local and local[u] > local[v]:
                edges.append((local[v], local[u]))
    sub = AdjacencyGraph(ctypes, edges)
    cut = np.zeros(len(order), dtype=bool)
    for v in order:
        if sub.degree(local[v]) != g.degree(v):
            cut[local[v]] = True
    return sub, cut, order


_BAND_CTX = {}


def _band_init(ctypes, indptr, indices, edges, n, r, seed, ref_levels, ref_total, ref_ctype):
    _BAND_CTX["graph"] = (ctypes, indptr, indices, edges)
    _BAND_CTX["params"] = (n, r, seed)
    _BAND_CTX["ref"] = (ref_levels, ref_total, ref_ctype)


def _band_one(i):
    import cellcloth.graphcore as gcore

    ctypes, indptr, indices, edges = _BAND_CTX["graph"]
    n, r, seed = _BAND_CTX["params"]
    ref_levels, ref_total, ref_ctype = _BAND_CTX["ref"]
    g = gcore.AdjacencyGraph.__new__(gcore.AdjacencyGraph)
    g.ctypes, g.indptr, g.indices, g._edges = ctypes, indptr, indices, edges
    ref = Cloth(
        {rr: {SwatchType(e): c for e, c in tbl.items()} for rr, tbl in ref_levels.items()},
        ref_total, ref_ctype, r,
    )
    rng = substream(seed, i)
    sub, cut, _ = subsample(g, n, rng)
    sc = compute_cloth(sub, rmax=r, root_ctype=ref_ctype, cut_mask=cut)
    return float(cloth_distance(sc, ref, r))


def subsample_band(
    g: AdjacencyGraph,
    ref_cloth: Cloth,
    n: int,
    k: int,
    r: int = 7,
    seed: int = 0,
    workers: int = 1,
):
    """Distance distribution of k same-size subsamples to their reference.

    Each subsample's cloth excludes roots whose radius-r ball touches
    the trimmed boundary (those types never occur in the periodic
    reference).  Returns (mean, sample std, per-sample distances);
    bit-reproducible for a fixed seed, regardless of worker count.
    """
    if k < 2 and n < g.n_edges:
        raise ValueError("k must be at least 2 for a standard deviation")
    ref_levels = {
        rr: {t.encoding: c for t, c in tbl.items()}
        for rr, tbl in ref_cloth.levels.items()
        if rr <= r
    }
    init_args = (
        g.ctypes, g.indptr, g.indices, g.edges,
        n, r, seed,
        ref_levels, ref_cloth.total_roots, ref_cloth.root_ctype,
    )
    if workers > 1 and k > 1:
        with ProcessPoolExecutor(
            max_workers=workers, initializer=_band_init, initargs=init_args
        ) as pool:
            samples = list(pool.map(_band_one, range(k)))
    else:
        _band_init(*init_args)
        samples = [_band_one(i) for i in range(k)]
    mean = statistics.fmean(samples)
    std = statistics.stdev(samples) if len(samples) > 1 else 0.0
    return mean, std, samples


def is_converged(curve: DistanceCurve, band: dict) -> list:
    """Per checkpoint: distance within one standard deviation above the mean.

    `band` maps edge count -> (mean, std).
    """
    verdicts = []
    for edges, value in curve.entries:
        if edges not in band:
            raise ValueError(f"no band entry for checkpoint at {edges} edges")
        mean, std = band[edges][0], band[edges][1]
        verdicts.append(value <= mean + std)
    return verdicts
