"""Cloths: per-radius frequency distributions of swatch types.

A cloth aggregates the swatch types of every root of a chosen cell
dimension, one exact integer count table per radius.  Counts are the
source of truth; frequencies are derived views, so the descendant-sum
law (the count of a type equals the sum of its children's counts on the
next level) holds exactly and downstream distance computations do not
accumulate float drift.

Cloth text file format (UTF-8, LF)::

    cloth v1 roots=<N> ctype=<d> rmax=<R>
    <r> <hex-encoding> <count>

Lines are sorted by (radius, encoding) so files are bit-reproducible.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from cellcloth.graphcore import AdjacencyGraph
from cellcloth.swatch import SwatchType, canonical_encoding, canonicalize, decode, restrict

__all__ = [
    "Cloth",
    "SwatchTypeTree",
    "compute_cloth",
    "build_tree",
    "parent_type",
    "ancestor_chain",
    "merge_cloths",
    "write_cloth",
    "read_cloth",
]

log = logging.getLogger(__name__)


@dataclass
class Cloth:
    """Exact swatch-type counts per radius over a fixed root set."""

    levels: dict  # radius -> {SwatchType: count}
    total_roots: int
    root_ctype: int
    rmax: int

    def count(self, t: SwatchType) -> int:
        return self.levels.get(t.radius, {}).get(t, 0)

    def frequency(self, t: SwatchType) -> Fraction:
        return Fraction(self.count(t), self.total_roots)

    def frequencies(self, r: int) -> dict:
        return {t: Fraction(c, self.total_roots) for t, c in self.levels[r].items()}

    def types_at(self, r: int):
        return sorted(self.levels.get(r, {}))

    def check(self) -> None:
        """Internal consistency: every populated level sums to total_roots."""
        for r, table in self.levels.items():
            s = sum(table.values())
            if s != self.total_roots:
                raise ValueError(
                    f"level {r} counts sum to {s}, expected {self.total_roots}"
                )


# ---------------------------------------------------------------------------
# per-root scan (hot path: plain lists, no Swatch objects)
# ---------------------------------------------------------------------------

def _root_encodings(indptr, indices, ctypes, root, rmax, cut_mask):
    """Canonical encodings of the balls of radius 0..rmax around `root`.

    Returns None when a cut vertex (one that lost neighbors to graph
    trimming) lies strictly inside the radius-rmax ball, since then the
    ball differs from the one the untrimmed host would produce.
    """
    order = [root]
    dist = {root: 0}
    frontier = [root]
    for d in range(1, rmax + 1):
        nxt = []
        for u in frontier:
            for v in indices[indptr[u]:indptr[u + 1]]:
                v = int(v)
                if v not in dist:
                    dist[v] = d
                    order.append(v)
                    nxt.append(v)
        if not nxt:
            break
        frontier = nxt

    if cut_mask is not None:
        for v, d in dist.items():
            if d < rmax and cut_mask[v]:
                return None

    local = {v: i for i, v in enumerate(order)}
    n_full = len(order)
    adj_full = [None] * n_full
    for i, v in enumerate(order):
        adj_full[i] = sorted(
            local[int(u)] for u in indices[indptr[v]:indptr[v + 1]] if int(u) in local
        )
    ct_full = [int(ctypes[v]) for v in order]
    dist_full = [dist[v] for v in order]

    # local ids follow BFS order, so the radius-r ball is a prefix
    k = [0] * (rmax + 2)
    for d in dist_full:
        k[d + 1] += 1
    for r in range(1, rmax + 2):
        k[r] += k[r - 1]

    out = []
    for r in range(rmax + 1):
        kr = k[r + 1]
        adj_r = [[u for u in adj_full[v] if u < kr] for v in range(kr)]
        out.append(
            canonical_encoding(r, ct_full[:kr], dist_full[:kr], adj_r)
        )
    return out


_WORKER = {}


def _worker_init(indptr, indices, ctypes, rmax, cut_mask):
    _WORKER["args"] = (indptr, indices, ctypes, rmax, cut_mask)


def _worker_chunk(roots):
    indptr, indices, ctypes, rmax, cut_mask = _WORKER["args"]
    tallies = [dict() for _ in range(rmax + 1)]
    used = 0
    for root in roots:
        encs = _root_encodings(indptr, indices, ctypes, root, rmax, cut_mask)
        if encs is None:
            continue
        used += 1
        for r, e in enumerate(encs):
            tallies[r][e] = tallies[r].get(e, 0) + 1
    return used, tallies


def compute_cloth(
    g: AdjacencyGraph,
    rmax: int = 7,
    root_ctype: int = 0,
    cut_mask=None,
    workers: int = 1,
) -> Cloth:
    """Count swatch types of every radius 0..rmax over all eligible roots.

    Roots are the vertices of `root_ctype`.  When `cut_mask` marks
    trimmed-boundary vertices (non-periodic inputs), roots whose
    radius-rmax ball strictly contains a cut vertex are excluded from
    all levels, keeping one root total across radii.  Aggregation is a
    commutative merge, so results do not depend on scheduling.
    """
    roots = [int(v) for v in g.vertices_of_ctype(root_ctype)]
    if not roots:
        raise ValueError(f"graph has no vertices of ctype {root_ctype}")

    if cut_mask is not None:
        cut_mask = np.asarray(cut_mask, dtype=bool)

    if workers > 1 and len(roots) > 256:
        chunks = [roots[i::workers * 4] for i in range(workers * 4)]
        with ProcessPoolExecutor(
            max_workers=workers,
            initializer=_worker_init,
            initargs=(g.indptr, g.indices, g.ctypes, rmax, cut_mask),
        ) as pool:
            results = list(pool.map(_worker_chunk, chunks))
    else:
        _worker_init(g.indptr, g.indices, g.ctypes, rmax, cut_mask)
        results = [_worker_chunk(roots)]

    total = 0
    tallies = [dict() for _ in range(rmax + 1)]
    for used, part in results:
        total += used
        for r in range(rmax + 1):
            t = tallies[r]
            for e, c in part[r].items():
                t[e] = t.get(e, 0) + c
    if total == 0:
        raise ValueError("all roots were excluded by the cut mask")

    levels = {
        r: {SwatchType(e): c for e, c in tallies[r].items()} for r in range(rmax + 1)
    }
    for r, table in levels.items():
        if len(table) > total / 10:
            log.warning(
                "cloth level %d has %d types over %d roots: "
                "sampling errors are substantial at this radius",
                r, len(table), total,
            )
    return Cloth(levels=levels, total_roots=total, root_ctype=root_ctype, rmax=rmax)


def merge_cloths(c1: Cloth, c2: Cloth) -> Cloth:
    """Counts of the disjoint union of the underlying graphs."""
    if c1.rmax != c2.rmax or c1.root_ctype != c2.root_ctype:
        raise ValueError("cloths must share rmax and root ctype")
    levels = {}
    for r in range(c1.rmax + 1):
        table = dict(c1.levels.get(r, {}))
        for t, c in c2.levels.get(r, {}).items():
            table[t] = table.get(t, 0) + c
        levels[r] = table
    return Cloth(levels, c1.total_roots + c2.total_roots, c1.root_ctype, c1.rmax)


# ---------------------------------------------------------------------------
# the tree of swatch types
# ---------------------------------------------------------------------------

_PARENT_MEMO: dict = {}


def parent_type(t: SwatchType) -> SwatchType:
    """Radius-(r-1) restriction of a type (restrict, then canonicalize)."""
    if t.radius == 0:
        raise ValueError("a radius-0 type has no parent")
    hit = _PARENT_MEMO.get(t)
    if hit is None:
        hit = canonicalize(restrict(decode(t), t.radius - 1))
        _PARENT_MEMO[t] = hit
    return hit


def ancestor_chain(t: SwatchType) -> list:
    """[t, parent(t), ..., radius-0 type]."""
    chain = [t]
    while chain[-1].radius > 0:
        chain.append(parent_type(chain[-1]))
    return chain


@dataclass
class SwatchTypeTree:
    """Observed swatch types linked parent -> child by restriction."""

    parent: dict = field(default_factory=dict)   # SwatchType -> SwatchType
    children: dict = field(default_factory=dict)  # SwatchType -> [SwatchType]
    counts: dict = field(default_factory=dict)   # SwatchType -> int
    rmax: int = 0

    def nodes_at(self, r: int):
        return sorted(t for t in self.counts if t.radius == r)


def build_tree(cloth: Cloth) -> SwatchTypeTree:
    """Link each level-r type to its level-(r-1) restriction.

    Raises on an orphan (a restriction absent from the lower level) and
    verifies the descendant-sum law exactly on counts.
    """
    if not cloth.levels:
        raise ValueError("cloth has no levels")
    tree = SwatchTypeTree(rmax=cloth.rmax)
    for r in range(cloth.rmax + 1):
        for t, c in cloth.levels.get(r, {}).items():
            tree.counts[t] = c
    for r in range(1, cloth.rmax + 1):
        lower = cloth.levels.get(r - 1, {})
        for t in cloth.levels.get(r, {}):
            p = parent_type(t)
            if p not in lower:
                raise ValueError(
                    f"orphan type at level {r}: restriction {p.hex[:20]}... "
                    "is absent one level down (inconsistent cloth)"
                )
            tree.parent[t] = p
            tree.children.setdefault(p, []).append(t)
    # descendant-sum law, exact
    for r in range(cloth.rmax):
        for t, c in cloth.levels.get(r, {}).items():
            kids = tree.children.get(t, [])
            s = sum(tree.counts[k] for k in kids)
            if s != c:
                raise ValueError(
                    f"descendant-sum violation at level {r}: {c} != {s}"
                )
    for t in tree.children:
        tree.children[t].sort()
    return tree


# ---------------------------------------------------------------------------
# file I/O
# ---------------------------------------------------------------------------

def write_cloth(cloth: Cloth, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(
            f"cloth v1 roots={cloth.total_roots} ctype={cloth.root_ctype} "
            f"rmax={cloth.rmax}\n"
        )
        for r in sorted(cloth.levels):
            for t in sorted(cloth.levels[r]):
                fh.write(f"{r} {t.hex} {cloth.levels[r][t]}\n")


def read_cloth(path) -> Cloth:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if header[:2] != ["cloth", "v1"]:
            raise ValueError(f"{path}: not a cloth v1 file")
        meta = dict(kv.split("=") for kv in header[2:])
        total = int(meta["roots"])
        ctype = int(meta["ctype"])
        rmax = int(meta["rmax"])
        levels: dict = {r: {} for r in range(rmax + 1)}
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            r_s, hexenc, count = line.split()
            levels[int(r_s)][SwatchType.from_hex(hexenc)] = int(count)
    cloth = Cloth(levels, total, ctype, rmax)
    cloth.check()
    return cloth
