"""Typed adjacency graphs of cell complexes.

A cell complex is encoded as a simple graph with one vertex per cell.
Each vertex carries the dimension of its cell (0..3) and every edge
joins two incident cells whose dimensions differ by exactly one.  For a
2D grain-boundary network the convention is: triple junctions are
0-cells (degree 3) and boundaries are 1-cells (degree 2).

Graphs are immutable after construction and safe to share between
concurrent readers.

Text file format (UTF-8, LF): one record per line, ``v <id> <ctype>``
then ``e <id> <id>``; ``#`` starts a comment.  Vertex ids must be dense
``0..n-1`` and are assigned meaning in file order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "GraphError",
    "AdjacencyGraph",
    "DegreeConstraint",
    "GRAIN_CONSTRAINT",
    "load_graph",
    "save_graph",
    "check_constraint",
    "disjoint_union",
    "relabel",
]


class GraphError(ValueError):
    """Malformed graph file or violated structural invariant."""


class AdjacencyGraph:
    """Immutable typed adjacency graph.

    Vertices are dense integers ``0..n-1``.  `ctypes[i]` is the cell
    dimension of vertex ``i``.  Adjacency is stored in CSR form
    (`indptr`, `indices`) with neighbor lists sorted ascending.
    """

    __slots__ = ("ctypes", "indptr", "indices", "_edges")

    def __init__(self, ctypes, edges):
        ctypes = np.asarray(ctypes, dtype=np.int8)
        if ctypes.ndim != 1:
            raise GraphError("ctypes must be a flat sequence")
        if ctypes.size and (ctypes.min() < 0 or ctypes.max() > 3):
            raise GraphError("cell dimensions must be in 0..3")
        n = ctypes.size

        pairs = []
        seen = set()
        for a, b in edges:
            a, b = int(a), int(b)
            if a == b:
                raise GraphError(f"self-loop at vertex {a}")
            if not (0 <= a < n and 0 <= b < n):
                raise GraphError(f"edge ({a},{b}) references unknown vertex")
            key = (a, b) if a < b else (b, a)
            if key in seen:
                raise GraphError(f"duplicate edge ({key[0]},{key[1]})")
            if abs(int(ctypes[a]) - int(ctypes[b])) != 1:
                raise GraphError(
                    f"dimension gap: edge ({a},{b}) joins ctypes "
                    f"{int(ctypes[a])} and {int(ctypes[b])}"
                )
            seen.add(key)
            pairs.append(key)
        pairs.sort()

        deg = np.zeros(n, dtype=np.int64)
        for a, b in pairs:
            deg[a] += 1
            deg[b] += 1
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(deg, out=indptr[1:])
        # pairs are sorted, so filling first-endpoint slots then
        # second-endpoint slots leaves every neighbor list ascending:
        # a vertex receives all smaller neighbors before larger ones.
        indices = np.empty(2 * len(pairs), dtype=np.int64)
        cursor = indptr[:-1].copy()
        for a, b in pairs:
            indices[cursor[a]] = b
            cursor[a] += 1
            indices[cursor[b]] = a
            cursor[b] += 1

        self.ctypes = ctypes
        self.ctypes.setflags(write=False)
        self.indptr = indptr
        self.indptr.setflags(write=False)
        self.indices = indices
        self.indices.setflags(write=False)
        self._edges = tuple(pairs)

    @property
    def n_vertices(self) -> int:
        return self.ctypes.size

    @property
    def n_edges(self) -> int:
        return len(self._edges)

    @property
    def edges(self):
        return self._edges

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def degree(self, v: int) -> int:
        return int(self.indptr[v + 1] - self.indptr[v])

    def vertices_of_ctype(self, ctype: int) -> np.ndarray:
        return np.nonzero(self.ctypes == ctype)[0]

    def __eq__(self, other):
        if not isinstance(other, AdjacencyGraph):
            return NotImplemented
        return (
            np.array_equal(self.ctypes, other.ctypes)
            and self._edges == other._edges
        )

    def __hash__(self):
        return hash((self.ctypes.tobytes(), self._edges))

    def __repr__(self):
        return f"AdjacencyGraph(n={self.n_vertices}, m={self.n_edges})"


@dataclass(frozen=True)
class DegreeConstraint:
    """Exact degree required per cell dimension (missing = unconstrained)."""

    degrees: dict = field(default_factory=dict)

    def degree_of(self, ctype: int):
        return self.degrees.get(int(ctype))


#: 2D grain-boundary networks: junctions (0-cells) trivalent, boundaries
#: (1-cells) divalent.
GRAIN_CONSTRAINT = DegreeConstraint({0: 3, 1: 2})


def check_constraint(g: AdjacencyGraph, c: DegreeConstraint) -> list[int]:
    """Ids of vertices whose degree differs from their constrained value."""
    bad = []
    for v in range(g.n_vertices):
        want = c.degree_of(g.ctypes[v])
        if want is not None and g.degree(v) != want:
            bad.append(v)
    return bad


def load_graph(path) -> AdjacencyGraph:
    """Parse a text graph file; report offending line numbers on error."""
    ctypes = []
    edges = []
    edge_lines = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            try:
                if parts[0] == "v":
                    if len(parts) != 3:
                        raise GraphError("expected 'v <id> <ctype>'")
                    vid, ctype = int(parts[1]), int(parts[2])
                    if vid != len(ctypes):
                        raise GraphError(
                            f"vertex ids must be dense in file order (got {vid}, "
                            f"expected {len(ctypes)})"
                        )
                    if not 0 <= ctype <= 3:
                        raise GraphError(f"cell dimension {ctype} out of range 0..3")
                    ctypes.append(ctype)
                elif parts[0] == "e":
                    if len(parts) != 3:
                        raise GraphError("expected 'e <id> <id>'")
                    a, b = int(parts[1]), int(parts[2])
                    edges.append((a, b))
                    key = (a, b) if a < b else (b, a)
                    edge_lines.setdefault(key, lineno)
                else:
                    raise GraphError(f"unknown record type {parts[0]!r}")
            except GraphError as exc:
                raise GraphError(f"{path}:{lineno}: {exc}") from None
            except ValueError:
                raise GraphError(f"{path}:{lineno}: malformed integer") from None
    try:
        return AdjacencyGraph(ctypes, edges)
    except GraphError as exc:
        # attribute structural failures to the edge line that caused them
        lineno = None
        msg = str(exc)
        for key, ln in edge_lines.items():
            if f"({key[0]},{key[1]})" in msg:
                lineno = ln
                break
        where = f"{path}:{lineno}: " if lineno else f"{path}: "
        raise GraphError(where + msg) from None


def save_graph(g: AdjacencyGraph, path) -> None:
    """Write `g` in the text format; `load_graph(save_graph(g)) == g` bit-exactly."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for v in range(g.n_vertices):
            fh.write(f"v {v} {int(g.ctypes[v])}\n")
        for a, b in g.edges:
            fh.write(f"e {a} {b}\n")


def disjoint_union(g1: AdjacencyGraph, g2: AdjacencyGraph) -> AdjacencyGraph:
    off = g1.n_vertices
    ctypes = np.concatenate([g1.ctypes, g2.ctypes]) if off else g2.ctypes.copy()
    edges = list(g1.edges) + [(a + off, b + off) for a, b in g2.edges]
    return AdjacencyGraph(ctypes, edges)


def relabel(g: AdjacencyGraph, perm) -> AdjacencyGraph:
    """Return the graph with vertex ``v`` renamed to ``perm[v]``."""
    perm = np.asarray(perm, dtype=np.int64)
    if sorted(perm.tolist()) != list(range(g.n_vertices)):
        raise GraphError("perm must be a permutation of 0..n-1")
    ctypes = np.empty_like(g.ctypes)
    ctypes[perm] = g.ctypes
    edges = [(int(perm[a]), int(perm[b])) for a, b in g.edges]
    return AdjacencyGraph(ctypes, edges)
