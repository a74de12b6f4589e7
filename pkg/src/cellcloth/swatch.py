"""Swatches: rooted balls of bounded radius and their canonical types.

A swatch of radius ``r`` around a root vertex contains every vertex
reachable in at most ``r`` edges, with all induced edges.  Two swatches
have the same *type* when a root-preserving, ctype-preserving graph
isomorphism maps one onto the other.  Types are identified by a
canonical byte encoding computed with partition refinement seeded by
(distance-from-root, ctype) colors followed by backtracking over
ambiguous cells, keeping the lexicographically minimal encoding.  The
procedure is exact (isomorphism-complete), not hashed.

Encoding layout (normative, so cloth files are portable):

* byte 0: radius
* bytes 1-2: vertex count, big-endian
* next n bytes: ctypes in canonical label order (label 0 is the root)
* remaining bytes: upper-triangular adjacency bits, row-major over
  label pairs ``i < j``, most-significant bit first, zero-padded to a
  whole byte.
"""

from __future__ import annotations

from dataclasses import dataclass

from cellcloth.graphcore import AdjacencyGraph, DegreeConstraint

__all__ = [
    "Swatch",
    "SwatchType",
    "extract_swatch",
    "restrict",
    "canonicalize",
    "decode",
    "enumerate_swatch_types",
    "is_free",
]

# Backtracking never needs anywhere near this many leaves on bounded-degree
# balls; the cap guards against pathological non-swatch inputs.
_MAX_LEAVES = 200_000


class Swatch:
    """A rooted ball: local vertex 0 is the root.

    `ctypes[i]` and `dists[i]` give the cell dimension and BFS distance
    of local vertex ``i``; `adj` holds sorted neighbor lists.
    """

    __slots__ = ("radius", "ctypes", "dists", "adj")

    def __init__(self, radius, ctypes, dists, adj):
        self.radius = int(radius)
        self.ctypes = list(ctypes)
        self.dists = list(dists)
        self.adj = [sorted(a) for a in adj]

    @property
    def n_vertices(self) -> int:
        return len(self.ctypes)

    @property
    def n_edges(self) -> int:
        return sum(len(a) for a in self.adj) // 2

    def edge_set(self):
        return {
            (v, u) if v < u else (u, v)
            for v in range(self.n_vertices)
            for u in self.adj[v]
        }

    def __repr__(self):
        return f"Swatch(r={self.radius}, n={self.n_vertices})"


@dataclass(frozen=True, order=True)
class SwatchType:
    """Canonical form of a swatch; equality means isomorphic swatches."""

    encoding: bytes

    @property
    def radius(self) -> int:
        return self.encoding[0]

    @property
    def vertex_count(self) -> int:
        return int.from_bytes(self.encoding[1:3], "big")

    @property
    def hex(self) -> str:
        return self.encoding.hex()

    @staticmethod
    def from_hex(s: str) -> "SwatchType":
        return SwatchType(bytes.fromhex(s))

    def __repr__(self):
        return f"SwatchType(r={self.radius}, n={self.vertex_count}, {self.hex[:24]}...)"


def extract_swatch(g: AdjacencyGraph, root: int, r: int) -> Swatch:
    """BFS ball of radius `r` around `root` with induced edges."""
    root = int(root)
    if not 0 <= root < g.n_vertices:
        raise KeyError(f"unknown root id {root}")
    if r < 0:
        raise ValueError("radius must be non-negative")
    order = [root]
    dist = {root: 0}
    indptr, indices = g.indptr, g.indices
    frontier = [root]
    for d in range(1, r + 1):
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
    local = {v: i for i, v in enumerate(order)}
    adj = [
        [local[int(u)] for u in g.neighbors(v) if int(u) in local]
        for v in order
    ]
    return Swatch(r, [int(g.ctypes[v]) for v in order], [dist[v] for v in order], adj)


def restrict(s: Swatch, r: int) -> Swatch:
    """The subswatch of radius `r` about the same root."""
    if r > s.radius:
        raise ValueError(f"cannot restrict radius-{s.radius} swatch to {r}")
    if r == s.radius:
        return s
    keep = [v for v in range(s.n_vertices) if s.dists[v] <= r]
    local = {v: i for i, v in enumerate(keep)}
    adj = [[local[u] for u in s.adj[v] if u in local] for v in keep]
    return Swatch(r, [s.ctypes[v] for v in keep], [s.dists[v] for v in keep], adj)


def is_free(s: Swatch) -> bool:
    """True when the swatch contains no cycle."""
    return s.n_edges == s.n_vertices - 1


# ---------------------------------------------------------------------------
# canonical labeling
# ---------------------------------------------------------------------------

def _encode_leaf(n: int, ctypes: list, adj: list, colors: list):
    """(ctype bytes, adjacency bit int) for a discrete coloring."""
    inv = [0] * n
    for v in range(n):
        inv[colors[v]] = v
    ct = bytes(ctypes[inv[i]] for i in range(n))
    npairs = n * (n - 1) // 2
    bits = 0
    for v in range(n):
        i = colors[v]
        for u in adj[v]:
            j = colors[u]
            if i < j:
                k = i * (2 * n - i - 1) // 2 + (j - i - 1)
                bits |= 1 << (npairs - 1 - k)
    return ct, bits


class _Partition:
    """Ordered partition in nauty-style lab/position form.

    ``lab`` lists the vertices in cell order; a vertex's color is the
    start position of its cell (`cs[v]`), so colors are comparable and
    the cell order is the canonical order.  Splitting a cell keeps its
    fragments consecutive, which makes refinement after an
    individualization a local operation.
    """

    __slots__ = ("n", "adj", "lab", "pos", "cs", "cend", "ncells")

    def __init__(self, n, adj, init_keys):
        self.n = n
        self.adj = adj
        order = sorted(range(n), key=lambda v: (init_keys[v], v))
        self.lab = order
        self.pos = [0] * n
        for i, v in enumerate(order):
            self.pos[v] = i
        self.cs = [0] * n
        self.cend = [0] * n
        start = 0
        self.ncells = 0
        for i in range(1, n + 1):
            if i == n or init_keys[order[i]] != init_keys[order[start]]:
                for j in range(start, i):
                    self.cs[order[j]] = start
                self.cend[start] = i
                self.ncells += 1
                start = i

    def snapshot(self):
        return (list(self.lab), list(self.pos), list(self.cs), list(self.cend), self.ncells)

    def restore(self, snap):
        self.lab, self.pos, self.cs, self.cend, self.ncells = (
            list(snap[0]), list(snap[1]), list(snap[2]), list(snap[3]), snap[4]
        )

    def first_nonsingleton(self):
        lab, cend = self.lab, self.cend
        i = 0
        while i < self.n:
            e = cend[i]
            if e - i > 1:
                return i
            i = e
        return -1

    def split_cell(self, members_in_order, start):
        """Split the cell at `start` into singleton-per-listed-member runs.

        `members_in_order` must be the full cell in the desired order.
        Enqueues nothing; returns new cell starts.
        """
        lab, pos, cs, cend = self.lab, self.pos, self.cs, self.cend
        starts = []
        p = start
        for v in members_in_order:
            lab[p] = v
            pos[v] = p
            cs[v] = p
            cend[p] = p + 1
            starts.append(p)
            p += 1
        self.ncells += len(members_in_order) - 1
        return starts

    def refine(self, queue):
        """Worklist equitable refinement; `queue` holds splitter cell starts.

        Fragment order within a split cell is by ascending edge count to
        the splitter, an isomorphism-invariant convention.
        """
        lab, pos, cs, cend, adj = self.lab, self.pos, self.cs, self.cend, self.adj
        while queue:
            s = queue.pop()
            e = cend[s]
            cnt = {}
            for i in range(s, e):
                for w in adj[lab[i]]:
                    cnt[w] = cnt.get(w, 0) + 1
            by_cell = {}
            for w, c in cnt.items():
                cst = cs[w]
                if cend[cst] - cst > 1:
                    g = by_cell.get(cst)
                    if g is None:
                        by_cell[cst] = {w: c}
                    else:
                        g[w] = c
            for cstart in sorted(by_cell):
                ce = cend[cstart]
                touched = by_cell[cstart]
                if len(touched) == ce - cstart and len(set(touched.values())) == 1:
                    continue  # uniform: no split
                groups = {}
                for i in range(cstart, ce):
                    v = lab[i]
                    groups.setdefault(touched.get(v, 0), []).append(v)
                if len(groups) == 1:
                    continue
                p = cstart
                for val in sorted(groups):
                    g = groups[val]
                    a = p
                    for v in g:
                        lab[p] = v
                        pos[v] = p
                        cs[v] = a
                        p += 1
                    cend[a] = p
                    queue.append(a)
                self.ncells += len(groups) - 1
        return self

    def individualize(self, v):
        """Move `v` into its own cell at the front of its current cell."""
        lab, pos, cs, cend = self.lab, self.pos, self.cs, self.cend
        s = cs[v]
        e = cend[s]
        pv = pos[v]
        u = lab[s]
        lab[s], lab[pv] = v, u
        pos[v], pos[u] = s, pv
        cend[s] = s + 1
        cs[v] = s
        for i in range(s + 1, e):
            cs[lab[i]] = s + 1
        cend[s + 1] = e
        self.ncells += 1
        return [s, s + 1]


class _Canonizer:
    """Individualization-refinement search with automorphism pruning.

    When two leaves of the search tree produce identical encodings, the
    permutation relating them is an automorphism of the ball; branches
    of a search node lying in one orbit of the automorphisms that fix
    the node's individualized prefix lead to identical subtrees, so only
    one representative per orbit is explored.  Cells whose members all
    share one neighborhood (twins) are ordered outright without
    branching.  Without these prunings, symmetric balls (lattices,
    pendant trees) blow up exponentially.
    """

    def __init__(self, n, ctypes, adj):
        self.n = n
        self.ctypes = ctypes
        self.adj = adj
        self.best = None
        self.leaf_perms = {}
        self.gens = []
        self.leaves = 0

    def _leaf(self, part):
        self.leaves += 1
        if self.leaves > _MAX_LEAVES:
            raise RuntimeError("canonical labeling exceeded search bound")
        colors = part.cs
        cand = _encode_leaf(self.n, self.ctypes, self.adj, colors)
        prev = self.leaf_perms.get(cand)
        if prev is None:
            if len(self.leaf_perms) < 4096:
                self.leaf_perms[cand] = list(colors)
        else:
            inv = [0] * self.n
            for v in range(self.n):
                inv[prev[v]] = v
            self.gens.append([inv[colors[v]] for v in range(self.n)])
        if self.best is None or cand < self.best:
            self.best = cand

    def search(self, part, prefix):
        while True:
            if part.ncells == self.n:
                self._leaf(part)
                return
            target = part.first_nonsingleton()
            members = part.lab[target:part.cend[target]]

            # twin collapse: identical neighborhoods commute with everything
            nbr0 = frozenset(self.adj[members[0]])
            if all(frozenset(self.adj[v]) == nbr0 for v in members[1:]):
                starts = part.split_cell(members, target)
                part.refine(list(starts))
                continue  # tail recursion, same prefix
            break

        snap = part.snapshot()
        for i, v in enumerate(members):
            if i > 0:
                # generators accumulate while the loop runs; the first
                # member of every orbit is always explored, so skipping a
                # member equivalent to any earlier one is sound
                gens = [g for g in self.gens if all(g[p] == p for p in prefix)]
                if gens and _same_orbit(gens, members[:i], v):
                    continue
                part.restore(snap)
            queue = part.individualize(v)
            part.refine(queue)
            prefix.append(v)
            self.search(part, prefix)
            prefix.pop()
        part.restore(snap)


def _same_orbit(gens, explored, v):
    """True if `v` reaches any vertex in `explored` under `gens`."""
    seen = {v}
    frontier = [v]
    explored_set = set(explored)
    while frontier:
        x = frontier.pop()
        for g in gens:
            y = g[x]
            if y in explored_set:
                return True
            if y not in seen:
                seen.add(y)
                frontier.append(y)
        if len(seen) > 4096:
            break
    return False


def canonical_encoding(radius: int, ctypes: list, dists: list, adj: list) -> bytes:
    """Canonical byte encoding of a rooted colored ball."""
    n = len(ctypes)
    if n > 0xFFFF:
        raise ValueError("swatch too large to encode")
    head = bytes([radius & 0xFF]) + n.to_bytes(2, "big")
    if n == 0:
        return head
    init = [(dists[v], ctypes[v]) for v in range(n)]
    part = _Partition(n, adj, init)
    starts = []
    i = 0
    while i < n:
        starts.append(i)
        i = part.cend[i]
    part.refine(starts)

    searcher = _Canonizer(n, ctypes, adj)
    searcher.search(part, [])

    ct, bits = searcher.best
    npairs = n * (n - 1) // 2
    nbytes = (npairs + 7) // 8
    body = (bits << (8 * nbytes - npairs)).to_bytes(nbytes, "big") if nbytes else b""
    return head + ct + body


def canonicalize(s: Swatch) -> SwatchType:
    """Reduce a swatch to its canonical type."""
    return SwatchType(canonical_encoding(s.radius, s.ctypes, s.dists, s.adj))


def decode(t: SwatchType) -> Swatch:
    """Reconstruct a swatch from its canonical encoding (root = vertex 0)."""
    enc = t.encoding
    radius = enc[0]
    n = int.from_bytes(enc[1:3], "big")
    ctypes = list(enc[3:3 + n])
    npairs = n * (n - 1) // 2
    bits = int.from_bytes(enc[3 + n:], "big") >> ((8 * ((npairs + 7) // 8)) - npairs) if npairs else 0
    adj = [[] for _ in range(n)]
    k = 0
    for i in range(n):
        for j in range(i + 1, n):
            if bits & (1 << (npairs - 1 - k)):
                adj[i].append(j)
                adj[j].append(i)
            k += 1
    # distances are implied by structure: BFS from the root
    dists = [-1] * n
    if n:
        dists[0] = 0
        frontier = [0]
        d = 0
        while frontier:
            d += 1
            nxt = []
            for u in frontier:
                for v in adj[u]:
                    if dists[v] < 0:
                        dists[v] = d
                        nxt.append(v)
            frontier = nxt
    if any(d < 0 for d in dists):
        raise ValueError("encoding is not a connected rooted ball")
    return Swatch(radius, ctypes, dists, adj)


# ---------------------------------------------------------------------------
# exhaustive enumeration of admissible types
# ---------------------------------------------------------------------------

def _extensions(s: Swatch, c: DegreeConstraint, first_only: bool = False):
    """All radius-(r+1) swatches extending `s` under constraint `c`.

    Vertices at distance ``s.radius`` become interior and must reach
    their exact constrained degree through edges to same-level vertices
    or to new frontier vertices; new vertices stay at or below their
    constrained degree.  Results may duplicate up to isomorphism; the
    caller deduplicates by canonical type.
    """
    n0 = s.n_vertices
    r = s.radius
    frontier = [v for v in range(n0) if s.dists[v] == r]
    allowed_ctypes = sorted(c.degrees) if c.degrees else [0, 1, 2, 3]

    def want(ct):
        w = c.degree_of(ct)
        return w if w is not None else 3  # unconstrained ctypes capped for search

    deficits = {}
    for v in frontier:
        d = want(s.ctypes[v]) - len(s.adj[v])
        if d < 0:
            return []
        if d > 0:
            deficits[v] = d

    results = []

    def emit(ctypes, dists, adj):
        results.append(Swatch(r + 1, ctypes, dists, adj))

    # state: adjacency grows in place on copies
    def rec(defs, ctypes, dists, adj, new_ids):
        if first_only and results:
            return
        pending = [v for v in sorted(defs) if defs[v] > 0]
        if not pending:
            emit(list(ctypes), list(dists), [list(a) for a in adj])
            return
        v = pending[0]
        vt = ctypes[v]
        # (a) connect to a later same-level vertex with remaining deficit
        for u in pending[1:]:
            if abs(ctypes[u] - vt) != 1 or u in adj[v]:
                continue
            defs2 = dict(defs)
            defs2[v] -= 1
            defs2[u] -= 1
            adj[v].append(u)
            adj[u].append(v)
            rec(defs2, ctypes, dists, adj, new_ids)
            adj[v].pop()
            adj[u].pop()
        # (b) connect to an existing new-level vertex with capacity
        for u in new_ids:
            if abs(ctypes[u] - vt) != 1 or u in adj[v]:
                continue
            if len(adj[u]) >= want(ctypes[u]):
                continue
            defs2 = dict(defs)
            defs2[v] -= 1
            adj[v].append(u)
            adj[u].append(v)
            rec(defs2, ctypes, dists, adj, new_ids)
            adj[v].pop()
            adj[u].pop()
        # (c) create a new frontier vertex of each adjacent ctype the
        # constraint's complex actually contains
        for ct in (vt - 1, vt + 1):
            if not 0 <= ct <= 3 or ct not in allowed_ctypes:
                continue
            u = len(ctypes)
            ctypes.append(ct)
            dists.append(r + 1)
            adj.append([v])
            adj[v].append(u)
            defs2 = dict(defs)
            defs2[v] -= 1
            rec(defs2, ctypes, dists, adj, new_ids + [u])
            adj[v].pop()
            ctypes.pop()
            dists.pop()
            adj.pop()

    rec(deficits, list(s.ctypes), list(s.dists), [list(a) for a in s.adj], [])
    return results


def _completable(s: Swatch, c: DegreeConstraint) -> bool:
    """Default admissibility: the ball extends to a larger valid graph."""
    out = _extensions(s, c, first_only=True)
    return bool(out)


def enumerate_swatch_types(
    r: int,
    c: DegreeConstraint,
    admissible=None,
    root_ctype: int = 0,
    max_types_per_level: int = 200_000,
) -> list[list[SwatchType]]:
    """All pairwise non-isomorphic admissible swatch types per level 0..r.

    Interior vertices carry exact constrained degrees, frontier vertices
    do not exceed them, and the graph is simple.  `admissible` filters
    each generated type (default: the ball has at least one completion
    to a larger constraint-satisfying graph).  Exhaustive search is
    practical for the grain constraint up to about ``r = 4``.
    """
    if admissible is None:
        admissible = lambda s: _completable(s, c)

    levels: list[list[SwatchType]] = []
    current: dict[SwatchType, Swatch] = {}
    root = Swatch(0, [root_ctype], [0], [[]])
    if admissible(root):
        current[canonicalize(root)] = root
    levels.append(sorted(current))

    for _level in range(1, r + 1):
        nxt: dict[SwatchType, Swatch] = {}
        for s in current.values():
            for ext in _extensions(s, c):
                t = canonicalize(ext)
                if t in nxt:
                    continue
                if admissible(ext):
                    nxt[t] = ext
                if len(nxt) > max_types_per_level:
                    raise RuntimeError("enumeration exceeded resource bound")
        current = nxt
        levels.append(sorted(current))
    return levels
