"""Shared fixtures and independent oracles used across the test suite."""

from __future__ import annotations

import random

from cellcloth.graphcore import AdjacencyGraph
from cellcloth.swatch import Swatch


def honeycomb_graph(c: int) -> AdjacencyGraph:
    """Adjacency graph of a c x c periodic honeycomb grain network."""
    def jid(i, j, k):
        return ((i % c) * c + (j % c)) * 2 + k

    net_edges = []
    for i in range(c):
        for j in range(c):
            a = jid(i, j, 0)
            net_edges.append((a, jid(i, j, 1)))
            net_edges.append((a, jid(i - 1, j, 1)))
            net_edges.append((a, jid(i, j - 1, 1)))
    nv = 2 * c * c
    ctypes = [0] * nv + [1] * len(net_edges)
    edges = []
    for b, (u, v) in enumerate(net_edges):
        edges.append((u, nv + b))
        edges.append((v, nv + b))
    return AdjacencyGraph(ctypes, edges)


def random_grain_graph(nj: int, seed: int = 0) -> AdjacencyGraph:
    """Random trivalent junction network as a typed adjacency graph."""
    rng = random.Random(seed)
    while True:
        stubs = [v for v in range(nj) for _ in range(3)]
        rng.shuffle(stubs)
        pairs = [(stubs[2 * i], stubs[2 * i + 1]) for i in range(len(stubs) // 2)]
        if any(a == b for a, b in pairs):
            continue
        seen = set()
        ok = True
        for a, b in pairs:
            k = (min(a, b), max(a, b))
            if k in seen:
                ok = False
                break
            seen.add(k)
        if ok:
            break
    ctypes = [0] * nj + [1] * len(pairs)
    edges = []
    for b, (u, v) in enumerate(pairs):
        edges.append((u, nj + b))
        edges.append((v, nj + b))
    return AdjacencyGraph(ctypes, edges)


def triangle_complex_graph() -> AdjacencyGraph:
    """The triangle as a cell complex: three 0-cells, three 1-cells, one 2-cell."""
    # vertices 0..2: corners, 3..5: sides, 6: face
    ctypes = [0, 0, 0, 1, 1, 1, 2]
    edges = [
        (0, 3), (1, 3),
        (1, 4), (2, 4),
        (2, 5), (0, 5),
        (3, 6), (4, 6), (5, 6),
    ]
    return AdjacencyGraph(ctypes, edges)


# ---------------------------------------------------------------------------
# the two radius-6 swatches used for the 1/13 distance check
# ---------------------------------------------------------------------------

def _tree_swatch_builder():
    """Full free trivalent ball scaffolding shared by both fixtures."""
    ctypes, dists, adj = [0], [0], [[]]

    def add(ct, d, parents):
        vid = len(ctypes)
        ctypes.append(ct)
        dists.append(d)
        adj.append(list(parents))
        for p in parents:
            adj[p].append(vid)
        return vid

    return ctypes, dists, adj, add


def free_swatch_r6() -> Swatch:
    """Fully branching cycle-free radius-6 ball (43 vertices)."""
    ctypes, dists, adj, add = _tree_swatch_builder()
    b = [add(1, 1, [0]) for _ in range(3)]
    u = [add(0, 2, [bi]) for bi in b]
    cs = [add(1, 3, [ui]) for ui in u for _ in range(2)]
    ws = [add(0, 4, [ci]) for ci in cs]
    xs = [add(1, 5, [wi]) for wi in ws for _ in range(2)]
    zs = [add(0, 6, [xi]) for xi in xs]
    s = Swatch(6, ctypes, dists, adj)
    assert s.n_vertices == 43
    return s


def cycle_swatch_r6() -> Swatch:
    """Radius-6 ball whose restriction to 3 is free but which closes a
    2-cycle (digon) at radius 4 and a 4-cycle at radius 6, in units of
    the boundary network."""
    ctypes, dists, adj, add = _tree_swatch_builder()
    b = [add(1, 1, [0]) for _ in range(3)]
    u1, u2, u3 = (add(0, 2, [bi]) for bi in b)
    # u1 subtree: its two boundaries share one junction (the digon)
    c11 = add(1, 3, [u1])
    c12 = add(1, 3, [u1])
    w11 = add(0, 4, [c11, c12])
    x111 = add(1, 5, [w11])
    add(0, 6, [x111])
    # u2 subtree: two branches meeting again at distance 6 (the 4-cycle)
    c21 = add(1, 3, [u2])
    c22 = add(1, 3, [u2])
    wa = add(0, 4, [c21])
    wb = add(0, 4, [c22])
    y1 = add(1, 5, [wa])
    y4 = add(1, 5, [wa])
    y2 = add(1, 5, [wb])
    y3 = add(1, 5, [wb])
    add(0, 6, [y1, y2])
    add(0, 6, [y3, y4])
    # u3 subtree: plain tree
    c31 = add(1, 3, [u3])
    c32 = add(1, 3, [u3])
    for ci in (c31, c32):
        wi = add(0, 4, [ci])
        for _ in range(2):
            xi = add(1, 5, [wi])
            add(0, 6, [xi])
    s = Swatch(6, ctypes, dists, adj)
    assert s.n_vertices == 34
    return s


# ---------------------------------------------------------------------------
# independent oracles
# ---------------------------------------------------------------------------

def brute_force_isomorphic(s1: Swatch, s2: Swatch) -> bool:
    """Root-fixing, ctype- and distance-preserving isomorphism search."""
    n = s1.n_vertices
    if n != s2.n_vertices or s1.n_edges != s2.n_edges:
        return False
    key1 = [(s1.dists[v], s1.ctypes[v]) for v in range(n)]
    key2 = [(s2.dists[v], s2.ctypes[v]) for v in range(n)]
    if sorted(key1) != sorted(key2) or key1[0] != key2[0]:
        return False
    cands = [[u for u in range(n) if key2[u] == key1[v]] for v in range(n)]
    adj1 = [set(a) for a in s1.adj]
    adj2 = [set(a) for a in s2.adj]
    deg1 = [len(a) for a in adj1]
    deg2 = [len(a) for a in adj2]
    mapping = [-1] * n
    used = [False] * n
    mapped_targets: set = set()

    def rec(v):
        if v == n:
            return True
        for u in cands[v]:
            if used[u] or deg2[u] != deg1[v]:
                continue
            # edges to already-mapped vertices must correspond both ways
            ok = all(
                mapping[w] in adj2[u] for w in adj1[v] if mapping[w] >= 0
            )
            if ok:
                m1 = sum(1 for w in adj1[v] if mapping[w] >= 0)
                m2 = sum(1 for w in adj2[u] if w in mapped_targets)
                ok = m1 == m2
            if ok:
                mapping[v] = u
                used[u] = True
                mapped_targets.add(u)
                if rec(v + 1):
                    return True
                mapping[v] = -1
                used[u] = False
                mapped_targets.discard(u)
        return False

    mapping[0] = 0
    used[0] = True
    mapped_targets.add(0)
    return rec(1)


def naive_cloth_counts(g: AdjacencyGraph, rmax: int, root_ctype: int = 0):
    """Independent per-root recount: classify balls by brute-force
    isomorphism instead of canonical encoding.

    Returns per radius a list of (representative Swatch, count).
    """
    from cellcloth.swatch import extract_swatch, restrict

    roots = [int(v) for v in g.vertices_of_ctype(root_ctype)]
    out = []
    for r in range(rmax + 1):
        classes: list = []  # [(rep swatch, count)]
        for root in roots:
            ball = restrict(extract_swatch(g, root, rmax), r)
            for i, (rep, cnt) in enumerate(classes):
                if brute_force_isomorphic(ball, rep):
                    classes[i] = (rep, cnt + 1)
                    break
            else:
                classes.append((ball, 1))
        out.append(classes)
    return out
