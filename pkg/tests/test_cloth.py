from fractions import Fraction

import pytest

from cellcloth.cloth import (
    build_tree,
    compute_cloth,
    merge_cloths,
    parent_type,
    read_cloth,
    write_cloth,
)
from cellcloth.graphcore import GRAIN_CONSTRAINT
from cellcloth.swatch import canonicalize, enumerate_swatch_types, extract_swatch

from helpers import (
    brute_force_isomorphic,
    honeycomb_graph,
    naive_cloth_counts,
    random_grain_graph,
)


def test_honeycomb_cloth_is_a_point_mass_per_level():
    g = honeycomb_graph(8)
    c = compute_cloth(g, rmax=5)
    assert c.total_roots == len(g.vertices_of_ctype(0))
    for r in range(6):
        assert len(c.levels[r]) == 1
        (count,) = c.levels[r].values()
        assert count == c.total_roots
        (freq,) = c.frequencies(r).values()
        assert freq == 1


def test_single_root_point_mass():
    # a lone junction with three boundaries: one ctype-0 root, r = 0
    from cellcloth.graphcore import AdjacencyGraph

    g = AdjacencyGraph([0, 1, 1, 1], [(0, 1), (0, 2), (0, 3)])
    c = compute_cloth(g, rmax=0)
    assert c.total_roots == 1
    ((t, n),) = c.levels[0].items()
    assert n == 1 and t.vertex_count == 1


def test_no_roots_raises():
    from cellcloth.graphcore import AdjacencyGraph

    g = AdjacencyGraph([1, 2], [(0, 1)])
    with pytest.raises(ValueError, match="no vertices of ctype 0"):
        compute_cloth(g, rmax=1)


def test_cloth_matches_naive_recount_oracle():
    g = random_grain_graph(60, seed=23)
    rmax = 3
    c = compute_cloth(g, rmax=rmax)
    naive = naive_cloth_counts(g, rmax)
    from cellcloth.swatch import decode

    for r in range(rmax + 1):
        counts = sorted(c.levels[r].values())
        naive_counts = sorted(cnt for _, cnt in naive[r])
        assert counts == naive_counts
        # match each canonical type to exactly one naive class
        for t, cnt in c.levels[r].items():
            ball = decode(t)
            hits = [
                (rep, k) for rep, k in naive[r] if brute_force_isomorphic(ball, rep)
            ]
            assert len(hits) == 1
            assert hits[0][1] == cnt


def test_frequencies_sum_to_one_and_check_passes():
    g = random_grain_graph(80, seed=3)
    c = compute_cloth(g, rmax=4)
    c.check()
    for r in range(5):
        assert sum(c.frequencies(r).values()) == Fraction(1)


def test_cloth_invariant_under_vertex_relabeling():
    from cellcloth.graphcore import relabel

    g = random_grain_graph(50, seed=9)
    perm = list(reversed(range(g.n_vertices)))
    h = relabel(g, perm)
    c1 = compute_cloth(g, rmax=3)
    c2 = compute_cloth(h, rmax=3)
    assert c1.levels == c2.levels


def test_merge_is_arithmetic_mean_of_frequencies():
    g1 = random_grain_graph(40, seed=1)
    g2 = random_grain_graph(40, seed=2)
    c1 = compute_cloth(g1, rmax=2)
    c2 = compute_cloth(g2, rmax=2)
    merged = merge_cloths(c1, c2)
    assert merged.total_roots == c1.total_roots + c2.total_roots
    for r in range(3):
        for t in set(c1.levels[r]) | set(c2.levels[r]):
            want = (c1.frequency(t) + c2.frequency(t)) / 2
            assert merged.frequency(t) == want
    # and it matches the cloth of the disjoint union
    from cellcloth.graphcore import disjoint_union

    cu = compute_cloth(disjoint_union(g1, g2), rmax=2)
    assert cu.levels == merged.levels


def test_tree_descendant_sums_and_parents():
    g = random_grain_graph(120, seed=31)
    c = compute_cloth(g, rmax=4)
    tree = build_tree(c)
    for r in range(1, 5):
        for t in c.levels[r]:
            p = tree.parent[t]
            assert p.radius == r - 1
            assert p.vertex_count <= t.vertex_count
    # honeycomb tree is a path
    ch = compute_cloth(honeycomb_graph(6), rmax=4)
    th = build_tree(ch)
    for r in range(5):
        assert len(th.nodes_at(r)) == 1


def test_tree_orphan_detection():
    g = random_grain_graph(40, seed=5)
    c = compute_cloth(g, rmax=2)
    # corrupt: drop level-1 entirely and replace with a bogus table
    t2 = next(iter(c.levels[2]))
    c.levels[1] = {t2: c.total_roots}  # wrong radius on purpose
    with pytest.raises(ValueError):
        build_tree(c)


def test_observed_types_subset_of_enumeration():
    g = random_grain_graph(100, seed=41)
    c = compute_cloth(g, rmax=3)
    enumerated = {t for lv in enumerate_swatch_types(3, GRAIN_CONSTRAINT) for t in lv}
    for r in range(4):
        for t in c.levels[r]:
            assert t in enumerated


def test_level_r_determines_lower_levels():
    # summing level-r counts through parents reproduces level r-1 exactly
    g = random_grain_graph(90, seed=43)
    c = compute_cloth(g, rmax=3)
    for r in range(1, 4):
        sums: dict = {}
        for t, cnt in c.levels[r].items():
            p = parent_type(t)
            sums[p] = sums.get(p, 0) + cnt
        assert sums == c.levels[r - 1]


def test_cloth_file_round_trip(tmp_path):
    g = random_grain_graph(70, seed=51)
    c = compute_cloth(g, rmax=3)
    p1 = tmp_path / "a.cloth"
    p2 = tmp_path / "b.cloth"
    write_cloth(c, p1)
    c2 = read_cloth(p1)
    write_cloth(c2, p2)
    assert c2.levels == c.levels
    assert c2.total_roots == c.total_roots
    assert p1.read_bytes() == p2.read_bytes()


def test_parallel_matches_serial():
    g = random_grain_graph(150, seed=61)
    c1 = compute_cloth(g, rmax=3, workers=1)
    c2 = compute_cloth(g, rmax=3, workers=2)
    assert c1.levels == c2.levels
    assert c1.total_roots == c2.total_roots
