import random

import pytest
from hypothesis import given, settings, strategies as st

from cellcloth.graphcore import GRAIN_CONSTRAINT
from cellcloth.swatch import (
    Swatch,
    canonicalize,
    decode,
    enumerate_swatch_types,
    extract_swatch,
    is_free,
    restrict,
)

from helpers import (
    brute_force_isomorphic,
    cycle_swatch_r6,
    free_swatch_r6,
    honeycomb_graph,
    random_grain_graph,
)


def relabeled(s: Swatch, rng) -> Swatch:
    rest = list(range(1, s.n_vertices))
    rng.shuffle(rest)
    perm = [0] + rest
    inv = {v: i for i, v in enumerate(perm)}
    return Swatch(
        s.radius,
        [s.ctypes[v] for v in perm],
        [s.dists[v] for v in perm],
        [[inv[u] for u in s.adj[v]] for v in perm],
    )


def test_zero_radius_ball():
    g = honeycomb_graph(4)
    s = extract_swatch(g, 0, 0)
    assert s.n_vertices == 1
    assert s.dists == [0]


def test_radius_one_is_forced_by_trivalence():
    g = honeycomb_graph(4)
    s = extract_swatch(g, 0, 1)
    assert s.n_vertices == 4
    assert sorted(s.ctypes) == [0, 1, 1, 1]


def test_honeycomb_r5_is_free_31_vertices():
    g = honeycomb_graph(8)
    s = extract_swatch(g, 0, 5)
    assert s.n_vertices == 31
    assert is_free(s)
    s6 = extract_swatch(g, 0, 6)
    assert not is_free(s6)  # first cycle closes at r = 6


def test_unknown_root_raises():
    g = honeycomb_graph(3)
    with pytest.raises(KeyError):
        extract_swatch(g, 10**6, 2)


def test_restrict_identity_and_root():
    g = honeycomb_graph(4)
    s = extract_swatch(g, 0, 4)
    assert restrict(s, 4) is s
    r0 = restrict(s, 0)
    assert r0.n_vertices == 1
    with pytest.raises(ValueError):
        restrict(s, 5)


def test_canonical_invariance_under_relabeling():
    rng = random.Random(3)
    g = random_grain_graph(300, seed=5)
    for root in range(0, 30, 3):
        s = extract_swatch(g, root, 5)
        ref = canonicalize(s)
        for _ in range(10):
            assert canonicalize(relabeled(s, rng)) == ref


def test_fig2_swatches_are_distinct_types():
    a = free_swatch_r6()
    b = cycle_swatch_r6()
    assert is_free(a)
    assert not is_free(b)
    assert canonicalize(a) != canonicalize(b)
    # largest free restriction of the cyclic swatch is radius 3
    last_free = max(r for r in range(7) if is_free(restrict(b, r)))
    assert last_free == 3


def test_path_ball_vs_cycle_ball_distinct():
    # radius-2 path ball: root-b-j-b'-j' chain vs a 4-cycle ball with the
    # same vertex counts per distance
    path = Swatch(2, [0, 1, 0], [0, 1, 2], [[1], [0, 2], [1]])
    cyc = Swatch(2, [0, 1, 1, 0], [0, 1, 1, 2], [[1, 2], [0, 3], [0, 3], [1, 2]])
    pad = Swatch(2, [0, 1, 1, 0], [0, 1, 1, 2], [[1, 2], [0, 3], [0], [1]])
    assert canonicalize(cyc) != canonicalize(pad)
    assert not brute_force_isomorphic(cyc, pad)
    assert brute_force_isomorphic(cyc, cyc)
    assert canonicalize(path) != canonicalize(cyc)


def test_decode_round_trip():
    g = random_grain_graph(200, seed=11)
    for root in range(0, 20, 2):
        s = extract_swatch(g, root, 4)
        t = canonicalize(s)
        back = decode(t)
        assert canonicalize(back) == t
        assert back.n_vertices == t.vertex_count
        assert brute_force_isomorphic(restrict(s, 3), restrict(back, 3))


def test_monotone_restriction_property():
    # the type of the subswatch depends only on the type of the swatch
    g = random_grain_graph(200, seed=13)
    for root in range(0, 12):
        s = extract_swatch(g, root, 4)
        t = canonicalize(s)
        for r in range(5):
            via_decode = canonicalize(restrict(decode(t), r))
            direct = canonicalize(restrict(s, r))
            assert via_decode == direct


def test_canonicalization_agrees_with_brute_force():
    rng = random.Random(1)
    g = random_grain_graph(400, seed=17)
    swatches = [extract_swatch(g, r, 2) for r in range(40)]
    for i in range(len(swatches)):
        for j in range(i + 1, min(i + 8, len(swatches))):
            same_canon = canonicalize(swatches[i]) == canonicalize(swatches[j])
            same_brute = brute_force_isomorphic(swatches[i], swatches[j])
            assert same_canon == same_brute


def test_enumerate_small_levels():
    levels = enumerate_swatch_types(3, GRAIN_CONSTRAINT)
    assert len(levels[0]) == 1
    assert len(levels[1]) == 1  # forced by trivalence and simplicity
    assert len(levels[2]) == 3
    assert len(levels[3]) == 8
    for r, lv in enumerate(levels):
        for t in lv:
            assert t.radius == r


def test_enumerate_contains_observed_types():
    g = honeycomb_graph(6)
    enumerated = {t for lv in enumerate_swatch_types(3, GRAIN_CONSTRAINT) for t in lv}
    for root in range(0, 12):
        if g.ctypes[root] != 0:
            continue
        s = extract_swatch(g, root, 3)
        assert canonicalize(s) in enumerated


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=10**6), st.integers(min_value=0, max_value=4))
def test_property_relabel_invariance(seed, radius):
    rng = random.Random(seed)
    g = random_grain_graph(120, seed=seed % 97)
    s = extract_swatch(g, seed % 120, radius)
    assert canonicalize(relabeled(s, rng)) == canonicalize(s)


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_property_vertex_count_monotone_in_radius(seed):
    g = random_grain_graph(150, seed=seed % 89)
    s = extract_swatch(g, seed % 150, 5)
    counts = [restrict(s, r).n_vertices for r in range(6)]
    assert counts == sorted(counts)
