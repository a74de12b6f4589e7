import pytest

from cellcloth.graphcore import (
    GRAIN_CONSTRAINT,
    AdjacencyGraph,
    DegreeConstraint,
    GraphError,
    check_constraint,
    disjoint_union,
    load_graph,
    relabel,
    save_graph,
)

from helpers import honeycomb_graph, triangle_complex_graph


def test_triangle_complex_loads(tmp_path):
    g = triangle_complex_graph()
    assert g.n_vertices == 7
    assert g.n_edges == 9
    # every 1-cell touches two 0-cells and one 2-cell
    for v in range(7):
        if g.ctypes[v] == 1:
            assert g.degree(v) == 3
            nb_types = sorted(int(g.ctypes[u]) for u in g.neighbors(v))
            assert nb_types == [0, 0, 2]


def test_round_trip_is_bit_exact(tmp_path):
    g = triangle_complex_graph()
    p1 = tmp_path / "a.graph"
    p2 = tmp_path / "b.graph"
    save_graph(g, p1)
    g2 = load_graph(p1)
    save_graph(g2, p2)
    assert g2 == g
    assert p1.read_bytes() == p2.read_bytes()


def test_empty_graph(tmp_path):
    p = tmp_path / "empty.graph"
    p.write_text("# nothing here\n")
    g = load_graph(p)
    assert g.n_vertices == 0
    assert g.n_edges == 0


def test_dimension_gap_rejected(tmp_path):
    p = tmp_path / "bad.graph"
    p.write_text("v 0 0\nv 1 0\ne 0 1\n")
    with pytest.raises(GraphError, match="dimension gap"):
        load_graph(p)


def test_self_loop_and_duplicate_rejected(tmp_path):
    p = tmp_path / "loop.graph"
    p.write_text("v 0 0\nv 1 1\ne 0 0\n")
    with pytest.raises(GraphError, match="self-loop"):
        load_graph(p)
    p.write_text("v 0 0\nv 1 1\ne 0 1\ne 1 0\n")
    with pytest.raises(GraphError, match="duplicate edge"):
        load_graph(p)


def test_parse_error_carries_line_number(tmp_path):
    p = tmp_path / "bad.graph"
    p.write_text("v 0 0\nv 2 1\n")
    with pytest.raises(GraphError, match=r":2:"):
        load_graph(p)


def test_check_constraint_on_honeycomb():
    g = honeycomb_graph(4)
    assert check_constraint(g, GRAIN_CONSTRAINT) == []


def test_check_constraint_flags_dangling():
    # one boundary vertex with a single incидент junction
    g = AdjacencyGraph([0, 1], [(0, 1)])
    bad = check_constraint(g, GRAIN_CONSTRAINT)
    assert bad == [0, 1]  # junction degree 1 != 3, boundary degree 1 != 2


def test_triangle_violates_grain_constraint():
    g = triangle_complex_graph()
    bad = check_constraint(g, GRAIN_CONSTRAINT)
    # corners have degree 2, not 3; sides have degree 3, not 2
    assert bad == list(range(6))


def test_trivalent_counting_identity():
    g = honeycomb_graph(5)
    n0 = len(g.vertices_of_ctype(0))
    n1 = len(g.vertices_of_ctype(1))
    assert n1 * 2 == n0 * 3


def test_disjoint_union_and_relabel():
    g = triangle_complex_graph()
    u = disjoint_union(g, g)
    assert u.n_vertices == 14
    assert u.n_edges == 18
    perm = list(reversed(range(g.n_vertices)))
    h = relabel(g, perm)
    assert sorted(int(c) for c in h.ctypes) == sorted(int(c) for c in g.ctypes)
    assert h.n_edges == g.n_edges
