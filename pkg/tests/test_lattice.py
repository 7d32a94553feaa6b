import json

import pytest

from eulerlat.errors import ConstructionInvariantViolated, Disconnected, NotEulerian, NotSimplyConnected, ValidationError
from eulerlat.lattice import (
    Tri,
    build_g_ring,
    build_h_family,
    build_solid,
    build_with_holes,
    check_h_labeling,
    g_ring_faces,
    graph_from_dict,
    graph_from_spec,
    remove_face_edges,
    triangle_region,
)

from graphs import holey_graphs, solid_graphs


def test_k3():
    g = build_solid([Tri(0, 0, True)])
    assert (len(g.vertices), g.n_edges, g.n_faces) == (3, 3, 1)


def test_rhombus_is_not_eulerian():
    with pytest.raises(NotEulerian):
        build_solid([Tri(0, 0, True), Tri(0, 0, False)])


def test_side_two_triangle():
    g = build_solid(triangle_region(2))
    assert (len(g.vertices), g.n_edges, g.n_faces) == (6, 9, 4)
    assert set(g.degree().values()) == {2, 4}


def test_disconnected_and_holes():
    with pytest.raises(Disconnected):
        build_solid([Tri(0, 0, True), Tri(5, 5, True)])
    ring = set(triangle_region(4)) - {Tri(1, 1, True)}
    with pytest.raises(NotSimplyConnected):
        build_solid(ring)
    g = build_with_holes(ring)
    assert ("hole", 0) in g.face_index


def test_with_holes_on_solid_region_matches_build_solid():
    faces = triangle_region(3)
    assert build_with_holes(faces) == build_solid(faces)


@pytest.mark.parametrize("k", range(1, 9))
def test_g_ring_face_count(k):
    g = build_g_ring(k)
    assert g.n_faces == 1 + 3 * k * (k - 1) // 2
    assert all(d % 2 == 0 for d in g.degree().values())
    centre = g.face_index[Tri(0, 0, True)]
    assert g.dual_distances()[centre] == k


def test_g_ring_grows_by_3k():
    for k in range(1, 6):
        assert len(g_ring_faces(k + 1)) - len(g_ring_faces(k)) == 3 * k


@pytest.mark.parametrize("n", [1, 2, 3])
def test_h_family_structure(n):
    g = build_h_family(n)
    assert len(g.vertices) == 6 * (2 * n + 1) + 6 * (2 * n + 2) + 6 * n
    assert g.n_faces == 1 + 3 * 6 * n
    assert all(d % 2 == 0 for d in g.degree().values())
    check_h_labeling(g, n)


def test_h_family_labeling_detects_wrong_n():
    with pytest.raises((ConstructionInvariantViolated, KeyError)):
        check_h_labeling(build_h_family(1), 2)


def test_euler_formula_and_degree_sum():
    graphs = {**solid_graphs(), **holey_graphs(), "h1": build_h_family(1)}
    for name, g in graphs.items():
        deg = g.degree()
        assert sum(deg.values()) == 2 * g.n_edges, name
        assert len(g.vertices) - g.n_edges + g.n_faces + 1 == 2, name


def test_sides_are_consistent():
    g = build_g_ring(3)
    for e, (left, right) in enumerate(g.sides):
        for fi in (left, right):
            if fi >= 0:
                assert e in g.faces[fi].edges


def test_serialization_round_trip():
    for g in [build_g_ring(3), build_h_family(1), *holey_graphs().values()]:
        back = graph_from_dict(json.loads(json.dumps(g.to_dict())))
        assert back == g
        assert back.digest() == g.digest()


def test_graph_from_spec():
    assert graph_from_spec({"kind": "g_ring", "k": 3}) == build_g_ring(3)
    assert len(graph_from_spec({"kind": "h_family", "n": 2}).vertices) == 78
    with pytest.raises(ValidationError):
        graph_from_spec({"kind": "solid", "faces": [[0, 0, "sideways"]]})
    with pytest.raises(ValidationError):
        graph_from_spec({"kind": "nonsense"})


def test_peeling_an_ear_keeps_degrees_even():
    g = build_solid(triangle_region(3))
    corner = g.face_index[Tri(0, 0, True)]
    h = remove_face_edges(g, corner)
    assert all(d % 2 == 0 for d in h.degree().values())
    assert h.n_edges == g.n_edges - 3
