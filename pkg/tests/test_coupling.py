from fractions import Fraction

import pytest

from eulerlat.analysis import transition_matrix
from eulerlat.chains import TOWER, RngStream
from eulerlat.coupling import (
    CoalescenceStats,
    CoupledPair,
    coalescence_experiment,
    contraction_audit,
    coupled_marginals,
    coupled_step,
    disagreement_face,
    escape_experiment,
    fit_power,
)
from eulerlat.errors import NotAdjacent
from eulerlat.lattice import build_g_ring, build_h_family, build_solid, triangle_region
from eulerlat.orientation import Orientation, enumerate_states, extremal_orientation, face_state, NOT_DIRECTED

from graphs import k3


def _adjacent_pairs(g):
    for bits in enumerate_states(g):
        x = Orientation(g, bits)
        for fi in range(g.n_faces):
            if face_state(g, bits, fi) != NOT_DIRECTED:
                yield x, x.reverse_face(fi)


def test_k3_audit():
    (rep,) = [r for r in contraction_audit(k3()) if r.pair == (0, 1)]
    assert rep.total == -1


def test_ring2_audit():
    g = build_g_ring(2)
    third = Fraction(1, 3 * g.n_faces)
    reps = contraction_audit(g)
    assert reps and all(r.total <= 0 for r in reps)
    for r in reps:
        for c, v in r.per_neighbor.items():
            if r.directed_in[c]:
                assert v == third
            else:
                assert v <= third


@pytest.mark.parametrize("g", [build_solid(triangle_region(2)), build_g_ring(2)])
def test_marginals_are_the_kernel(g):
    m = transition_matrix(g, TOWER)
    for x, y in _adjacent_pairs(g):
        mx, my = coupled_marginals(g, x, y)
        for o, d in ((x, mx), (y, my)):
            row = m.rows[m.index[o.bits]]
            assert {m.states[j]: p for j, p in row.items() if p} == {b: p for b, p in d.items() if p}


def test_not_adjacent():
    g = build_g_ring(2)
    lo, hi = extremal_orientation(g, "min"), extremal_orientation(g, "max")
    with pytest.raises(NotAdjacent):
        disagreement_face(lo, hi)
    with pytest.raises(NotAdjacent):
        disagreement_face(lo, lo)


def test_coupled_step_outcomes():
    g = build_g_ring(2)
    x, y = next(_adjacent_pairs(g))
    p = CoupledPair.of(x, y)
    assert p.delta == 1
    rng = RngStream(2)
    deltas = set()
    for _ in range(300):
        q = coupled_step(p, rng)
        deltas.add(q.delta)
        # once together, always together
        assert coupled_step(CoupledPair.of(q.x, q.x), rng).delta == 0
    assert 0 in deltas and 1 in deltas
    assert deltas <= {0, 1, 2, 3, 4}


def test_k3_coalesces_fast():
    st = coalescence_experiment(k3(), 200, 100, RngStream(1))
    assert st.censored == 0
    assert st.median <= 4


def test_no_replicas():
    st = coalescence_experiment(k3(), 0, 10, RngStream(1))
    assert st.times == [] and st.median is None
    assert escape_experiment(build_h_family(1), 0, 10, RngStream(1)).times == []


def test_censoring_and_rows():
    st = CoalescenceStats.from_times([3, None, 5], 10)
    assert st.censored == 1
    assert st.median == 5
    assert list(st.rows())[1] == {"replica": 1, "coalesce_step": 10, "censored": 1}


def test_coalescence_is_seeded():
    g = build_g_ring(3)
    a = coalescence_experiment(g, 20, 5000, RngStream(4))
    b = coalescence_experiment(g, 20, 5000, RngStream(4))
    assert a.times == b.times


def test_fit_power():
    assert abs(fit_power([2, 4, 8], [4, 16, 64]) - 2) < 1e-9
