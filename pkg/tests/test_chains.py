import warnings
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from eulerlat.analysis import transition_matrix
from eulerlat.chains import (
    FACE,
    TOWER,
    BatchChain,
    RngStream,
    find_tower,
    mixing_budget,
    move_at,
    run_chain,
    sample_uniform,
    step_face_reversal,
    tower_from,
    tower_is_collinear,
)
from eulerlat.errors import NonSolidWarning, UnknownFace
from eulerlat.lattice import build_g_ring, build_h_family, build_solid, triangle_region
from eulerlat.orientation import enumerate_states, extremal_orientation, max_potential_profile

from graphs import k3


def test_zero_steps_is_identity():
    e = extremal_orientation(build_g_ring(2), "min")
    assert run_chain(e, TOWER, 0, RngStream(1)) == e


def test_same_seed_same_output():
    g = build_g_ring(3)
    e = extremal_orientation(g, "min")
    a = run_chain(e, TOWER, 500, RngStream(42))
    b = run_chain(e, TOWER, 500, RngStream(42))
    assert a == b
    assert a.is_eulerian()


def test_stats_are_recorded():
    stats = {}
    run_chain(extremal_orientation(build_g_ring(2), "min"), TOWER, 200, RngStream(3), stats)
    assert stats["steps"] == 200
    assert sum(v for k, v in stats.items() if k != "steps") == 200


def test_k3_trajectory_is_balanced():
    e = extremal_orientation(k3(), "min")
    rng = RngStream(5)
    seen = Counter()
    for _ in range(10_000):
        e, _ = step_face_reversal(e, rng)
        seen[e.bits] += 1
    for n in seen.values():
        assert abs(n / 10_000 - 0.5) < 0.02


def test_k3_sampler_is_uniform():
    g = k3()
    rng = RngStream(9)
    seen = Counter(sample_uniform(g, 0.01, FACE, rng).bits for _ in range(1000))
    assert len(seen) == 2
    for n in seen.values():
        assert abs(n / 1000 - 0.5) < 0.05


def test_budget_formula():
    assert mixing_budget(4, np.exp(-1), TOWER) == 256
    assert mixing_budget(4, np.exp(-1), FACE) == 4096
    assert mixing_budget(4, np.exp(-1), TOWER, c=0.5) == 128
    with pytest.raises(ValueError):
        mixing_budget(4, 1.5, TOWER)


def test_holey_input_warns():
    with pytest.warns(NonSolidWarning):
        sample_uniform(build_h_family(1), 0.5, TOWER, RngStream(0), steps=10)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        sample_uniform(build_g_ring(2), 0.5, TOWER, RngStream(0), steps=10)


def test_unknown_face():
    with pytest.raises(UnknownFace):
        find_tower(extremal_orientation(k3(), "min"), 7)


@pytest.mark.parametrize("k", [2, 3])
def test_towers_are_linear_and_bounded(k):
    g = build_g_ring(k)
    bound = 2 * max(max_potential_profile(g).values)
    for bits in enumerate_states(g):
        for fi in range(g.n_faces):
            t = tower_from(g, bits, fi)
            if t is None:
                continue
            assert tower_is_collinear(g, t)
            assert t.length <= bound


def test_tower_moves_extend_face_moves():
    g = build_solid(triangle_region(3))
    m = transition_matrix(g, FACE)
    mt = transition_matrix(g, TOWER)
    assert m.states == mt.states
    assert m.support() <= mt.support()
    assert m.support() != mt.support()


def test_tower_acceptance_values():
    g = build_g_ring(3)
    for bits in enumerate_states(g)[:200]:
        for fi in range(g.n_faces):
            acc, _, out = move_at(g, bits, fi, TOWER)
            if out.kind == "tower":
                assert acc == Fraction(1, 3 * out.tower.length)
            elif out.kind == "face":
                assert acc == 1
            else:
                assert acc == 0


def test_batch_chain_matches_kernel():
    # three batched steps from E_min against the exact three-step distribution
    g = build_solid(triangle_region(2))
    m = transition_matrix(g, TOWER)
    P = m.dense()
    start = m.index[extremal_orientation(g, "min").bits]
    exact = np.linalg.matrix_power(P, 3)[start]
    b = BatchChain(g, TOWER, 200_000, np.random.default_rng(4))
    b.step(3)
    counts = Counter(b.states())
    emp = np.array([counts.get(s, 0) for s in m.states]) / 200_000
    assert 0.5 * np.abs(emp - exact).sum() < 0.01
    assert all(s in m.index for s in counts)
