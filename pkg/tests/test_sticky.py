import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pressureless.measure import atom, block, build_initial
from pressureless.potential import damped, undamped
from pressureless.sticky import discretize, evolve, oracle_cdf, velocity

from test_measure import initial_data


def pair_data():
    return build_initial([atom(-1, 1, +1), atom(+1, 1, -1)])


# -- discretize ---------------------------------------------------------------

def test_atoms_pass_through():
    state = discretize(pair_data(), 4, damped(2.0))
    assert len(state) == 2
    assert list(state.pos) == [-1, 1]
    assert list(state.v0) == [1, -1]


def test_block_midpoint_rule():
    data = build_initial([block(0, 2, 1, 0)])
    state = discretize(data, 4, undamped())
    assert np.allclose(state.pos, [0.25, 0.75, 1.25, 1.75])
    assert np.allclose(state.mass, 0.5)


def test_discretize_conserves_mass_and_momentum():
    data = build_initial([
        block(-2, -0.5, 0.8, 1.5), atom(0, 1.1, -0.3), block(1, 2, 1.2, 0.7),
    ])
    state = discretize(data, 7, damped(1.0))
    assert state.total_mass() == pytest.approx(data.total_mass(), abs=1e-12)
    assert state.total_momentum_v0() == pytest.approx(
        data.total_momentum(), abs=1e-12)


def test_origin_split_of_straddling_block():
    data = build_initial([block(-1, 1, 1, 0)])
    state = discretize(data, 2, undamped())
    assert np.allclose(state.mass_pos, [0, 1])
    assert np.allclose(state.mass_nonpos, [1, 0])
    odd = discretize(data, 1, undamped())
    assert odd.mass_pos[0] == pytest.approx(1.0)
    assert odd.mass_nonpos[0] == pytest.approx(1.0)


def test_discretize_rejects_zero_chunks():
    with pytest.raises(ValueError):
        discretize(pair_data(), 0, undamped())


# -- evolve ---------------------------------------------------------------------

def test_symmetric_pair_collision_time():
    # meeting needs spread 1; tau=2 reaches it at t = 2 ln 2
    t_c = 2 * math.log(2)
    state = discretize(pair_data(), 1, damped(2.0))
    before = evolve(state, t_c - 1e-9)
    assert len(before) == 2
    after = evolve(state, t_c + 1e-9)
    assert len(after) == 1
    assert after.pos[0] == pytest.approx(0.0, abs=1e-9)
    assert after.mass[0] == 2.0
    assert after.v0[0] == 0.0


def test_no_collision_when_spread_saturates_early():
    state = discretize(pair_data(), 1, damped(1.0))
    out = evolve(state, 20.0)
    assert len(out) == 2
    assert out.pos[0] == pytest.approx(-math.exp(-20.0), abs=1e-12)
    assert out.pos[1] == pytest.approx(+math.exp(-20.0), abs=1e-12)
    # two particles forever, even past the point where the spread rounds
    # to its asymptote
    assert len(evolve(state, 200.0)) == 2


def test_single_particle_free_flight():
    data = build_initial([atom(0.5, 1, 2)])
    out = evolve(discretize(data, 1, damped(3.0)), 1.25)
    assert out.pos[0] == pytest.approx(0.5 + 2 * 3 * (1 - math.exp(-1.25 / 3)))


def test_triple_simultaneous_collision():
    data = build_initial([atom(-1, 1, 1), atom(0, 2, 0), atom(1, 1, -1)])
    out = evolve(discretize(data, 1, undamped()), 1.0)
    assert len(out) == 1
    assert out.pos[0] == pytest.approx(0.0, abs=1e-12)
    assert out.mass[0] == 4.0
    assert out.v0[0] == pytest.approx(0.0)


def test_cascaded_merges_conserve():
    data = build_initial([
        atom(-2, 0.5, 2), atom(-1, 1, 0.5), atom(0.2, 0.7, -0.1),
        atom(1.5, 1.3, -1.5),
    ])
    state = discretize(data, 1, undamped())
    out = evolve(state, 10.0)
    assert len(out) == 1
    assert out.total_mass() == pytest.approx(state.total_mass(), abs=1e-12)
    assert out.total_momentum_v0() == pytest.approx(
        state.total_momentum_v0(), abs=1e-12)


def test_evolve_rejects_backwards():
    state = evolve(discretize(pair_data(), 1, damped(2.0)), 1.0)
    with pytest.raises(ValueError):
        evolve(state, 0.5)


def test_velocity_decays():
    state = evolve(discretize(pair_data(), 1, damped(2.0)), 1.0)
    assert np.allclose(velocity(state), state.v0 * math.exp(-0.5))


# -- oracle cdf -------------------------------------------------------------------

def test_cdf_of_merged_pair_splits_at_origin():
    state = evolve(discretize(pair_data(), 1, damped(2.0)), 2.0)
    assert len(state) == 1
    assert oracle_cdf(state, 0.5) == pytest.approx(1.0)
    assert oracle_cdf(state, 0.0, "left") == pytest.approx(-1.0)
    assert oracle_cdf(state, 0.0, "right") == pytest.approx(1.0)


def test_cdf_left_of_all_negative_particles():
    data = build_initial([atom(-2, 1, 0), atom(-1, 0.5, 0)])
    state = discretize(data, 1, undamped())
    assert oracle_cdf(state, -3.0) == pytest.approx(-1.5)


def test_cdf_right_of_positive_particles():
    data = build_initial([atom(0.5, 1, 0), atom(2, 0.25, 0)])
    state = discretize(data, 1, undamped())
    assert oracle_cdf(state, 3.0) == pytest.approx(1.25)


# -- properties --------------------------------------------------------------------

@given(initial_data(), st.floats(0.1, 4.0))
@settings(max_examples=60, deadline=None)
def test_conservation_through_events(data, t_end):
    state = discretize(data, 3, damped(1.7))
    out = evolve(state, t_end)
    assert out.total_mass() == pytest.approx(state.total_mass(), abs=1e-10)
    assert out.total_momentum_v0() == pytest.approx(
        state.total_momentum_v0(), abs=1e-10)
    assert np.all(np.diff(out.pos) > 0)


@given(initial_data())
@settings(max_examples=40, deadline=None)
def test_huge_tau_matches_undamped(data):
    if data.U > 1.0:
        return
    a = evolve(discretize(data, 2, damped(1e6)), 1.0)
    b = evolve(discretize(data, 2, undamped()), 1.0)
    assert len(a) == len(b)
    assert np.allclose(a.pos, b.pos, atol=1e-6, rtol=0)
