import math

import numpy as np
import pytest

from pressureless.measure import atom, block, build_initial, cdf
from pressureless.potential import damped, undamped
from pressureless.solution import (
    ExtractionError,
    extract_measure,
    mass_at,
    mass_sided,
    momentum_at,
    sample_at,
    sample_grid,
    velocity_at,
)
from pressureless.sticky import discretize, evolve, oracle_cdf


def pair_data():
    return build_initial([atom(-1, 1, +1), atom(+1, 1, -1)])


def hull_grid(data, t, s, n=801):
    lo, hi = data.support_bounds()
    pad = data.U * s.spread(t) + 0.5
    return np.linspace(lo - pad, hi + pad, n)


T_C = 2 * math.log(2)


# -- mass ----------------------------------------------------------------------

def test_merged_pair_mass_and_sides():
    s = damped(2.0)
    t = 1.5 * T_C
    data = pair_data()
    assert mass_at(data, 0.5, t, s) == pytest.approx(1.0, abs=1e-12)
    assert mass_sided(data, 0.0, t, s, "left") == pytest.approx(-1.0)
    assert mass_sided(data, 0.0, t, s, "right") == pytest.approx(1.0)


def test_mass_left_of_everything_counts_nonpositive_origins():
    data = build_initial([atom(-2, 0.7, -0.5), atom(1, 1.2, 0.8)])
    s = damped(1.0)
    for t in (0.3, 1.0, 3.0):
        assert mass_at(data, -8.0, t, s) == pytest.approx(-0.7, abs=1e-12)


def test_static_block_mass():
    data = build_initial([block(0, 1, 1, 0)])
    for t in (0.2, 1.0, 4.0):
        assert mass_at(data, 0.5, t, undamped()) == pytest.approx(0.5)


def test_mass_requires_positive_time():
    with pytest.raises(ValueError):
        mass_at(pair_data(), 0.0, 0.0, undamped())


def test_mass_nondecreasing_in_x():
    data = build_initial([
        block(-2, -1, 0.8, 1.2), atom(-0.2, 1.0, 2.0), atom(0.7, 0.5, -1.5),
        block(1.2, 2.0, 1.1, -0.4),
    ])
    s = damped(1.5)
    for t in (0.4, 1.1, 2.5):
        ms = [mass_at(data, float(x), t, s) for x in hull_grid(data, t, s, 301)]
        assert all(b - a >= -1e-12 for a, b in zip(ms, ms[1:]))


# -- momentum ---------------------------------------------------------------------

def test_momentum_of_atom_at_origin_keeps_gauge():
    # the 0+0 gauge excludes an atom exactly at 0: right of the trajectory
    # the cumulative momentum is 0 and the jump across it carries
    # decay * mass * v = 0.5
    data = build_initial([atom(0, 1, 1)])
    s, t = damped(1.0), math.log(2)
    x_p = 1 - math.exp(-t)
    assert momentum_at(data, x_p + 0.2, t, s) == pytest.approx(0.0, abs=1e-14)
    jump = (momentum_at(data, x_p + 0.01, t, s)
            - momentum_at(data, x_p - 0.01, t, s))
    assert jump == pytest.approx(0.5, abs=1e-12)


def test_zero_velocities_zero_momentum():
    data = build_initial([block(-1, 0.5, 1, 0), atom(1, 2, 0)])
    for x in (-2.0, 0.0, 0.4, 3.0):
        assert momentum_at(data, x, 1.0, damped(2.0)) == 0.0


def test_momentum_beyond_support_is_decayed_total():
    data = build_initial([atom(0.5, 1, 1.5), block(1, 2, 0.5, -0.25)])
    s = damped(2.0)
    for t in (0.5, 1.0, 2.0):
        want = data.total_momentum() * s.decay(t)
        assert momentum_at(data, 9.0, t, s) == pytest.approx(want, abs=1e-12)


def test_momentum_decay_invariant_is_gauge_free():
    data = build_initial([
        atom(-1.5, 0.8, 1.0), block(-0.5, 0.5, 1.0, -0.3), atom(2, 1.2, -2),
    ])
    s = damped(0.7)
    for t in (0.5, 1.0, 2.0):
        drop = (momentum_at(data, 9.0, t, s) - momentum_at(data, -9.0, t, s))
        assert drop == pytest.approx(data.total_momentum() * s.decay(t),
                                     abs=1e-10)


# -- velocity ----------------------------------------------------------------------

def test_single_atom_velocity_on_trajectory():
    data = build_initial([atom(0, 1, 1)])
    t = math.log(2)
    u, _, _, regime = velocity_at(data, 0.5, t, damped(1.0))
    assert u == pytest.approx(0.5)
    assert regime == "regular"


def test_merged_pair_is_resting_cluster():
    u, u_l, u_r, regime = velocity_at(pair_data(), 0.0, 1.5 * T_C, damped(2.0))
    assert regime == "cluster"
    assert u == 0.0
    assert u_r <= u <= u_l


def test_constant_velocity_translates():
    c = 0.8
    data = build_initial([block(-1, 0, 0.5, c), atom(0.5, 1, c)])
    s = damped(1.3)
    for t in (0.4, 1.7):
        shift = c * s.spread(t)
        for x0 in (-0.7, -0.2, 0.5):
            u, _, _, _ = velocity_at(data, x0 + shift, t, s)
            assert u == pytest.approx(c * s.decay(t), abs=1e-12)


def test_vacuum_clamp_between_receding_atoms():
    data = build_initial([atom(-1, 1, -1), atom(1, 1, 1)])
    s = damped(2.0)
    t = 1.0
    a, dec = s.spread(t), s.decay(t)
    u, _, _, regime = velocity_at(data, 0.0, t, s)
    assert regime == "vacuum"
    assert abs(u) == pytest.approx(dec)
    # ramp next to the left atom stays regular and matches its speed there
    u_at, _, _, _ = velocity_at(data, -1 - a, t, s)
    assert u_at == pytest.approx(-dec, abs=1e-9)


def test_approaching_pair_velocity_profile():
    data = pair_data()
    s = damped(2.0)
    t = 1.0  # pre-collision
    a, dec = s.spread(t), s.decay(t)
    u_mid, _, _, regime_mid = velocity_at(data, 0.0, t, s)
    assert regime_mid == "vacuum" and u_mid == pytest.approx(dec)
    u_r, u_rl, u_rr, regime_r = velocity_at(data, 1 - a, t, s)
    assert regime_r == "cluster"
    assert u_r == pytest.approx(-dec)
    assert u_rr <= u_r <= u_rl


def test_speed_bound_and_one_sided_order():
    data = build_initial([
        block(-2, -1, 0.8, 1.2), atom(-0.2, 1.0, 2.0), atom(0.7, 0.5, -1.5),
        block(1.2, 2.0, 1.1, -0.4),
    ])
    s = damped(1.5)
    for t in (0.35, 0.9, 2.2):
        cap = data.U * s.decay(t)
        for x in hull_grid(data, t, s, 257):
            u, u_l, u_r, _ = velocity_at(data, float(x), t, s)
            assert abs(u) <= cap + 1e-12
            assert u_r - 1e-9 <= u <= u_l + 1e-9


def test_radon_nikodym_at_solution_atoms():
    data = build_initial([
        atom(-1.3, 0.6, 1.8), atom(-0.1, 1.4, 0.2), atom(1.1, 0.9, -1.6),
    ])
    s = damped(1.1)
    for t in (0.6, 1.4, 3.0):
        state = evolve(discretize(data, 1, s), t)
        for pos in state.pos:
            x = float(pos)
            dm = (mass_sided(data, x, t, s, "right")
                  - mass_sided(data, x, t, s, "left"))
            if dm < 1e-9:
                continue
            h = 1e-7 * (1 + abs(x))
            dq = (momentum_at(data, x + h, t, s)
                  - momentum_at(data, x - h, t, s))
            u, _, _, _ = velocity_at(data, x, t, s)
            assert dq / dm == pytest.approx(u, abs=1e-9)


def test_oleinik_quotients_on_samples():
    data = pair_data()
    for s, t in ((damped(2.0), 2.0), (damped(2.0), 1.0), (undamped(), 0.7)):
        bound = s.decay(t) / s.spread(t)
        xs = hull_grid(data, t, s, 257)
        us = [velocity_at(data, float(x), t, s)[0] for x in xs]
        for i in range(len(xs)):
            for j in range(i + 1, len(xs), 16):
                quot = (us[j] - us[i]) / (xs[j] - xs[i])
                assert quot <= bound + 1e-9


# -- oracle equivalence -------------------------------------------------------------

def test_matches_sticky_oracle_on_random_atomic_data():
    rng = np.random.default_rng(3)
    for _ in range(6):
        k = int(rng.integers(2, 9))
        xs = np.sort(rng.choice(np.linspace(-3, 3, 121), k, replace=False))
        pieces = [atom(x, m, v) for x, m, v in
                  zip(xs, rng.uniform(0.1, 2, k), rng.uniform(-2, 2, k))]
        data = build_initial(pieces)
        for mode in (undamped(), damped(0.7), damped(3.0)):
            for t in (0.5, 1.0, 2.0):
                state = evolve(discretize(data, 1, mode), t)
                probes = []
                edges = np.concatenate([[state.pos[0] - 1.0], state.pos,
                                        [state.pos[-1] + 1.0]])
                probes.extend(0.5 * (edges[:-1] + edges[1:]))
                probes.extend(rng.uniform(edges[0], edges[-1], 10))
                for x in probes:
                    if np.min(np.abs(state.pos - x)) < 1e-6:
                        continue
                    want = oracle_cdf(state, float(x))
                    got = mass_at(data, float(x), t, mode)
                    assert got == pytest.approx(want, abs=1e-9)


# -- grids and extraction --------------------------------------------------------------

def test_sample_grid_single_point_matches_pointwise():
    data = pair_data()
    rows = sample_grid(data, [0.3], [1.0], damped(2.0))
    assert len(rows) == 1
    assert rows[0] == sample_at(data, 0.3, 1.0, damped(2.0))


def test_sample_grid_empty():
    assert sample_grid(pair_data(), [], [1.0], damped(2.0)) == []


def test_sample_grid_rows_and_threads():
    data = pair_data()
    xs = np.linspace(-2, 2, 31)
    rows = sample_grid(data, xs, [1.0, 2.0], damped(2.0))
    assert len(rows) == 62
    assert rows[0].t == 1.0 and rows[-1].t == 2.0
    threaded = sample_grid(data, xs, [1.0, 2.0], damped(2.0), max_workers=4)
    assert threaded == rows


def test_shock_column_appears_after_collision():
    data = pair_data()
    s = damped(2.0)
    xs = np.linspace(-2, 2, 513)
    early = sample_grid(data, xs, [1.0], s)
    late = sample_grid(data, xs, [2.0], s)
    assert not any(r.regime == "cluster" for r in early)
    clusters = [r for r in late if r.regime == "cluster"]
    assert clusters and all(abs(r.x) < 0.01 for r in clusters)


def test_extract_merged_pair():
    data = pair_data()
    s = damped(2.0)
    grid = np.linspace(-4, 4, 1024)  # even count: no node exactly at 0
    pieces = extract_measure(data, 2.0, s, grid)
    assert len(pieces) == 1
    p = pieces[0]
    assert p.kind == "atom"
    assert abs(p.x) <= 1e-9
    assert p.mass == pytest.approx(2.0, abs=1e-12)
    assert p.v == pytest.approx(0.0, abs=1e-12)


def test_extract_static_block():
    data = build_initial([block(0, 1, 1, 0)])
    pieces = extract_measure(data, 1.0, undamped(), np.linspace(-1, 2, 301))
    assert all(p.kind == "block" for p in pieces)
    assert sum(p.density * (p.b - p.a) for p in pieces) == pytest.approx(1.0)
    for p in pieces:
        assert p.density == pytest.approx(1.0, abs=1e-9)


def test_extract_small_time_recovers_initial_pieces():
    data = build_initial([atom(-1, 1, 1), block(0.5, 1.5, 2, -1)])
    s = damped(1.0)
    t = 1e-4
    pieces = extract_measure(data, t, s, np.linspace(-3, 3, 2001))
    atoms = [p for p in pieces if p.kind == "atom"]
    assert len(atoms) == 1
    assert atoms[0].x == pytest.approx(-1 + s.spread(t), abs=1e-12)
    assert atoms[0].mass == pytest.approx(1.0, abs=1e-12)
    blocks_mass = sum(p.density * (p.b - p.a) for p in pieces
                      if p.kind == "block")
    assert blocks_mass == pytest.approx(2.0, abs=1e-9)


def test_extract_grid_too_coarse_raises():
    # two merged clusters (at 0.15 and 0.37, off every characteristic
    # image) land in one cell of the coarse grid
    data = build_initial([
        atom(0.05, 1, 1), atom(0.25, 1, -1),
        atom(0.29, 1, 1), atom(0.45, 1, -1),
    ])
    with pytest.raises(ExtractionError, match="coarse"):
        extract_measure(data, 1.0, damped(1.0), np.linspace(-2, 2, 9))
    # caller-side refinement in depth resolves the same grid
    pieces = extract_measure(data, 1.0, damped(1.0), np.linspace(-2, 2, 9),
                             cell_depth=2)
    assert sorted(round(p.x, 9) for p in pieces) == [0.15, 0.37]
    assert all(p.mass == pytest.approx(2.0) for p in pieces)


def test_extract_requires_spanning_grid():
    with pytest.raises(ValueError, match="span"):
        extract_measure(pair_data(), 1.0, damped(2.0), np.linspace(-1, 1, 50))


def test_extract_conserves_mass_on_mixed_data():
    data = build_initial([
        block(-2, -1, 0.8, 1.2), atom(-0.2, 1.0, 2.0), atom(0.7, 0.5, -1.5),
        block(1.2, 2.0, 1.1, -0.4),
    ])
    s = damped(1.5)
    for t in (0.5, 1.5, 3.0):
        grid = hull_grid(data, t, s, 1500)
        pieces = extract_measure(data, t, s, grid)
        got = sum(p.mass if p.kind == "atom" else p.density * (p.b - p.a)
                  for p in pieces)
        assert got == pytest.approx(data.total_mass(), abs=1e-10)


def test_extract_reconstruction_matches_mass_on_grid():
    data = build_initial([atom(-1, 1, 1), block(0.0, 1.0, 1.5, -0.5)])
    s = damped(2.0)
    t = 1.2
    grid = hull_grid(data, t, s, 401)
    pieces = extract_measure(data, t, s, grid)
    base = mass_sided(data, float(grid[0]), t, s, "left")
    for x in grid[::25]:
        level = base
        for p in pieces:
            if p.kind == "atom":
                if p.x < x:
                    level += p.mass
            else:
                level += p.density * max(0.0, min(float(x), p.b) - p.a)
        assert level == pytest.approx(mass_sided(data, float(x), t, s, "left"),
                                      abs=1e-8 * data.total_mass())
