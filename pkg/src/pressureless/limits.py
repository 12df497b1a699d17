"""Quantitative zero-relaxation and vanishing-damping limit studies.

Weak convergence of the density is measured in Wasserstein-1 distance,
computed as the integral of |difference of cumulative masses|.  For the
atom/block measure class both cumulatives are piecewise linear, so the
composite trapezoid rule on a grid refined with every breakpoint and every
sign-crossing of the difference integrates it exactly; a plain uniform grid
could not certify the tight analytic envelopes the studies are checked
against.
"""
from __future__ import annotations

import math
import warnings
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, replace

import numpy as np

from .measure import Atom, Block, InitialData, Piece
from .potential import SpreadMode, damped, scaled, undamped
from .solution import SolutionSample, extract_measure, sample_at

#: velocity comparisons skip points this close to a jump of either solution
EPS_SHOCK = 1e-6


def _events(pieces) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Breakpoints with atom jumps and density increments at each."""
    bps = sorted({p.x for p in pieces if isinstance(p, Atom)}
                 | {e for p in pieces if isinstance(p, Block)
                    for e in (p.a, p.b)})
    bps = np.asarray(bps)
    jump = np.zeros(len(bps))
    ddens = np.zeros(len(bps))
    for p in pieces:
        if isinstance(p, Atom):
            jump[np.searchsorted(bps, p.x)] += p.mass
        else:
            ddens[np.searchsorted(bps, p.a)] += p.density
            ddens[np.searchsorted(bps, p.b)] -= p.density
    return bps, jump, ddens


def total_mass_of(pieces) -> float:
    return sum(p.mass if isinstance(p, Atom) else p.density * (p.b - p.a)
               for p in pieces)


def w1_distance(pieces_a, pieces_b) -> float:
    """Exact W1 distance between two atom/block measures of equal mass."""
    ma, mb = total_mass_of(pieces_a), total_mass_of(pieces_b)
    if abs(ma - mb) > 1e-6 * max(1.0, ma, mb):
        raise ValueError(f"W1 needs equal masses, got {ma} vs {mb}")
    bps_a, jump_a, dd_a = _events(pieces_a)
    bps_b, jump_b, dd_b = _events(pieces_b)
    bps = np.unique(np.concatenate([bps_a, bps_b]))
    jump = np.zeros(len(bps))
    jump[np.searchsorted(bps, bps_a)] += jump_a
    jump[np.searchsorted(bps, bps_b)] -= jump_b
    dd = np.zeros(len(bps))
    dd[np.searchsorted(bps, bps_a)] += dd_a
    dd[np.searchsorted(bps, bps_b)] -= dd_b

    area = 0.0
    diff = 0.0   # cdf_a - cdf_b, right-continuous
    slope = 0.0  # density_a - density_b on the current interval
    for k in range(len(bps)):
        diff += jump[k]
        slope += dd[k]
        if k + 1 == len(bps):
            break
        h = bps[k + 1] - bps[k]
        d0, d1 = diff, diff + slope * h
        if d0 * d1 < 0:
            root = h * d0 / (d0 - d1)
            area += 0.5 * (abs(d0) * root + abs(d1) * (h - root))
        else:
            area += 0.5 * (abs(d0) + abs(d1)) * h
        diff = d1
    return area


def sup_cdf_distance(pieces_a, pieces_b) -> float:
    """Sup-norm distance of the two cumulatives (diagnostic metric)."""
    bps_a, jump_a, dd_a = _events(pieces_a)
    bps_b, jump_b, dd_b = _events(pieces_b)
    bps = np.unique(np.concatenate([bps_a, bps_b]))
    jump = np.zeros(len(bps))
    jump[np.searchsorted(bps, bps_a)] += jump_a
    jump[np.searchsorted(bps, bps_b)] -= jump_b
    dd = np.zeros(len(bps))
    dd[np.searchsorted(bps, bps_a)] += dd_a
    dd[np.searchsorted(bps, bps_b)] -= dd_b
    worst = 0.0
    diff = 0.0
    slope = 0.0
    for k in range(len(bps)):
        worst = max(worst, abs(diff))          # left limit at bps[k]
        diff += jump[k]
        slope += dd[k]
        worst = max(worst, abs(diff))          # right limit
        if k + 1 < len(bps):
            diff += slope * (bps[k + 1] - bps[k])
    return worst


def fitted_rate(taus, values) -> float:
    """Least-squares slope of log(value) against log(tau)."""
    pts = [(math.log(t), math.log(v)) for t, v in zip(taus, values) if v > 0]
    if len(pts) < 2:
        return math.nan
    xs, ys = zip(*pts)
    return float(np.polyfit(xs, ys, 1)[0])


@dataclass(frozen=True)
class LimitStudyReport:
    study: str
    t: float
    tau_values: tuple[float, ...]
    w1: tuple[float, ...]
    sup_cdf: tuple[float, ...]
    sup_velocity: tuple[float, ...]
    envelope: tuple[float, ...]
    rate: float
    grid_n: int


def scaled_solution(data: InitialData, x: float, t: float,
                    tau: float) -> SolutionSample:
    """Solution of the slow-time-scaled system: density fields unchanged,
    velocities are the damped ones at t/tau divided by tau."""
    smp = sample_at(data, x, t, scaled(tau))
    return replace(smp, u=smp.u / tau, u_left=smp.u_left / tau,
                   u_right=smp.u_right / tau)


def _study_grid(data: InitialData, max_spread: float, n: int) -> np.ndarray:
    lo, hi = data.support_bounds()
    pad = data.U * max_spread + 0.5
    return np.linspace(lo - pad, hi + pad, n)


def _check_refinement(study: str, w1_val: float, w1_fine: float,
                      mass: float) -> None:
    if abs(w1_fine - w1_val) > max(0.01 * abs(w1_val), 1e-12 * (1 + mass)):
        warnings.warn(
            f"{study}: W1 changed by more than 1% under grid doubling "
            f"({w1_val} -> {w1_fine}); refine the grid", stacklevel=3)


def zero_relaxation_study(data: InitialData, taus, t: float,
                          grid_n: int = 4096) -> LimitStudyReport:
    """Distance of the slow-time-scaled solution from the initial measure.

    Per tau: W1 and sup-CDF distances between the extracted solution
    measure and the initial one, the sampled sup of |u^tau| off vacuum,
    and the analytic displacement envelope total_mass * U * tau.
    """
    taus = [float(v) for v in taus]
    if not taus:
        raise ValueError("need at least one tau")
    if not t > 0:
        raise ValueError("time must be positive")
    max_spread = max(scaled(v).spread(t) for v in taus)
    w1s, sups, vels, envs = [], [], [], []
    for tau in taus:
        mode = scaled(tau)
        grid = _study_grid(data, max_spread, grid_n)
        pieces = extract_measure(data, t, mode, grid, cell_depth=4)
        val = w1_distance(pieces, data.pieces)
        fine = extract_measure(data, t, mode,
                               _study_grid(data, max_spread, 2 * grid_n),
                               cell_depth=4)
        _check_refinement("zero_relaxation", val,
                          w1_distance(fine, data.pieces), data.total_mass())
        w1s.append(val)
        sups.append(sup_cdf_distance(pieces, data.pieces))
        vgrid = _study_grid(data, max_spread, min(grid_n, 1025))
        vels.append(max(
            (abs(smp.u) / tau for x in vgrid
             if (smp := sample_at(data, float(x), t, mode)).regime != "vacuum"),
            default=0.0))
        envs.append(data.total_mass() * data.U * tau)
    return LimitStudyReport("zero_relaxation", t, tuple(taus), tuple(w1s),
                            tuple(sups), tuple(vels), tuple(envs),
                            fitted_rate(taus, w1s), grid_n)


def vanishing_damping_study(data: InitialData, taus, t: float,
                            grid_n: int = 4096) -> LimitStudyReport:
    """Distance of the damped solution from the undamped one at time t.

    Velocity gaps are taken in sup norm over the grid, excluding points
    within EPS_SHOCK of an extracted atom of either solution (pointwise
    velocities at a moving shock differ even as the measures converge).
    """
    taus = [float(v) for v in taus]
    if not taus:
        raise ValueError("need at least one tau")
    if not t > 0:
        raise ValueError("time must be positive")
    free = undamped()
    grid = _study_grid(data, t, grid_n)
    fine_grid = _study_grid(data, t, 2 * grid_n)
    ref_pieces = extract_measure(data, t, free, grid, cell_depth=4)
    ref_fine = extract_measure(data, t, free, fine_grid, cell_depth=4)
    w1s, sups, vels, envs = [], [], [], []
    for tau in taus:
        mode = damped(tau)
        pieces = extract_measure(data, t, mode, grid, cell_depth=4)
        val = w1_distance(pieces, ref_pieces)
        _check_refinement("vanishing_damping", val, w1_distance(
            extract_measure(data, t, mode, fine_grid, cell_depth=4),
            ref_fine), data.total_mass())
        w1s.append(val)
        sups.append(sup_cdf_distance(pieces, ref_pieces))
        # exclude jump neighbourhoods of either solution, and the sliver
        # between corresponding jumps of the two: the same shock sits at
        # positions offset by up to U*(t - a(t)), where pointwise values
        # differ even as the measures converge
        atoms_d = [p.x for p in pieces if isinstance(p, Atom)]
        atoms_u = [p.x for p in ref_pieces if isinstance(p, Atom)]
        pair_radius = data.U * (t - mode.spread(t)) + EPS_SHOCK
        excluded = [(p - EPS_SHOCK, p + EPS_SHOCK)
                    for p in atoms_d + atoms_u]
        excluded += [(min(pd, pu) - EPS_SHOCK, max(pd, pu) + EPS_SHOCK)
                     for pd in atoms_d for pu in atoms_u
                     if abs(pd - pu) <= pair_radius]
        vgrid = _study_grid(data, t, min(grid_n, 1025))
        gap = 0.0
        for x in vgrid:
            x = float(x)
            if any(lo <= x <= hi for lo, hi in excluded):
                continue
            gap = max(gap, abs(sample_at(data, x, t, mode).u
                               - sample_at(data, x, t, free).u))
        vels.append(gap)
        envs.append(data.total_mass() * data.U * (t - mode.spread(t)))
    return LimitStudyReport("vanishing_damping", t, tuple(taus), tuple(w1s),
                            tuple(sups), tuple(vels), tuple(envs),
                            fitted_rate(taus, w1s), grid_n)
