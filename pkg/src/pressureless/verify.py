"""Numerical certification against the weak-form and entropy conditions.

Test functions are closed-form C^1 windows (sextic bumps and smoothstep
plateaus), so every space integral splits at known knots and an 8-point
Gauss rule per piece is exact for the polynomial integrands.  Measure
integrals are taken against extracted solution snapshots per time slice;
the only scheme error left in the weak residuals is the trapezoid rule in
time, which the refinement studies drive down.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .measure import Atom, Block, InitialData
from .potential import SpreadMode, select_at
from .solution import extract_measure, mass_at, sample_at

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def _gauss(f, lo: float, hi: float) -> float:
    if hi <= lo:
        return 0.0
    mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
    return half * sum(w * f(mid + half * z)
                      for z, w in zip(_GL_NODES, _GL_WEIGHTS))


def integrate_piecewise(f, lo: float, hi: float, knots) -> float:
    """Integrate f over [lo, hi] splitting at the given knots; exact for
    integrands polynomial between consecutive knots."""
    cuts = sorted({lo, hi, *(k for k in knots if lo < k < hi)})
    return sum(_gauss(f, a, b) for a, b in zip(cuts[:-1], cuts[1:]))


@dataclass(frozen=True)
class Window:
    """C^1 compactly supported window on an interval.

    kind "bump": (1 - s^2)^3 on the normalized coordinate; kind "plateau":
    smoothstep ramps of width `ramp` at both ends and 1 in between.
    """

    kind: str
    lo: float
    hi: float
    ramp: float = 0.0

    def __post_init__(self):
        if self.kind not in ("bump", "plateau"):
            raise ValueError(f"unknown window kind {self.kind!r}")
        if not self.hi > self.lo:
            raise ValueError("window needs lo < hi")
        if self.kind == "plateau":
            if not 0 < self.ramp <= 0.5 * (self.hi - self.lo):
                raise ValueError("plateau ramp must fit inside the window")

    def value(self, x: float) -> float:
        if not self.lo < x < self.hi:
            return 0.0
        if self.kind == "bump":
            s = (2.0 * x - (self.lo + self.hi)) / (self.hi - self.lo)
            return (1.0 - s * s) ** 3
        if x < self.lo + self.ramp:
            u = (x - self.lo) / self.ramp
            return u * u * (3.0 - 2.0 * u)
        if x > self.hi - self.ramp:
            u = (self.hi - x) / self.ramp
            return u * u * (3.0 - 2.0 * u)
        return 1.0

    def deriv(self, x: float) -> float:
        if not self.lo < x < self.hi:
            return 0.0
        if self.kind == "bump":
            w = self.hi - self.lo
            s = (2.0 * x - (self.lo + self.hi)) / w
            return -6.0 * s * (1.0 - s * s) ** 2 * (2.0 / w)
        if x < self.lo + self.ramp:
            u = (x - self.lo) / self.ramp
            return 6.0 * u * (1.0 - u) / self.ramp
        if x > self.hi - self.ramp:
            u = (self.hi - x) / self.ramp
            return -6.0 * u * (1.0 - u) / self.ramp
        return 0.0

    def knots(self) -> tuple[float, ...]:
        if self.kind == "bump":
            return (self.lo, self.hi)
        return (self.lo, self.lo + self.ramp, self.hi - self.ramp, self.hi)


def bump(lo: float, hi: float) -> Window:
    return Window("bump", lo, hi)


def plateau(lo: float, hi: float, ramp: float) -> Window:
    return Window("plateau", lo, hi, ramp)


@dataclass(frozen=True)
class TestFunction:
    """Product window phi(x, t) = wx(x) * wt(t)."""

    __test__ = False  # not a pytest class

    wx: Window
    wt: Window

    def value(self, x: float, t: float) -> float:
        return self.wx.value(x) * self.wt.value(t)

    def dt(self, x: float, t: float) -> float:
        return self.wx.value(x) * self.wt.deriv(t)

    def dx(self, x: float, t: float) -> float:
        return self.wx.deriv(x) * self.wt.value(t)


def pair_against_pieces(pieces, window: Window, power: int = 0) -> float:
    """Pairing <measure * u^power, window> for a snapshot measure whose
    pieces carry their local velocity."""
    total = 0.0
    for p in pieces:
        if isinstance(p, Atom):
            total += window.value(p.x) * p.mass * p.v ** power
        else:
            total += p.density * p.v ** power * integrate_piecewise(
                window.value, max(p.a, window.lo), min(p.b, window.hi),
                window.knots())
    return total


# -- checks -------------------------------------------------------------------


def oleinik_check(data: InitialData, t: float, s: SpreadMode, xgrid,
                  _corrupt: bool = False) -> float:
    """Worst excess of velocity difference quotients over the one-sided
    Lipschitz bound decay(t)/a(t); nonpositive means the condition holds."""
    xs = np.asarray([float(x) for x in xgrid])
    us = np.asarray([sample_at(data, float(x), t, s).u for x in xs])
    if _corrupt:
        bound_ = s.decay(t) / s.spread(t)
        us = us + 3.0 * bound_ * (xs - xs[0])
    dx = xs[None, :] - xs[:, None]
    du = us[None, :] - us[:, None]
    mask = dx > 0
    quot = np.where(mask, du / np.where(mask, dx, 1.0), -np.inf)
    bound = s.decay(t) / s.spread(t)
    return float(quot.max() - bound)


def monotonicity_check(data: InitialData, t: float, s: SpreadMode,
                       x_pairs) -> float:
    """Worst defect of minimizer monotonicity: max of y_lo(x1) - y_hi(x2)
    over pairs x1 < x2; at most ~0 for a correct selection."""
    worst = -math.inf
    for x1, x2 in x_pairs:
        if x1 > x2:
            x1, x2 = x2, x1
        a = select_at(data, float(x1), t, s)
        b = select_at(data, float(x2), t, s)
        worst = max(worst, a.y_lo - b.y_hi)
    return worst


def slice_extractor(data: InitialData, s: SpreadMode, t_hi: float,
                    grid_n: int = 33):
    """Memoized per-time extraction on a grid sized for the support hull
    inflated by the largest spread in the window.  Share one across
    weak_residual calls at nested resolutions to reuse the dyadic nodes."""
    lo, hi = data.support_bounds()
    pad = data.U * s.spread(t_hi) + 0.5
    grid = np.linspace(lo - pad, hi + pad, grid_n)
    cache: dict[float, list] = {}

    def get(t: float) -> list:
        if t not in cache:
            cache[t] = extract_measure(data, t, s, grid, cell_depth=8)
        return cache[t]

    return get


def _damping_coefficient(s: SpreadMode) -> float:
    if s.mode == "undamped":
        return 0.0
    if s.mode == "damped":
        return 1.0 / s.tau
    raise ValueError("weak residuals are defined for the damped and "
                     "undamped systems only")


def weak_residual(data: InitialData, s: SpreadMode, phi: TestFunction,
                  psi: TestFunction, resolution: int,
                  slices=None) -> tuple[float, float]:
    """Residuals of the two weak-form identities.

    r1 tests mass transport: integral of phi_t * m dx dt minus the
    dm-weighted integral of phi * u; r2 tests momentum balance with the
    damping term: dm-weighted integral of psi_t u + psi_x u^2 - c psi u.
    Space integrals are exact per slice; time uses the trapezoid rule on
    `resolution` intervals of each function's own window.
    """
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    coef = _damping_coefficient(s)
    t_hi = max(phi.wt.hi, psi.wt.hi)
    if min(phi.wt.lo, psi.wt.lo) <= 0:
        raise ValueError("test-function windows must sit at t > 0")
    get = slices if slices is not None else slice_extractor(data, s, t_hi)

    def t_nodes(wt: Window) -> list[float]:
        return [wt.lo + (wt.hi - wt.lo) * k / resolution
                for k in range(resolution + 1)]

    def mass_integral(t: float, pieces) -> float:
        wx = phi.wx
        base_x = wx.lo
        base = mass_at(data, base_x, t, s)
        knots = set(wx.knots())
        for p in pieces:
            if isinstance(p, Atom):
                knots.add(p.x)
            else:
                knots.update((p.a, p.b))

        def m_of(x: float) -> float:
            level = base
            for p in pieces:
                if isinstance(p, Atom):
                    if base_x < p.x < x:
                        level += p.mass
                    elif x <= p.x < base_x:
                        level -= p.mass
                else:
                    level += p.density * (
                        max(0.0, min(x, p.b) - max(p.a, base_x))
                        - max(0.0, min(base_x, p.b) - max(p.a, x)))
            return level

        return integrate_piecewise(
            lambda x: phi.dt(x, t) * m_of(x), wx.lo, wx.hi, knots)

    nodes = t_nodes(phi.wt)
    vals = []
    for t in nodes:
        pieces = get(t)
        dm_term = 0.0
        for p in pieces:
            if isinstance(p, Atom):
                dm_term += phi.value(p.x, t) * p.v * p.mass
            else:
                dm_term += p.density * p.v * integrate_piecewise(
                    lambda x: phi.value(x, t), max(p.a, phi.wx.lo),
                    min(p.b, phi.wx.hi), phi.wx.knots())
        vals.append(mass_integral(t, pieces) - dm_term)
    h = (phi.wt.hi - phi.wt.lo) / resolution
    r1 = h * (0.5 * (vals[0] + vals[-1]) + sum(vals[1:-1]))

    nodes = t_nodes(psi.wt)
    vals = []
    for t in nodes:
        pieces = get(t)
        acc = 0.0
        for p in pieces:
            if isinstance(p, Atom):
                u = p.v
                acc += p.mass * (psi.dt(p.x, t) * u + psi.dx(p.x, t) * u * u
                                 - coef * psi.value(p.x, t) * u)
            else:
                u = p.v
                lo_, hi_ = max(p.a, psi.wx.lo), min(p.b, psi.wx.hi)
                kn = psi.wx.knots()
                acc += p.density * (
                    u * integrate_piecewise(
                        lambda x: psi.dt(x, t), lo_, hi_, kn)
                    + u * u * integrate_piecewise(
                        lambda x: psi.dx(x, t), lo_, hi_, kn)
                    - coef * u * integrate_piecewise(
                        lambda x: psi.value(x, t), lo_, hi_, kn))
        vals.append(acc)
    h = (psi.wt.hi - psi.wt.lo) / resolution
    r2 = h * (0.5 * (vals[0] + vals[-1]) + sum(vals[1:-1]))
    return r1, r2


def initial_trace_check(data: InitialData, s: SpreadMode, window: Window,
                        t_seq) -> list[dict]:
    """Gaps between the solution pairings against the window and the
    initial ones, for the mass, momentum and energy measures."""
    t_seq = [float(t) for t in t_seq]
    if any(t <= 0 for t in t_seq):
        raise ValueError("trace times must be positive")
    want = []
    for power in (0, 1, 2):
        total = 0.0
        for p in data.pieces:
            if isinstance(p, Atom):
                total += window.value(p.x) * p.mass * p.v ** power
            else:
                total += p.density * p.v ** power * integrate_piecewise(
                    window.value, max(p.a, window.lo), min(p.b, window.hi),
                    window.knots())
        want.append(total)

    lo, hi = data.support_bounds()
    pad = data.U * s.spread(max(t_seq)) + 0.5
    grid = np.linspace(lo - pad, hi + pad, 513)
    out = []
    for t in t_seq:
        pieces = extract_measure(data, t, s, grid, cell_depth=8)
        got = [pair_against_pieces(pieces, window, power=k) for k in (0, 1, 2)]
        out.append({
            "t": t,
            "rho_gap": abs(got[0] - want[0]),
            "momentum_gap": abs(got[1] - want[1]),
            "energy_gap": abs(got[2] - want[2]),
        })
    return out


# -- battery ---------------------------------------------------------------


def _monotone_nonincreasing(vals, slack: float = 1e-12) -> bool:
    return all(b <= a + slack + 1e-9 * abs(a) for a, b in zip(vals, vals[1:]))


def run_battery(data: InitialData, s: SpreadMode, cfg: dict,
                seed: int = 0) -> list[dict]:
    """Run the selected checks and return one JSON-able entry per check:
    name, tolerance, measured value and pass flag."""
    checks = cfg.get("checks",
                     ["oleinik", "monotonicity", "weak", "initial_trace"])
    times = [float(t) for t in cfg.get("times", [0.5, 1.0, 2.0])]
    grid_n = int(cfg.get("grid_n", 512))
    corrupt = bool(cfg.get("corrupt_velocity", False))
    rng = np.random.default_rng(seed)
    lo, hi = data.support_bounds()
    report: list[dict] = []

    if "oleinik" in checks:
        worst = -math.inf
        for t in times:
            pad = data.U * s.spread(t) + 0.5
            grid = np.linspace(lo - pad, hi + pad, grid_n)
            worst = max(worst, oleinik_check(data, t, s, grid,
                                             _corrupt=corrupt))
        report.append({"name": "oleinik", "tolerance": 1e-9,
                       "measured": float(worst),
                       "pass": bool(worst <= 1e-9)})

    if "monotonicity" in checks:
        n_pairs = int(cfg.get("n_pairs", 1000))
        worst = -math.inf
        for t in times:
            pad = data.U * s.spread(t) + 0.5
            pairs = rng.uniform(lo - pad, hi + pad, size=(n_pairs, 2))
            worst = max(worst, monotonicity_check(data, t, s, pairs))
        report.append({"name": "monotonicity", "tolerance": 1e-12,
                       "measured": float(worst),
                       "pass": bool(worst <= 1e-12)})

    if "weak" in checks:
        wcfg = cfg.get("weak", {})
        t0, t1 = wcfg.get("t_window", [0.5, 1.5])
        pad = data.U * s.spread(float(t1)) + 0.25
        x0, x1 = wcfg.get("x_window", [lo - pad, hi + pad])
        resolution = int(wcfg.get("resolution", 128))
        phi = TestFunction(bump(float(x0), float(x1)),
                           bump(float(t0), float(t1)))
        r1, r2 = weak_residual(data, s, phi, phi, resolution)
        tol = 1e-4 * data.total_mass()
        report.append({"name": "weak_r1", "tolerance": tol,
                       "measured": float(abs(r1)),
                       "pass": bool(abs(r1) <= tol)})
        report.append({"name": "weak_r2", "tolerance": tol,
                       "measured": float(abs(r2)),
                       "pass": bool(abs(r2) <= tol)})

    if "initial_trace" in checks:
        t_seq = [float(t) for t in cfg.get("trace_times", [0.1, 0.01, 0.001])]
        pad = data.U * s.spread(max(t_seq)) + 0.5
        window = plateau(lo - pad, hi + pad, 0.25 * pad)
        rows = initial_trace_check(data, s, window, t_seq)
        ok = all(_monotone_nonincreasing([r[key] for r in rows])
                 for key in ("rho_gap", "momentum_gap", "energy_gap"))
        final = max(rows[-1][key]
                    for key in ("rho_gap", "momentum_gap", "energy_gap"))
        report.append({"name": "initial_trace", "tolerance": 1e-12,
                       "measured": float(final),
                       "pass": bool(ok and rows[-1]["rho_gap"] <= 1e-12)})

    return report
