"""Generalized potential: exact construction, minimization and selection.

For each evaluation point (x, t) the solver minimizes, over the Lagrangian
coordinate y, the functional

    F(y) = integral from 0+0 to y-0 of (eta + u0(eta) * a(t) - x) dm0(eta),

where a(t) is the time-spread of the characteristics.  For atom/block data
F is piecewise quadratic with jumps at atoms, so its infimum-closure is
attained on a finite candidate set and the argmin set is a finite union of
closed intervals.  The selection step then applies the vacuum-adjustment
rules that pick the two extreme minimizers inside the support.
"""
from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass

import numpy as np

from .measure import EPS_POS, Block, InitialData, from_zero

#: relative tie tolerance when merging candidate values into the argmin set
EPS_MIN = 1e-11


@dataclass(frozen=True)
class SpreadMode:
    """Time-spread a(t) of the characteristics and the velocity decay factor.

    undamped: a(t) = t,                     decay = 1
    damped:   a(t) = tau*(1 - exp(-t/tau)), decay = exp(-t/tau)
    scaled:   a(t) = tau*(1 - exp(-t/tau^2)), decay = exp(-t/tau^2)
    """

    mode: str
    tau: float | None = None

    def __post_init__(self):
        if self.mode not in ("undamped", "damped", "scaled"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "undamped":
            if self.tau is not None:
                raise ValueError("undamped mode takes no tau")
        elif self.tau is None or not self.tau > 0:
            raise ValueError(f"{self.mode} mode needs tau > 0")

    def _rate(self) -> float:
        if self.mode == "damped":
            return 1.0 / self.tau
        return 1.0 / (self.tau * self.tau)  # scaled

    def spread(self, t: float) -> float:
        if t < 0:
            raise ValueError("time must be nonnegative")
        if self.mode == "undamped":
            return t
        return -self.tau * math.expm1(-t * self._rate())

    def decay(self, t: float) -> float:
        if t < 0:
            raise ValueError("time must be nonnegative")
        if self.mode == "undamped":
            return 1.0
        return math.exp(-t * self._rate())


def undamped() -> SpreadMode:
    return SpreadMode("undamped")


def damped(tau: float) -> SpreadMode:
    return SpreadMode("damped", float(tau))


def scaled(tau: float) -> SpreadMode:
    return SpreadMode("scaled", float(tau))


def spread(t: float, s: SpreadMode) -> float:
    return s.spread(t)


def potential_value(data: InitialData, x: float, t: float, s: SpreadMode,
                    y: float, side: str = "left") -> float:
    """F(y; x, t), left-continuous in y; side='right' gives F(y+0)."""
    a = s.spread(t)
    return (from_zero(data, y, side, "eta")
            + a * from_zero(data, y, side, "u0")
            - x * from_zero(data, y, side, "one"))


@dataclass(frozen=True)
class Segment:
    """Quadratic piece of the potential on (lo, hi], in centered form
    v0 + v1*(y-lo) + v2*(y-lo)^2 where v0 = F(lo+0)."""

    lo: float
    hi: float
    v0: float
    v1: float
    v2: float

    def value(self, y: float) -> float:
        dy = y - self.lo
        return self.v0 + dy * (self.v1 + dy * self.v2)

    def vertex(self) -> float | None:
        if self.v2 <= 0:
            return None
        return self.lo - self.v1 / (2.0 * self.v2)


@dataclass(frozen=True)
class PotentialProfile:
    """Exact piecewise-quadratic representation of y -> F(y; x, t)."""

    x: float
    t: float
    spread_len: float
    decay: float
    segments: tuple[Segment, ...]
    jumps: tuple[tuple[float, float], ...]  # (position, F(p+0) - F(p))
    domain: tuple[float, float]

    def value(self, y: float) -> float:
        segs = self.segments
        if y <= segs[0].lo:
            return segs[0].v0
        if y > segs[-1].hi:
            return segs[-1].value(segs[-1].hi)
        lo = bisect_left([s.hi for s in segs], y)
        return segs[lo].value(y)

    def value_right(self, y: float) -> float:
        segs = self.segments
        if y < segs[0].lo:
            return segs[0].v0
        if y >= segs[-1].hi:
            return segs[-1].value(segs[-1].hi)
        lo = bisect_right([s.lo for s in segs], y) - 1
        return segs[lo].value(y)


def build_profile(data: InitialData, x: float, t: float,
                  s: SpreadMode) -> PotentialProfile:
    """Assemble the exact profile on a domain covering the support hull and
    the characteristic cone around x (margin 1 + U*a beyond both)."""
    a = s.spread(t)
    ua = data.U * a
    s_min, s_max = data.support_bounds()
    lo = min(x - ua, s_min) - (1.0 + ua)
    hi = max(x + ua, s_max) + (1.0 + ua)
    breaks = sorted({lo, hi, *data.boundaries()})

    blocks = [p for p in data.pieces if isinstance(p, Block)]
    segs = []
    for bl, bh in zip(breaks[:-1], breaks[1:]):
        v0 = potential_value(data, x, t, s, bl, side="right")
        cover = next((p for p in blocks if p.a <= bl and bh <= p.b), None)
        if cover is None:
            segs.append(Segment(bl, bh, v0, 0.0, 0.0))
        else:
            d = cover.density
            segs.append(Segment(bl, bh, v0, d * (bl + cover.v * a - x),
                                d / 2.0))
    jumps = tuple(
        (p.x, (p.x + p.v * a - x) * p.mass)
        for p in data.pieces if not isinstance(p, Block)
    )
    return PotentialProfile(x, t, a, s.decay(t), tuple(segs), jumps, (lo, hi))


def minimize_profile(profile: PotentialProfile
                     ) -> tuple[float, tuple[tuple[float, float], ...]]:
    """Global minimum in the limit sense and the closed set attaining it.

    Candidates: one-sided limits at every breakpoint plus interior vertices
    of convex segments.  Values within EPS_MIN*(1+|nu|) of the minimum merge
    into the argmin set, which is returned as maximal closed intervals
    (degenerate intervals are single points).
    """
    best = math.inf
    for seg in profile.segments:
        best = min(best, seg.v0, seg.value(seg.hi))
        v = seg.vertex()
        if v is not None and seg.lo < v < seg.hi:
            best = min(best, seg.value(v))
    nu = best
    tol = EPS_MIN * (1.0 + abs(nu))

    parts: list[tuple[float, float]] = []
    for seg in profile.segments:
        if seg.v2 == 0.0 and seg.v1 == 0.0:
            if seg.v0 <= nu + tol:
                parts.append((seg.lo, seg.hi))
            continue
        if seg.v0 <= nu + tol:
            parts.append((seg.lo, seg.lo))
        if seg.value(seg.hi) <= nu + tol:
            parts.append((seg.hi, seg.hi))
        v = seg.vertex()
        if v is not None and seg.lo < v < seg.hi and seg.value(v) <= nu + tol:
            parts.append((v, v))

    parts.sort()
    merged = [parts[0]]
    for lo, hi in parts[1:]:
        mlo, mhi = merged[-1]
        if lo <= mhi + EPS_POS:
            merged[-1] = (mlo, max(mhi, hi))
        else:
            merged.append((lo, hi))
    return nu, tuple(merged)


@dataclass(frozen=True)
class MinimizerSelection:
    """Extreme minimizers after the vacuum-adjustment rules.

    y_lo <= y_hi both lie in the support; they differ exactly at mass
    clusters (delta shocks).  branch records whether the minimum is the
    left value F(y_lo) or the right limit F(y_lo+0), which decides whether
    an atom at y_lo has already crossed the evaluation point.
    """

    value: float
    components: tuple[tuple[float, float], ...]
    y_lo: float
    y_hi: float
    branch: str  # "left" -> F(y_lo) attains, "right" -> F(y_lo+0)


def _covers(components, lo, hi) -> bool:
    """Is the open interval (lo, hi) contained in one component?"""
    for clo, chi in components:
        if clo <= lo + EPS_POS and hi <= chi + EPS_POS:
            return True
    return False


def select_minimizers(data: InitialData, x: float, t: float, s: SpreadMode,
                      nu: float,
                      components: tuple[tuple[float, float], ...]
                      ) -> MinimizerSelection:
    """Apply the vacuum-adjustment rules to the raw argmin set.

    When an initial-vacuum interval abuts an extreme minimizer from inside
    the argmin set and its far endpoint carries mass, the extreme minimizer
    is moved to that far endpoint; the lower selected point is the smaller
    of the two adjusted extremes and the upper one is the adjusted upper
    extreme, exactly as the selection rule is printed.
    """
    if not components:
        raise RuntimeError("empty argmin set for valid data")
    y_m = components[0][0]
    y_sup = components[-1][1]

    nxt = data.next_support(y_m)
    if nxt is not None and nxt > y_m + EPS_POS and _covers(components, y_m, nxt):
        y_low_adj = nxt
    else:
        y_low_adj = y_m

    prv = data.prev_support(y_sup)
    if prv is not None and prv < y_sup - EPS_POS and _covers(components, prv,
                                                             y_sup):
        y_up_adj = prv
    else:
        y_up_adj = y_sup

    y_lo = min(y_low_adj, y_up_adj)
    y_hi = y_up_adj
    a = s.spread(t)
    branch = "left" if x <= y_lo + data.u0_at(y_lo) * a else "right"
    return MinimizerSelection(nu, components, y_lo, y_hi, branch)


def select_at(data: InitialData, x: float, t: float,
              s: SpreadMode) -> MinimizerSelection:
    """Build, minimize and select in one call."""
    profile = build_profile(data, x, t, s)
    nu, components = minimize_profile(profile)
    return select_minimizers(data, x, t, s, nu, components)


def potential_values(data: InitialData, x: float, t: float, s: SpreadMode,
                     ys: np.ndarray) -> np.ndarray:
    """Vectorized F(y; x, t) for test oracles and profile dumps.

    cdf_w_many anchors cumulatives at m0(0-0); shifting by the weighted
    mass of an atom at 0 (if any) converts to the 0+0 gauge of F.
    """
    from .measure import cdf_w, cdf_w_many

    a = s.spread(t)
    ys = np.asarray(ys, dtype=float)
    out = np.zeros_like(ys)
    for w, coef in (("eta", 1.0), ("u0", a), ("one", -x)):
        out += coef * (cdf_w_many(data, ys, "left", w)
                       - cdf_w(data, 0.0, "right", w))
    return out
