"""Initial mass measures on the line and exact Stieltjes integration.

The solver works with finite measures made of point masses ("atoms") and
constant-density slabs ("blocks"), each carrying a constant velocity.  For
this class every cumulative mass and every Lebesgue-Stieltjes integral the
solver needs evaluates in closed form, so nothing here is quadrature.

Sign convention for the cumulative mass m0: for x >= 0 it is the measure of
[0, x), for x < 0 it is minus the measure of [x, 0).  m0 is left-continuous
and jumps by the atom mass at atom positions.  Endpoint handling around
zero follows the half-open rule: the "from 0+0" integrals that the
potential uses exclude an atom sitting exactly at 0.
"""
from __future__ import annotations

import json
from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

#: weight functions accepted by the Stieltjes primitives:
#: "one" -> 1, "u0" -> velocity, "u0sq" -> velocity^2,
#: "eta" -> position, "eta_u0" -> position * velocity.
WEIGHTS = ("one", "u0", "u0sq", "eta", "eta_u0")

# comparison tolerance for derived positions (input breakpoints are exact)
EPS_POS = 1e-12


@dataclass(frozen=True)
class Atom:
    x: float
    mass: float
    v: float

    kind = "atom"


@dataclass(frozen=True)
class Block:
    a: float
    b: float
    density: float
    v: float

    kind = "block"


Piece = Atom | Block


def atom(x: float, mass: float, v: float) -> Atom:
    return Atom(float(x), float(mass), float(v))


def block(a: float, b: float, density: float, v: float) -> Block:
    return Block(float(a), float(b), float(density), float(v))


def _start(p: Piece) -> float:
    return p.x if isinstance(p, Atom) else p.a


def _end(p: Piece) -> float:
    return p.x if isinstance(p, Atom) else p.b


def _moments(p: Piece) -> tuple[float, float, float, float, float]:
    """(mass, u0, u0^2, eta, eta*u0) integrals of a whole piece."""
    if isinstance(p, Atom):
        m = p.mass
        return (m, m * p.v, m * p.v * p.v, m * p.x, m * p.x * p.v)
    m = p.density * (p.b - p.a)
    xm = p.density * (p.b * p.b - p.a * p.a) / 2.0
    return (m, m * p.v, m * p.v * p.v, xm, xm * p.v)


def _block_partial(p: Block, y: float, w: int) -> float:
    """Integral of weight w over the block part [a, y), a <= y <= b."""
    m = p.density * (y - p.a)
    if w == 0:
        return m
    if w == 1:
        return m * p.v
    if w == 2:
        return m * p.v * p.v
    xm = p.density * (y * y - p.a * p.a) / 2.0
    return xm if w == 3 else xm * p.v


class InitialData:
    """Validated, sorted initial measure with per-piece velocities.

    Immutable after construction; every operation on it is pure, so
    instances can be shared freely across threads.
    """

    def __init__(self, pieces: tuple[Piece, ...], U: float):
        self.pieces = pieces
        self.U = U
        self._starts = [_start(p) for p in pieces]
        self._ends = [_end(p) for p in pieces]
        # prefix[w][i] = integral of weight w over pieces[:i]
        cols = [[0.0] for _ in WEIGHTS]
        for p in pieces:
            mom = _moments(p)
            for c, m in zip(cols, mom):
                c.append(c[-1] + m)
        self._prefix = cols
        self._r0_left = tuple(self._raw(0.0, "left", w) for w in range(5))
        self._r0_right = tuple(self._raw(0.0, "right", w) for w in range(5))
        # numpy mirrors for vectorized evaluation
        self._np_starts = np.asarray(self._starts)
        self._np_prefix = np.asarray([np.asarray(c) for c in cols])
        self._np_is_block = np.asarray([isinstance(p, Block) for p in pieces])
        self._np_end = np.asarray(self._ends)
        self._np_density = np.asarray(
            [p.density if isinstance(p, Block) else 0.0 for p in pieces]
        )
        self._np_v = np.asarray([p.v for p in pieces])
        self._np_mass = np.asarray(
            [p.mass if isinstance(p, Atom) else 0.0 for p in pieces]
        )

    # -- raw cumulative from -infinity ------------------------------------

    def _raw(self, y: float, side: str, w: int) -> float:
        """Integral of weight w over (-inf, y) (side='left') or (-inf, y]."""
        i = bisect_right(self._starts, y)
        total = self._prefix[w][i]
        for j in (i - 1, i - 2):
            if j < 0:
                continue
            p = self.pieces[j]
            if isinstance(p, Block):
                if p.b > y:
                    total += _block_partial(p, y, w) - _moments(p)[w]
            elif p.x == y and side == "left":
                total -= _moments(p)[w]
        return total

    def _raw_many(self, ys: np.ndarray, side: str, w: int) -> np.ndarray:
        idx = np.searchsorted(self._np_starts, ys, side="right")
        total = self._np_prefix[w][idx]
        for off in (1, 2):
            j = idx - off
            ok = j >= 0
            jj = np.where(ok, j, 0)
            # straddling block: replace full contribution by [a, y) part
            strad = ok & self._np_is_block[jj] & (self._np_end[jj] > ys)
            if np.any(strad):
                k = jj[strad]
                yk = ys[strad]
                d, v = self._np_density[k], self._np_v[k]
                a, b = self._np_starts[k], self._np_end[k]
                part_m = d * (yk - a)
                full_m = d * (b - a)
                if w == 0:
                    corr = part_m - full_m
                elif w == 1:
                    corr = (part_m - full_m) * v
                elif w == 2:
                    corr = (part_m - full_m) * v * v
                else:
                    part_x = d * (yk * yk - a * a) / 2.0
                    full_x = d * (b * b - a * a) / 2.0
                    corr = (part_x - full_x) * (v if w == 4 else 1.0)
                np.add.at(total, np.nonzero(strad)[0], corr)
            if side == "left":
                at_y = ok & ~self._np_is_block[jj] & (self._np_starts[jj] == ys)
                if np.any(at_y):
                    k = jj[at_y]
                    if w == 0:
                        wgt = np.ones(len(k))
                    elif w == 1:
                        wgt = self._np_v[k]
                    elif w == 2:
                        wgt = self._np_v[k] ** 2
                    elif w == 3:
                        wgt = self._np_starts[k]
                    else:
                        wgt = self._np_starts[k] * self._np_v[k]
                    np.add.at(total, np.nonzero(at_y)[0],
                              -self._np_mass[k] * wgt)
        return total

    # -- support queries ---------------------------------------------------

    def support_bounds(self) -> tuple[float, float]:
        return self._starts[0], max(self._ends)

    def total_mass(self) -> float:
        return self._prefix[0][-1]

    def total_momentum(self) -> float:
        return self._prefix[1][-1]

    def next_support(self, y: float) -> float | None:
        """Infimum of the support intersected with (y, inf); None if empty.

        Block closures [a, b] count as support, so a point inside a block
        returns itself (no gap on its right).
        """
        best = None
        for p in self.pieces:
            if isinstance(p, Atom):
                if p.x > y:
                    best = p.x if best is None else min(best, p.x)
            else:
                if y < p.a:
                    cand = p.a
                elif y < p.b:
                    cand = y  # still inside the closure, zero-width gap
                else:
                    continue
                best = cand if best is None else min(best, cand)
        return best

    def prev_support(self, y: float) -> float | None:
        """Supremum of the support intersected with (-inf, y); None if empty."""
        best = None
        for p in self.pieces:
            if isinstance(p, Atom):
                if p.x < y:
                    best = p.x if best is None else max(best, p.x)
            else:
                if y > p.b:
                    cand = p.b
                elif y > p.a:
                    cand = y
                else:
                    continue
                best = cand if best is None else max(best, cand)
        return best

    def in_support(self, y: float, tol: float = EPS_POS) -> bool:
        for p in self.pieces:
            if isinstance(p, Atom):
                if abs(p.x - y) <= tol:
                    return True
            elif p.a - tol <= y <= p.b + tol:
                return True
        return False

    def u0_at(self, y: float) -> float:
        """Initial velocity at a support point (atoms win over block edges)."""
        for p in self.pieces:
            if isinstance(p, Atom) and p.x == y:
                return p.v
        for p in self.pieces:
            if isinstance(p, Block) and p.a <= y < p.b:
                return p.v
        for p in self.pieces:
            if isinstance(p, Block) and y == p.b:
                return p.v
        return 0.0

    def boundaries(self) -> list[float]:
        """Sorted distinct piece endpoints (atom positions, block edges)."""
        pts = set()
        for p in self.pieces:
            pts.add(_start(p))
            pts.add(_end(p))
        return sorted(pts)


def _validate(pieces: list[Piece]) -> None:
    if not pieces:
        raise ValueError("initial data needs at least one piece")
    for i, p in enumerate(pieces):
        if isinstance(p, Atom):
            if not p.mass > 0:
                raise ValueError(f"piece {i}: atom mass must be positive")
        elif isinstance(p, Block):
            if not p.density > 0:
                raise ValueError(f"piece {i}: block density must be positive")
            if not p.a < p.b:
                raise ValueError(f"piece {i}: block needs a < b")
        else:
            raise ValueError(f"piece {i}: not an Atom or Block")
        for val in _moments(p):
            if not np.isfinite(val):
                raise ValueError(f"piece {i}: non-finite value")


def build_initial(pieces: list[Piece]) -> InitialData:
    """Sort, validate and index a list of pieces.

    Atoms may sit exactly on block endpoints but not inside a block's open
    interval; any other overlap is rejected with the offending input index.
    """
    _validate(pieces)
    order = sorted(
        range(len(pieces)),
        key=lambda i: (_start(pieces[i]), isinstance(pieces[i], Block)),
    )
    for k in range(len(order) - 1):
        i, j = order[k], order[k + 1]
        p, q = pieces[i], pieces[j]
        if isinstance(p, Atom) and isinstance(q, Atom):
            if q.x <= p.x:
                raise ValueError(f"piece {j}: coincides with atom (piece {i})")
        elif isinstance(p, Atom):
            if q.a < p.x:
                raise ValueError(f"piece {j}: block overlaps atom (piece {i})")
        elif isinstance(q, Atom):
            if q.x < p.b:
                raise ValueError(
                    f"piece {j}: atom inside block interior (piece {i})"
                )
        else:
            if q.a < p.b:
                raise ValueError(f"piece {j}: block overlaps block (piece {i})")
    ordered = tuple(pieces[i] for i in order)
    U = max(abs(p.v) for p in ordered)
    return InitialData(ordered, U)


# -- public operations -----------------------------------------------------

_W = {name: i for i, name in enumerate(WEIGHTS)}


def cdf(data: InitialData, y: float, side: str = "left") -> float:
    """Cumulative mass m0(y-0) or m0(y+0) under the signed convention."""
    return cdf_w(data, y, side, "one")


def cdf_w(data: InitialData, y: float, side: str, weight: str) -> float:
    """Weighted cumulative: integral of the weight from 0 to y, signed."""
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    w = _W[weight]
    return data._raw(y, side, w) - data._r0_left[w]


def cdf_w_many(data: InitialData, ys: np.ndarray, side: str,
               weight: str) -> np.ndarray:
    w = _W[weight]
    ys = np.asarray(ys, dtype=float)
    return data._raw_many(ys, side, w) - data._r0_left[w]


def from_zero(data: InitialData, y: float, side: str, weight: str) -> float:
    """Oriented integral of the weight from 0+0 to y-0 (side 'left') or
    y+0 (side 'right'); this is the gauge all solution formulas use.

    An atom exactly at 0 is excluded by the lower limit; for y < 0 the
    value is minus the integral over [y, 0]-style intervals.
    """
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    w = _W[weight]
    return data._raw(y, side, w) - data._r0_right[w]


def stieltjes(data: InitialData, y1: float, y2: float,
              include_left: bool, include_right: bool,
              weight: str = "one") -> float:
    """Exact integral of the weight against the measure over [y1, y2],
    with explicit control over whether endpoint atoms count."""
    if y1 > y2:
        raise ValueError(f"need y1 <= y2, got {y1} > {y2}")
    w = _W[weight]
    hi = data._raw(y2, "right" if include_right else "left", w)
    lo = data._raw(y1, "left" if include_left else "right", w)
    return hi - lo


# -- JSON ingestion ----------------------------------------------------------

def piece_from_json(obj: dict) -> Piece:
    kind = obj.get("kind")
    try:
        if kind == "atom":
            return atom(obj["x"], obj["mass"], obj["v"])
        if kind == "block":
            return block(obj["a"], obj["b"], obj["density"], obj["v"])
    except KeyError as e:
        raise ValueError(f"piece missing field {e.args[0]!r}") from None
    raise ValueError(f"piece kind must be 'atom' or 'block', got {kind!r}")


def initial_from_json(obj: dict) -> InitialData:
    if "pieces" not in obj or not isinstance(obj["pieces"], list):
        raise ValueError("initial data JSON needs a 'pieces' list")
    return build_initial([piece_from_json(p) for p in obj["pieces"]])


def load_initial(path: str) -> InitialData:
    with open(path) as f:
        return initial_from_json(json.load(f))


def piece_to_json(p: Piece) -> dict:
    if isinstance(p, Atom):
        return {"kind": "atom", "x": p.x, "mass": p.mass, "v": p.v}
    return {"kind": "block", "a": p.a, "b": p.b, "density": p.density, "v": p.v}
