"""Event-driven sticky-particle dynamics, the solver's independent oracle.

In the rescaled coordinate s = a(t) every particle moves affinely with its
initial velocity, so collision times solve linear equations exactly and the
evolution needs no ODE stepping.  Colliding particles merge conserving
momentum; because all velocities share the common decay factor, the
initial-velocity momentum sum is invariant across merges.

Each particle tracks how much of its mass originated at initial positions
eta > 0 versus eta <= 0.  That split is what the solver's cumulative mass
m(x,t) = integral from 0+0 to the preimage of x actually counts, so the
oracle CDF reproduces the solver's gauge even after mass crosses x = 0
or clusters straddle it.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .measure import Atom, Block, InitialData
from .potential import SpreadMode

#: collision grouping tolerance in the rescaled coordinate
EPS_EVENT = 1e-13


@dataclass(frozen=True)
class ParticleState:
    """Ordered particles (position, mass, v0) plus origin bookkeeping."""

    pos: np.ndarray
    mass: np.ndarray
    v0: np.ndarray
    mass_pos: np.ndarray     # mass that started at eta > 0
    mass_nonpos: np.ndarray  # mass that started at eta <= 0
    t: float
    mode: SpreadMode

    def __len__(self) -> int:
        return len(self.pos)

    def total_mass(self) -> float:
        return float(self.mass.sum())

    def total_momentum_v0(self) -> float:
        return float((self.mass * self.v0).sum())


def discretize(data: InitialData, n_per_block: int,
               mode: SpreadMode) -> ParticleState:
    """Atoms stay as particles; each block becomes n equal-mass particles
    at its mass midpoints.  Mass and momentum are preserved exactly; the
    origin split of a chunk straddling 0 is taken from the exact overlap."""
    if n_per_block < 1:
        raise ValueError("n_per_block must be at least 1")
    pos, mass, v0, mpos, mnon = [], [], [], [], []
    for p in data.pieces:
        if isinstance(p, Atom):
            pos.append(p.x)
            mass.append(p.mass)
            v0.append(p.v)
            mpos.append(p.mass if p.x > 0 else 0.0)
            mnon.append(0.0 if p.x > 0 else p.mass)
        else:
            edges = np.linspace(p.a, p.b, n_per_block + 1)
            chunk = p.density * (p.b - p.a) / n_per_block
            for lo, hi in zip(edges[:-1], edges[1:]):
                pos.append(0.5 * (lo + hi))
                mass.append(chunk)
                v0.append(p.v)
                above = p.density * max(0.0, hi - max(lo, 0.0))
                mpos.append(above)
                mnon.append(chunk - above)
    order = np.argsort(pos, kind="stable")
    state = ParticleState(
        np.asarray(pos)[order], np.asarray(mass)[order],
        np.asarray(v0)[order], np.asarray(mpos)[order],
        np.asarray(mnon)[order], 0.0, mode,
    )
    return _merge_coincident(state)


def _merge_groups(state: ParticleState, group_id: np.ndarray) -> ParticleState:
    """Collapse particles sharing a group id; position is the mass-weighted
    meeting point, v0 the momentum average."""
    n_groups = group_id[-1] + 1
    if n_groups == len(state):
        return state
    mass = np.zeros(n_groups)
    np.add.at(mass, group_id, state.mass)
    mom = np.zeros(n_groups)
    np.add.at(mom, group_id, state.mass * state.v0)
    mx = np.zeros(n_groups)
    np.add.at(mx, group_id, state.mass * state.pos)
    mpos = np.zeros(n_groups)
    np.add.at(mpos, group_id, state.mass_pos)
    mnon = np.zeros(n_groups)
    np.add.at(mnon, group_id, state.mass_nonpos)
    return replace(state, pos=mx / mass, mass=mass, v0=mom / mass,
                   mass_pos=mpos, mass_nonpos=mnon)


def _merge_coincident(state: ParticleState) -> ParticleState:
    if len(state) < 2:
        return state
    scale = 1.0 + np.abs(state.pos).max()
    while True:
        touching = np.diff(state.pos) <= EPS_EVENT * scale
        if not touching.any():
            return state
        group_id = np.concatenate([[0], np.cumsum(~touching)])
        state = _merge_groups(state, group_id)


def evolve(state: ParticleState, t_end: float) -> ParticleState:
    """Advance to t_end, merging every cluster of particles that meet.

    Works in s = a(t): candidate collision offsets between neighbours are
    (gap / closing speed); the earliest event is processed by advancing all
    particles and merging every group whose meeting time ties with it.
    """
    if t_end < state.t:
        raise ValueError("cannot evolve backwards")
    s_now = state.mode.spread(state.t)
    s_end = state.mode.spread(t_end)
    # meetings at or past the spread asymptote are never attained, even when
    # the computed s_end rounds up to it
    horizon = np.inf if state.mode.mode == "undamped" else state.mode.tau
    pos, mass = state.pos.copy(), state.mass.copy()
    v0 = state.v0.copy()
    mpos, mnon = state.mass_pos.copy(), state.mass_nonpos.copy()

    while len(pos) > 1:
        gap = np.diff(pos)
        closing = v0[:-1] - v0[1:]
        with np.errstate(divide="ignore", invalid="ignore"):
            ds = np.where(closing > 0, gap / closing, np.inf)
        ds_min = ds.min()
        if s_now + ds_min > s_end or s_now + ds_min >= horizon:
            break
        s_now += ds_min
        pos = pos + v0 * ds_min
        colliding = ds <= ds_min + EPS_EVENT
        group_id = np.concatenate([[0], np.cumsum(~colliding)])
        merged = _merge_groups(
            ParticleState(pos, mass, v0, mpos, mnon, 0.0, state.mode),
            group_id,
        )
        merged = _merge_coincident(merged)
        pos, mass, v0 = merged.pos, merged.mass, merged.v0
        mpos, mnon = merged.mass_pos, merged.mass_nonpos
        if not np.all(np.diff(pos) > 0):
            raise RuntimeError("particle order inverted")  # cannot happen

    pos = pos + v0 * (s_end - s_now)
    return ParticleState(pos, mass, v0, mpos, mnon, t_end, state.mode)


def oracle_cdf(state: ParticleState, x: float, side: str = "left") -> float:
    """Cumulative mass in the solver's gauge: mass of positive-origin
    particles now left of x minus mass of nonpositive-origin particles now
    at or right of x.  side picks the limit at a particle position."""
    if side == "left":
        left = state.pos < x
    elif side == "right":
        left = state.pos <= x
    else:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    return float(state.mass_pos[left].sum() - state.mass_nonpos[~left].sum())


def velocity(state: ParticleState) -> np.ndarray:
    """Current particle velocities v0 * decay(t)."""
    return state.v0 * state.mode.decay(state.t)
