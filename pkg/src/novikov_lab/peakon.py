"""Peakons and multi-peakons of the Novikov equation on the line.

An n-peakon ``u = sum_j p_j exp(-|x - q_j|)`` evolves by
``dq_j/dt = u(q_j)^2`` and ``dp_j/dt = -u(q_j) u_x(q_j) p_j``. The slope at a
crest is taken as the average of the one-sided slopes (``sgn(0) = 0``).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "PeakonState",
    "PeakonTrajectory",
    "Collision",
    "NonFinitePeakon",
    "peakon_profile",
    "multipeakon_eval",
    "multipeakon_rhs",
    "multipeakon_solve",
    "multipeakon_h1",
    "write_peakon_csv",
]

COLLISION_GAP = 1e-8


class Collision(RuntimeError):
    def __init__(self, t: float, gap: float):
        self.t = t
        self.gap = gap
        super().__init__(f"peakons within {gap:.3g} of each other at t={t:.6g}")


class NonFinitePeakon(RuntimeError):
    pass


@dataclass(frozen=True)
class PeakonState:
    t: float
    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        q = np.atleast_1d(np.asarray(self.q, dtype=float)).copy()
        p = np.atleast_1d(np.asarray(self.p, dtype=float)).copy()
        if q.shape != p.shape or q.ndim != 1 or q.size < 1:
            raise ValueError("q and p must be equal-length 1-d arrays with n >= 1")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p)) and math.isfinite(self.t)):
            raise NonFinitePeakon("peakon state has non-finite entries")
        q.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)

    @property
    def n(self) -> int:
        return self.q.size

    def ordered(self) -> bool:
        return bool(np.all(np.diff(self.q) > 0) and np.all(self.p > 0))

    def min_gap(self) -> float:
        if self.n < 2:
            return math.inf
        return float(np.min(np.diff(np.sort(self.q))))


def peakon_profile(c: float, sign: int, x, t):
    """sign * sqrt(c) * exp(-|x - c t|)."""
    if not c > 0:
        raise ValueError(f"peakon speed must be positive, got {c}")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    return sign * math.sqrt(c) * np.exp(-np.abs(np.asarray(x) - c * t))


def multipeakon_eval(S: PeakonState, x):
    """Return (u, u_x) of the multi-peakon at x (scalar or array)."""
    x = np.asarray(x, dtype=float)
    d = x[..., None] - S.q
    e = S.p * np.exp(-np.abs(d))
    u = e.sum(axis=-1)
    ux = -(np.sign(d) * e).sum(axis=-1)
    return u, ux


def multipeakon_rhs(S: PeakonState):
    u, ux = multipeakon_eval(S, S.q)
    return u * u, -u * ux * S.p


def multipeakon_h1(S: PeakonState) -> float:
    """Closed form of the integral of u^2 + u_x^2: 2 sum_{j,k} p_j p_k exp(-|q_j - q_k|)."""
    gaps = np.abs(S.q[:, None] - S.q[None, :])
    return float(2.0 * S.p @ np.exp(-gaps) @ S.p)


@dataclass
class PeakonTrajectory:
    states: list[PeakonState]
    h1: np.ndarray
    events: list[str] = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    def __len__(self):
        return len(self.states)

    def __getitem__(self, i):
        return self.states[i]

    def __iter__(self):
        return iter(self.states)

    def h1_drift(self) -> float:
        return float(np.max(np.abs(self.h1 / self.h1[0] - 1.0)))


def multipeakon_solve(
    S0: PeakonState,
    T: float,
    dt: float,
    *,
    record_every: int = 1,
    raise_on_collision: bool = True,
) -> PeakonTrajectory:
    """Fixed-step RK4 for the 2n-dimensional peakon system."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    n = S0.n
    nsteps = max(1, math.ceil(T / dt - 1e-9))
    y = np.concatenate([S0.q, S0.p])
    t = S0.t

    def f(y):
        dq, dp = multipeakon_rhs(PeakonState(0.0, y[:n], y[n:]))
        return np.concatenate([dq, dp])

    states = [S0]
    h1 = [multipeakon_h1(S0)]
    events = []
    was_ordered = S0.ordered()
    for i in range(1, nsteps + 1):
        h = dt if i < nsteps else (S0.t + T) - t
        k1 = f(y)
        k2 = f(y + h / 2 * k1)
        k3 = f(y + h / 2 * k2)
        k4 = f(y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = S0.t + T if i == nsteps else t + h
        if not np.all(np.isfinite(y)):
            raise NonFinitePeakon(f"overflow at t={t:.6g}")
        S = PeakonState(t, y[:n], y[n:])
        gap = S.min_gap()
        if gap < COLLISION_GAP:
            events.append(f"collision t={t:.6g} gap={gap:.3g}")
            if raise_on_collision:
                raise Collision(t, gap)
        if was_ordered and not np.all(np.diff(S.q) > 0):
            events.append(f"ordering lost t={t:.6g}")
            was_ordered = False
        if i % record_every == 0 or i == nsteps:
            states.append(S)
            h1.append(multipeakon_h1(S))
    return PeakonTrajectory(states, np.array(h1), events)


def write_peakon_csv(traj: PeakonTrajectory, path) -> Path:
    """Columns: t, q1..qn, p1..pn, H1sq."""
    path = Path(path)
    n = traj.states[0].n
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"q{j + 1}" for j in range(n)] + [f"p{j + 1}" for j in range(n)] + ["H1sq"])
        for S, e in zip(traj.states, traj.h1):
            w.writerow([repr(float(S.t))] + [repr(float(v)) for v in S.q] + [repr(float(v)) for v in S.p] + [repr(float(e))])
    return path
