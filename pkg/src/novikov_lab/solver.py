"""Nonlocal right-hand sides, RK4 time stepping, transport and Picard solvers.

All three equations are written in transport form ``u_t + a(u) u_x = P(u)``
with ``a(u) = u^2`` for the Novikov equation and ``a(u) = u`` for
Camassa-Holm and Degasperis-Procesi. Nonlocal terms use the Helmholtz
inverse ``(1 - d_xx)^{-1}``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence, Union

import numpy as np
from scipy.optimize import brentq

from . import littlewood_paley as lp
from .spectral import (
    Grid,
    GridFunction,
    NonFiniteFieldError,
    _check_finite,
    _dealias_mask,
    _helmholtz_symbol,
    _ik,
)

__all__ = [
    "EquationKind",
    "SolveConfig",
    "Trajectory",
    "BlowUp",
    "CflViolation",
    "p1",
    "p2",
    "rhs",
    "step_rk4",
    "solve",
    "transport_solve",
    "verify_transport_estimate",
    "picard_iterate",
    "uniform_bound_check",
    "UniformBound",
    "h1_energy",
]


class EquationKind(str, enum.Enum):
    CH = "CH"
    DP = "DP"
    NE = "NE"

    @property
    def conserves_h1(self) -> bool:
        return self is not EquationKind.DP


class BlowUp(RuntimeError):
    """Slope exceeded the blow-up threshold, or the state became non-finite."""

    def __init__(self, t: float, max_slope: float, message: str = ""):
        self.t = t
        self.max_slope = max_slope
        super().__init__(message or f"blow-up at t={t:.6g}: max|u_x|={max_slope:.6g}")


class CflViolation(RuntimeError):
    def __init__(self, t: float, dt: float, dt_allowed: float):
        self.t = t
        self.dt = dt
        self.dt_allowed = dt_allowed
        super().__init__(f"dt={dt:.3g} exceeds CFL bound {dt_allowed:.3g} at t={t:.6g}")


@dataclass(frozen=True)
class SolveConfig:
    dt: float = 1e-3
    T: float = 1.0
    cfl_safety: float = 0.5
    dealias_fraction: float = 0.5
    blowup_slope_factor: float = 50.0
    blowup_slope_threshold: float | None = None
    record_every: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T}")
        if not 0 < self.cfl_safety <= 1:
            raise ValueError(f"cfl_safety must lie in (0, 1], got {self.cfl_safety}")
        if not 0 < self.dealias_fraction <= 1:
            raise ValueError(f"dealias_fraction must lie in (0, 1], got {self.dealias_fraction}")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ValueError(f"record_every must be a positive integer, got {self.record_every}")

    def with_(self, **changes) -> "SolveConfig":
        return replace(self, **changes)


@dataclass
class Trajectory:
    """Time-indexed states with per-time diagnostics.

    ``rates`` (time derivatives at the recorded times) are kept when every
    step is recorded; they enable cubic Hermite interpolation in time.
    """

    grid: Grid
    times: np.ndarray
    states: list[GridFunction]
    diagnostics: dict[str, np.ndarray] = field(default_factory=dict)
    rates: list[np.ndarray] | None = None
    truncated: bool = False

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if len(self.times) != len(self.states):
            raise ValueError("times and states differ in length")
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        for key, val in self.diagnostics.items():
            if len(val) != len(self.times):
                raise ValueError(f"diagnostic {key!r} has wrong length")

    def __len__(self):
        return len(self.times)

    @property
    def final(self) -> GridFunction:
        return self.states[-1]

    def at(self, t: float) -> GridFunction:
        return GridFunction(self.grid, self.interpolate(t))

    def interpolate(self, t: float) -> np.ndarray:
        """State at time t: cubic Hermite when rates are known, else linear."""
        times = self.times
        if len(times) == 1 or t <= times[0]:
            return self.states[0].values
        if t >= times[-1]:
            return self.states[-1].values
        i = int(np.searchsorted(times, t, side="right")) - 1
        t0, t1 = times[i], times[i + 1]
        h = t1 - t0
        s = (t - t0) / h
        a, b = self.states[i].values, self.states[i + 1].values
        if self.rates is None:
            return (1 - s) * a + s * b
        da, db = self.rates[i], self.rates[i + 1]
        h00 = 2 * s**3 - 3 * s**2 + 1
        h10 = s**3 - 2 * s**2 + s
        h01 = -2 * s**3 + 3 * s**2
        h11 = s**3 - s**2
        return h00 * a + h10 * h * da + h01 * b + h11 * h * db


# ---------------------------------------------------------------- right-hand sides


def _spectral_derivative(u: np.ndarray, grid: Grid) -> np.ndarray:
    return np.fft.irfft(np.fft.rfft(u) * _ik(grid), n=grid.N)


def _nonlocal_hat(u: np.ndarray, ux: np.ndarray, grid: Grid, eq: EquationKind) -> np.ndarray:
    ik = _ik(grid)
    hel = _helmholtz_symbol(grid)
    if eq is EquationKind.NE:
        return -0.5 * hel * np.fft.rfft(ux**3) - ik * hel * np.fft.rfft(1.5 * u * ux * ux + u**3)
    if eq is EquationKind.CH:
        return -ik * hel * np.fft.rfft(u * u + 0.5 * ux * ux)
    return -ik * hel * np.fft.rfft(1.5 * u * u)


def _rhs_array(u: np.ndarray, grid: Grid, eq: EquationKind, fraction: float) -> np.ndarray:
    n = grid.N
    ux = np.fft.irfft(np.fft.rfft(u) * _ik(grid), n=n)
    speed = u * u if eq is EquationKind.NE else u
    total = np.fft.rfft(-speed * ux) + _nonlocal_hat(u, ux, grid, eq)
    return np.fft.irfft(total * _dealias_mask(grid, fraction), n=n)


def _nonlocal_array(u: np.ndarray, grid: Grid, eq: EquationKind, fraction: float) -> np.ndarray:
    ux = np.fft.irfft(np.fft.rfft(u) * _ik(grid), n=grid.N)
    return np.fft.irfft(_nonlocal_hat(u, ux, grid, eq) * _dealias_mask(grid, fraction), n=grid.N)


def p1(u: GridFunction, fraction: float = 0.5) -> GridFunction:
    """-1/2 Lambda^{-2} (u_x)^3."""
    _check_finite(u.values)
    g = u.grid
    ux = _spectral_derivative(u.values, g)
    sym = -0.5 * _helmholtz_symbol(g) * _dealias_mask(g, fraction)
    return GridFunction(g, np.fft.irfft(np.fft.rfft(ux**3) * sym, n=g.N))


def p2(u: GridFunction, fraction: float = 0.5) -> GridFunction:
    """-d_x Lambda^{-2} (3/2 u u_x^2 + u^3)."""
    _check_finite(u.values)
    g = u.grid
    v = u.values
    ux = _spectral_derivative(v, g)
    sym = -_ik(g) * _helmholtz_symbol(g) * _dealias_mask(g, fraction)
    return GridFunction(g, np.fft.irfft(np.fft.rfft(1.5 * v * ux * ux + v**3) * sym, n=g.N))


def rhs(u: GridFunction, eq: EquationKind = EquationKind.NE, fraction: float = 0.5) -> GridFunction:
    """Time derivative u_t of the chosen equation in nonlocal form."""
    _check_finite(u.values)
    out = _rhs_array(u.values, u.grid, EquationKind(eq), fraction)
    if not np.all(np.isfinite(out)):
        raise BlowUp(math.nan, math.inf, "non-finite right-hand side")
    return GridFunction(u.grid, out)


def _rk4(f: Callable[[float, np.ndarray], np.ndarray], t: float, u: np.ndarray, dt: float):
    k1 = f(t, u)
    k2 = f(t + dt / 2, u + dt / 2 * k1)
    k3 = f(t + dt / 2, u + dt / 2 * k2)
    k4 = f(t + dt, u + dt * k3)
    return u + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4), k1


def step_rk4(u: GridFunction, dt: float, eq: EquationKind = EquationKind.NE, fraction: float = 0.5) -> GridFunction:
    """One classical RK4 step; each stage right-hand side is dealiased."""
    eq = EquationKind(eq)
    if dt == 0:
        return u
    new, _ = _rk4(lambda t, v: _rhs_array(v, u.grid, eq, fraction), 0.0, u.values, dt)
    if not np.all(np.isfinite(new)):
        raise BlowUp(dt, math.inf, f"non-finite state after one step of size {dt}")
    return GridFunction(u.grid, new)


def h1_energy(u: GridFunction) -> float:
    """Quadrature of u^2 + u_x^2 (the squared H^1 norm)."""
    ux = _spectral_derivative(u.values, u.grid)
    return float(np.sum(u.values**2 + ux**2) * u.grid.dx)


def _advection_speed(u: np.ndarray, eq: EquationKind) -> float:
    m = float(np.max(np.abs(u)))
    return m * m if eq is EquationKind.NE else m


def _step_schedule(T: float, dt: float) -> list[float]:
    n = max(1, math.ceil(T / dt - 1e-9))
    return [dt] * (n - 1) + [T - dt * (n - 1)]


def _diagnose(u: np.ndarray, grid: Grid, norms: Sequence[lp.SpaceParams]):
    ux = _spectral_derivative(u, grid)
    row = {
        "h1_sq": float(np.sum(u * u + ux * ux) * grid.dx),
        "max_u": float(np.max(np.abs(u))),
        "max_ux": float(np.max(np.abs(ux))),
    }
    for P in norms:
        row[_norm_label(P)] = lp.norm(GridFunction(grid, u), P)
    return row


def _norm_label(P: lp.SpaceParams) -> str:
    tag = {"besov": "B", "triebel_lizorkin": "F", "sobolev": "H"}[P.family.value]
    if P.family is lp.Family.SOBOLEV:
        return f"H^{P.s:g}"
    return f"{tag}^{P.s:g}_{P.p:g},{P.q:g}"


class _Recorder:
    def __init__(self, grid, norms, keep_rates):
        self.grid = grid
        self.norms = list(norms)
        self.times: list[float] = []
        self.states: list[GridFunction] = []
        self.rates: list[np.ndarray] | None = [] if keep_rates else None
        self.diag: dict[str, list[float]] = {}

    def add(self, t, u, rate=None):
        self.times.append(t)
        self.states.append(GridFunction(self.grid, u))
        if self.rates is not None:
            self.rates.append(rate)
        for key, val in _diagnose(u, self.grid, self.norms).items():
            self.diag.setdefault(key, []).append(val)

    def build(self, truncated=False) -> Trajectory:
        return Trajectory(
            self.grid,
            np.array(self.times),
            self.states,
            {k: np.array(v) for k, v in self.diag.items()},
            self.rates,
            truncated,
        )


def solve(
    u0: GridFunction,
    cfg: SolveConfig,
    eq: EquationKind = EquationKind.NE,
    *,
    norms: Sequence[lp.SpaceParams] = (),
    stop_on_blowup: bool = False,
    keep_rates: bool = False,
) -> Trajectory:
    """Integrate from u0 up to cfg.T with fixed-step RK4.

    Raises :class:`BlowUp` when ``max|u_x|`` exceeds the threshold (default
    ``blowup_slope_factor * max|u0_x|``) unless ``stop_on_blowup`` is set, in
    which case the trajectory is returned with ``truncated=True``.
    """
    eq = EquationKind(eq)
    _check_finite(u0.values)
    grid = u0.grid
    frac = cfg.dealias_fraction
    u = u0.values.copy()
    slope0 = float(np.max(np.abs(_spectral_derivative(u, grid))))
    threshold = cfg.blowup_slope_threshold
    if threshold is None:
        threshold = cfg.blowup_slope_factor * max(slope0, 1e-300) if slope0 > 0 else math.inf

    def f(_t, v):
        return _rhs_array(v, grid, eq, frac)

    rec = _Recorder(grid, norms, keep_rates)
    rec.add(0.0, u, f(0.0, u) if keep_rates else None)
    t = 0.0
    steps = _step_schedule(cfg.T, cfg.dt)
    for i, h in enumerate(steps, start=1):
        allowed = cfg.cfl_safety * grid.dx / max(1.0, _advection_speed(u, eq))
        if h > allowed * (1 + 1e-12):
            raise CflViolation(t, h, allowed)
        u, _ = _rk4(f, t, u, h)
        t = cfg.T if i == len(steps) else t + h
        if not np.all(np.isfinite(u)):
            if stop_on_blowup:
                return rec.build(truncated=True)
            raise BlowUp(t, math.inf, f"non-finite state at t={t:.6g}")
        slope = float(np.max(np.abs(_spectral_derivative(u, grid))))
        if slope > threshold:
            if stop_on_blowup:
                rec.add(t, u, f(t, u) if keep_rates else None)
                return rec.build(truncated=True)
            raise BlowUp(t, slope)
        if i % cfg.record_every == 0 or i == len(steps):
            rec.add(t, u, f(t, u) if keep_rates else None)
    return rec.build()


# ---------------------------------------------------------------- linear transport

TimeField = Union[None, GridFunction, Trajectory, Callable[[float], np.ndarray]]


def _as_time_function(source: TimeField, grid: Grid) -> Callable[[float], np.ndarray]:
    if source is None:
        zero = np.zeros(grid.N)
        return lambda t: zero
    if isinstance(source, GridFunction):
        vals = source.values
        return lambda t: vals
    if isinstance(source, Trajectory):
        return source.interpolate
    return lambda t: np.asarray(source(t), dtype=float)


def _transport_rate(f, v, g, grid, fraction):
    fx = np.fft.irfft(np.fft.rfft(f) * _ik(grid), n=grid.N)
    return np.fft.irfft(np.fft.rfft(g - v * fx) * _dealias_mask(grid, fraction), n=grid.N)


def transport_solve(
    velocity: TimeField,
    forcing: TimeField,
    f0: GridFunction,
    cfg: SolveConfig,
    *,
    norms: Sequence[lp.SpaceParams] = (),
    keep_rates: bool = False,
) -> Trajectory:
    """RK4 solution of ``f_t + v f_x = g`` with spectral ``d_x``.

    ``velocity`` and ``forcing`` may be ``None`` (zero), a fixed
    :class:`GridFunction`, a :class:`Trajectory` (interpolated in time) or a
    callable ``t -> samples``.
    """
    _check_finite(f0.values)
    grid = f0.grid
    vfun = _as_time_function(velocity, grid)
    gfun = _as_time_function(forcing, grid)
    frac = cfg.dealias_fraction

    def rate(t, f):
        return _transport_rate(f, vfun(t), gfun(t), grid, frac)

    rec = _Recorder(grid, norms, keep_rates)
    u = f0.values.copy()
    rec.add(0.0, u, rate(0.0, u) if keep_rates else None)
    t = 0.0
    steps = _step_schedule(cfg.T, cfg.dt)
    for i, h in enumerate(steps, start=1):
        speed = float(np.max(np.abs(vfun(t))))
        allowed = cfg.cfl_safety * grid.dx / max(1.0, speed)
        if h > allowed * (1 + 1e-12):
            raise CflViolation(t, h, allowed)
        u, _ = _rk4(rate, t, u, h)
        t = cfg.T if i == len(steps) else t + h
        if not np.all(np.isfinite(u)):
            raise BlowUp(t, math.inf, f"non-finite transport state at t={t:.6g}")
        if i % cfg.record_every == 0 or i == len(steps):
            rec.add(t, u, rate(t, u) if keep_rates else None)
    return rec.build()


def _trapezoid(y: np.ndarray, t: np.ndarray) -> float:
    if len(t) < 2:
        return 0.0
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(t)))


@dataclass(frozen=True)
class TransportEstimate:
    C: float
    lhs: float
    norm_f0: float
    forcing_integral: float
    V: float
    coupling_integral: float


def transport_estimate_terms(
    f0: GridFunction,
    velocity: TimeField,
    forcing: TimeField,
    P: lp.SpaceParams,
    cfg: SolveConfig,
) -> TransportEstimate:
    """Solve the transport problem and fit the constant of the a-priori bound.

    The bound is ``||f(t)|| <= e^{C V} ||f0|| + int ||g|| + C int (||f|| ||v_x||_inf
    + ||v_x||_{s-1} ||f_x||_inf)`` with ``V = int ||v_x||_inf``; all norms are
    ``P`` and ``P.with_s(s-1)``. ``C`` is the smallest non-negative value that
    makes it hold at the final time.
    """
    grid = f0.grid
    traj = transport_solve(velocity, forcing, f0, cfg)
    vfun = _as_time_function(velocity, grid)
    gfun = _as_time_function(forcing, grid)
    Pm1 = P.with_s(P.s - 1)
    vx_inf, vx_low, f_norm, fx_inf, g_norm = [], [], [], [], []
    for t, f in zip(traj.times, traj.states):
        v = vfun(t)
        vx = _spectral_derivative(v, grid)
        vx_inf.append(np.max(np.abs(vx)))
        vx_low.append(lp.norm(GridFunction(grid, vx), Pm1))
        f_norm.append(lp.norm(f, P))
        fx_inf.append(np.max(np.abs(_spectral_derivative(f.values, grid))))
        g_norm.append(lp.norm(GridFunction(grid, gfun(t)), P))
    ts = traj.times
    V = _trapezoid(np.array(vx_inf), ts)
    G = _trapezoid(np.array(g_norm), ts)
    K = _trapezoid(np.array(f_norm) * np.array(vx_inf) + np.array(vx_low) * np.array(fx_inf), ts)
    lhs = f_norm[-1]
    n0 = f_norm[0]

    def excess(C):
        return lhs - (math.exp(C * V) * n0 + G + C * K)

    if excess(0.0) <= 0:
        C = 0.0
    else:
        hi = 1.0
        while excess(hi) > 0:
            hi *= 2
            if hi > 1e12:
                C = math.inf
                break
        else:
            C = brentq(excess, 0.0, hi, xtol=1e-14, rtol=1e-12)
    return TransportEstimate(C, lhs, n0, G, V, K)


def verify_transport_estimate(f0, velocity, forcing, P: lp.SpaceParams, cfg: SolveConfig) -> float:
    """Smallest C >= 0 for which the transport bound holds at the final time."""
    return transport_estimate_terms(f0, velocity, forcing, P, cfg).C


# ---------------------------------------------------------------- Picard iteration


@dataclass
class PicardResult:
    iterates: list[Trajectory]
    increments: list[float]
    increment_space: lp.SpaceParams

    def __iter__(self):
        return iter((self.iterates, self.increments))


def picard_iterate(
    u0: GridFunction,
    n_max: int,
    cfg: SolveConfig,
    *,
    increment_space: lp.SpaceParams | None = None,
) -> PicardResult:
    """Iterates ``u^{n+1}_t + (u^n)^2 u^{n+1}_x = P(u^n)``, ``u^{n+1}(0) = S_{n+1} u0``.

    ``u^0 = 0``. Each iterate is recorded at every step together with its time
    derivative, and the next iterate reads ``u^n`` at the RK stage times
    through cubic Hermite interpolation. Increments are
    ``b_n = ||u^{n+1}(T) - u^n(T)||`` in ``B^{s-1}_{p,inf}`` (default s=2, p=2).
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    grid = u0.grid
    frac = cfg.dealias_fraction
    if increment_space is None:
        increment_space = lp.SpaceParams.besov(1.0, 2.0, math.inf)
    cfg = cfg.with_(record_every=1)
    iterates: list[Trajectory] = []
    prev: Trajectory | None = None
    for n in range(0, n_max):
        data = lp.low_freq(n + 1, u0)
        if prev is None:
            traj = transport_solve(None, None, data, cfg, keep_rates=True)
        else:
            src = prev

            def velocity(t, src=src):
                w = src.interpolate(t)
                return w * w

            def forcing(t, src=src):
                return _nonlocal_array(src.interpolate(t), grid, EquationKind.NE, frac)

            traj = transport_solve(velocity, forcing, data, cfg, keep_rates=True)
        iterates.append(traj)
        prev = traj
    increments = [
        lp.norm(iterates[n + 1].final - iterates[n].final, increment_space) for n in range(n_max - 1)
    ]
    return PicardResult(iterates, increments, increment_space)


@dataclass(frozen=True)
class UniformBound:
    holds: bool
    C: float
    margin: float

    def __bool__(self):
        return self.holds


def _bound_ok(C, pairs, a2) -> bool:
    for ratio, t in pairs:
        d = 1.0 - 4.0 * C**3 * a2 * t
        if d <= 0 or ratio > C / math.sqrt(d) * (1 + 1e-12):
            return False
    return True


def uniform_bound_check(
    trajectories: Sequence[Trajectory],
    u0: GridFunction,
    P: lp.SpaceParams,
    *,
    every: int = 1,
) -> UniformBound:
    """Fit the smallest C >= 1 with ``||u^n(t)|| <= C a / sqrt(1 - 4 C^3 a^2 t)``, a = ||u0||.

    The right side grows with C, so feasibility is monotone on the admissible
    range ``4 C^3 a^2 T < 1`` and bisection finds the minimum. ``margin`` is
    ``1 - 4 C^3 a^2 T``.
    """
    a = lp.norm(u0, P)
    if a == 0:
        return UniformBound(True, 1.0, 1.0)
    T = max(float(tr.times[-1]) for tr in trajectories)
    a2 = a * a
    pairs = []
    for tr in trajectories:
        idx = sorted(set(range(0, len(tr), every)) | {len(tr) - 1})
        for i in idx:
            pairs.append((lp.norm(tr.states[i], P) / a, float(tr.times[i])))
    c_max = (1.0 / (4.0 * a2 * T)) ** (1.0 / 3.0) * (1 - 1e-9)
    if c_max < 1.0 or not _bound_ok(c_max, pairs, a2):
        return UniformBound(False, math.nan, 1.0 - 4.0 * a2 * T)
    lo, hi = 1.0, c_max
    if _bound_ok(lo, pairs, a2):
        hi = lo
    while hi - lo > 1e-12 * hi:
        mid = 0.5 * (lo + hi)
        if _bound_ok(mid, pairs, a2):
            hi = mid
        else:
            lo = mid
    return UniformBound(True, hi, 1.0 - 4.0 * hi**3 * a2 * T)
