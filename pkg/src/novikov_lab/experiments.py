"""Headline experiments on the Novikov data-to-solution map.

Every experiment returns a :class:`Report` whose ``cases`` become CSV rows
and whose ``constants``/``checks`` go into the JSON summary.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from . import littlewood_paley as lp
from .data import BumpProfile, build_fn, build_gn, high_frequency, make_bump_profile, mollified_peakon
from .solver import (
    BlowUp,
    EquationKind,
    SolveConfig,
    h1_energy,
    p1,
    p2,
    picard_iterate,
    solve,
    uniform_bound_check,
)
from .spectral import Grid, GridFunction, dealias, derivative

__all__ = [
    "Report",
    "NudExperimentConfig",
    "config_hash",
    "flow_map",
    "evolve_to_times",
    "initial_velocity",
    "interaction_norm",
    "loglog_fit",
    "taylor_flow_experiment",
    "nonuniform_dependence_experiment",
    "continuous_dependence_experiment",
    "iteration_convergence_experiment",
    "crest_position",
    "PeakonTravel",
    "peakon_travel",
]


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return v
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def config_hash(config: dict) -> str:
    blob = json.dumps(_clean(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class Report:
    experiment: str
    config: dict
    cases: list[dict] = field(default_factory=list)
    constants: dict = field(default_factory=dict)
    checks: dict[str, bool] = field(default_factory=dict)
    seed: int | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    @property
    def config_hash(self) -> str:
        return config_hash(self.config)

    def summary(self) -> dict:
        return _clean(
            {
                "experiment": self.experiment,
                "passed": self.passed,
                "constants": self.constants,
                "checks": self.checks,
                "seed": self.seed,
                "config_hash": self.config_hash,
                "config": self.config,
                "notes": self.notes,
            }
        )

    def write(self, outdir) -> tuple[Path, Path]:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        csv_path = outdir / f"{self.experiment}.csv"
        cols: list[str] = []
        for row in self.cases:
            for key in row:
                if key not in cols:
                    cols.append(key)
        cols.append("config_hash")
        h = self.config_hash
        with csv_path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for row in self.cases:
                w.writerow([_fmt(row.get(c, "")) for c in cols[:-1]] + [h])
        json_path = outdir / f"{self.experiment}_summary.json"
        json_path.write_text(json.dumps(self.summary(), indent=2, sort_keys=True) + "\n")
        return csv_path, json_path


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def loglog_fit(x, y) -> tuple[float, float, float]:
    """Least-squares slope, intercept and R^2 of log y against log x."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


# ---------------------------------------------------------------- flow map


def flow_map(
    u0: GridFunction, t: float, solver: SolveConfig, eq: EquationKind = EquationKind.NE, *, min_steps: int = 10
) -> GridFunction:
    """S_t(u0): the solution at time t, taking at least ``min_steps`` steps."""
    if t < 0:
        raise ValueError("t must be non-negative")
    if t > solver.T * (1 + 1e-12):
        raise ValueError(f"t={t} lies beyond the solver horizon T={solver.T}")
    if t == 0:
        return u0
    cfg = solver.with_(T=t, dt=min(solver.dt, t / min_steps), record_every=10**9)
    return solve(u0, cfg, eq).final


def evolve_to_times(u0: GridFunction, times: Sequence[float], solver: SolveConfig, eq=EquationKind.NE) -> list[GridFunction]:
    """States at each requested time (sorted ascending), continuing one run."""
    out = []
    t_prev, u = 0.0, u0
    for t in times:
        if t < t_prev:
            raise ValueError("times must be ascending")
        if t > t_prev:
            u = solve(u, solver.with_(T=t - t_prev, record_every=10**9), eq).final
        out.append(u)
        t_prev = t
    return out


def initial_velocity(u0: GridFunction, fraction: float = 0.5) -> GridFunction:
    """v0 = u0^2 u0_x - P1(u0) - P2(u0), so that S_t(u0) = u0 - t v0 + O(t^2)."""
    ux = derivative(u0)
    return dealias(u0 * u0 * ux, fraction) - p1(u0, fraction) - p2(u0, fraction)


def interaction_norm(n: int, s: float, p: float, phi: BumpProfile, *, snap: bool = True) -> float:
    """||g_n^2 d_x f_n|| in F^s_{p,inf}."""
    f = build_fn(n, s, phi, snap=snap)
    g = build_gn(n, phi)
    return lp.norm(g * g * derivative(f), lp.SpaceParams.tl(s, p, math.inf))


def _space(s, p, r) -> lp.SpaceParams:
    return lp.SpaceParams.tl(s, p, r)


# ---------------------------------------------------------------- Taylor flow


def taylor_flow_experiment(
    u0: GridFunction,
    s: float,
    p: float,
    r: float,
    t_list: Sequence[float],
    solver: SolveConfig,
    *,
    slope_range=(1.9, 2.1),
    min_r2: float = 0.99,
    min_steps: int = 20,
) -> Report:
    """E(t) = ||S_t(u0) - u0 + t v0||_{F^s_{p,r}} and its log-log slope."""
    P = _space(s, p, r)
    t_list = sorted(float(t) for t in t_list)
    grid = u0.grid
    report = Report(
        "taylor",
        {"grid": {"L": grid.L, "N": grid.N}, "space": {"s": s, "p": p, "r": r},
         "t_list": t_list, "min_steps": min_steps, "solver": _solver_dict(solver)},
    )
    v0 = initial_velocity(u0, solver.dealias_fraction)
    ts, errs = [], []
    for t in t_list:
        try:
            ut = flow_map(u0, t, solver, min_steps=min_steps)
        except BlowUp as exc:
            report.notes.append(f"blow-up before t={t}: {exc}")
            report.constants["truncated"] = True
            break
        e = lp.norm(ut - u0 + t * v0, P)
        ts.append(t)
        errs.append(e)
        report.cases.append({"t": t, "E": e, "E_over_t": e / t, "E_over_t2": e / t**2})
    report.constants.setdefault("truncated", False)
    if len(ts) >= 2 and all(e > 0 for e in errs):
        slope, _, r2 = loglog_fit(ts, errs)
        report.constants.update(slope=slope, r2=r2)
        report.checks["slope_in_range"] = slope_range[0] <= slope <= slope_range[1]
        report.checks["r2"] = r2 >= min_r2
        report.checks["E_over_t_shrinks"] = errs[0] / ts[0] < errs[-1] / ts[-1]
    else:
        # identically zero error (e.g. a constant datum) is the exact steady case
        report.constants.update(slope=math.nan, r2=math.nan, max_E=max(errs, default=0.0))
        report.checks["zero_error"] = all(e <= 1e-14 for e in errs) and len(errs) == len(t_list)
    return report


def _solver_dict(cfg: SolveConfig) -> dict:
    return {"dt": cfg.dt, "T": cfg.T, "cfl_safety": cfg.cfl_safety, "dealias_fraction": cfg.dealias_fraction}


# ---------------------------------------------------------------- non-uniform dependence


@dataclass(frozen=True)
class NudExperimentConfig:
    s: float = 2.0
    p: float = 2.0
    r: float = 2.0
    n_list: tuple[int, ...] = (5, 6, 7, 8)
    t_eval: tuple[float, ...] = (0.05, 0.1)
    L: float = 12 * math.pi
    N: int = 2**16
    solver: SolveConfig = SolveConfig(dt=4.5e-4, T=0.1)
    floor_factor: float = 0.3
    floor: float | None = None

    def __post_init__(self):
        grid = Grid(self.L, self.N)
        cutoff = self.solver.dealias_fraction * grid.k_nyquist
        top = high_frequency(max(self.n_list))
        if not top < cutoff:
            raise ValueError(
                f"carrier (17/12) 2^{max(self.n_list)} = {top:.4g} is not below the dealias cutoff {cutoff:.4g}"
            )
        if any(t < 0 for t in self.t_eval):
            raise ValueError("evaluation times must be non-negative")

    @property
    def grid(self) -> Grid:
        return Grid(self.L, self.N)


def nonuniform_dependence_experiment(cfg: NudExperimentConfig) -> Report:
    """Distances between S_t(f_n + g_n) and S_t(f_n) across dyadic scales n.

    ``d0(n) = ||g_n||`` shrinks like 2^{-n/2} while ``d(n, t)`` stays above
    ``floor * t``. ``d_high`` removes the low frequencies (below S_{n-1}),
    isolating the part of the separation produced by the interaction term.
    """
    grid = cfg.grid
    P = _space(cfg.s, cfg.p, cfg.r)
    phi = make_bump_profile(grid)
    phi_norm = lp.norm(phi.phi, P)
    times = sorted(set(float(t) for t in cfg.t_eval))
    report = Report(
        "nud",
        {"grid": {"L": grid.L, "N": grid.N}, "space": {"s": cfg.s, "p": cfg.p, "r": cfg.r},
         "n_list": list(cfg.n_list), "t_eval": times, "solver": _solver_dict(cfg.solver),
         "floor_factor": cfg.floor_factor, "floor": cfg.floor},
    )
    M = {n: interaction_norm(n, cfg.s, cfg.p, phi) for n in cfg.n_list}
    M_hat = min(M.values())
    floor = cfg.floor if cfg.floor is not None else cfg.floor_factor * M_hat
    d0s = {}
    sep_ok = True
    sep_high_ok = True
    zero_ok = True
    d0_bound_ok = True
    for n in cfg.n_list:
        f = build_fn(n, cfg.s, phi, dealias_fraction=cfg.solver.dealias_fraction)
        g = build_gn(n, phi)
        u0 = f + g
        d0 = lp.norm(u0 - f, P)
        d0s[n] = d0
        d0_bound_ok &= d0 <= 2.0 ** (-n / 2) * phi_norm * (1 + 1e-10)
        a = evolve_to_times(u0, times, cfg.solver)
        b = evolve_to_times(f, times, cfg.solver)
        for t, ua, ub in zip(times, a, b):
            w = ua - ub
            d = lp.norm(w, P)
            d_high = lp.norm(w - lp.low_freq(n - 1, w), P)
            row = {"n": n, "t": t, "d0": d0, "d": d, "d_high": d_high, "M_n": M[n],
                   "d_over_t": d / t if t > 0 else math.nan,
                   "d_high_over_t": d_high / t if t > 0 else math.nan}
            report.cases.append(row)
            if t == 0:
                zero_ok &= abs(d - d0) <= 1e-14 * max(d0, 1e-300)
            else:
                sep_ok &= d >= floor * t
                sep_high_ok &= d_high >= floor * t
    ns = list(cfg.n_list)
    ratios = [d0s[b] / d0s[a] for a, b in zip(ns, ns[1:]) if b == a + 1]
    slope, _, r2 = loglog_fit([2.0**n for n in ns], [d0s[n] for n in ns]) if len(ns) > 1 else (math.nan, 0, 1.0)
    report.constants.update(
        M_hat=M_hat, floor=floor, phi_norm=phi_norm, d0_decay_slope=slope, d0_decay_r2=r2,
        d0_step_ratios=ratios, L=grid.L, N=grid.N,
    )
    report.checks["d0_step_ratio_is_2^-1/2"] = all(abs(q - 2**-0.5) <= 1e-10 for q in ratios)
    report.checks["d0_below_bound"] = bool(d0_bound_ok)
    report.checks["d_at_least_floor_t"] = bool(sep_ok)
    report.checks["d_high_at_least_floor_t"] = bool(sep_high_ok)
    report.checks["d_at_t0_equals_d0"] = bool(zero_ok)
    report.checks["d0_decay_fit_r2"] = r2 >= 0.99
    report.checks["interaction_positive"] = M_hat > 0
    return report


# ---------------------------------------------------------------- continuous dependence


def continuous_dependence_experiment(
    u0: GridFunction,
    deltas: Sequence[float],
    s: float,
    p: float,
    r: float,
    solver: SolveConfig,
    *,
    perturbation: GridFunction | None = None,
    truncations: Sequence[int] = (4, 5, 6, 7, 8, 9, 10),
    sample_every: int = 16,
    ratio_bound: float | None = None,
) -> Report:
    """Distances sup_t ||S_t(u0) - S_t(u0 + delta z)|| and the truncation variant.

    The truncation variant compares ``sup_t ||S_t(S_N u0) - S_t(u0)||`` with
    ``||S_N u0 - u0||`` over N.
    """
    P = _space(s, p, r)
    grid = u0.grid
    deltas = [float(d) for d in deltas]
    if any(d < 0 for d in deltas) or any(a <= b for a, b in zip(deltas, deltas[1:])):
        raise ValueError("deltas must be non-negative and strictly decreasing")
    if perturbation is None:
        perturbation = grid.sample(lambda x: np.exp(-((x - 1.0) ** 2)))
    cfg = solver.with_(record_every=sample_every)
    report = Report(
        "continuity",
        {"grid": {"L": grid.L, "N": grid.N}, "space": {"s": s, "p": p, "r": r},
         "deltas": deltas, "truncations": list(truncations), "solver": _solver_dict(solver)},
    )
    base = solve(u0, cfg)

    def sup_distance(traj):
        return max(lp.norm(a - b, P) for a, b in zip(base.states, traj.states))

    dists = []
    for d in deltas:
        z_norm = lp.norm(perturbation, P)
        if d == 0:
            dist = dist_T = 0.0
        else:
            traj = solve(u0 + d * perturbation, cfg)
            dist, dist_T = sup_distance(traj), lp.norm(traj.final - base.final, P)
        dists.append(dist)
        init = d * z_norm
        report.cases.append({"variant": "perturbation", "delta": d, "N": "", "initial": init, "distance": dist,
                             "ratio": dist / init if d > 0 else 0.0, "distance_T": dist_T,
                             "ratio_T": dist_T / init if d > 0 else 0.0})
    trunc_ratios = []
    for N in truncations:
        v0 = lp.low_freq(N, u0)
        init = lp.norm(v0 - u0, P)
        traj = solve(v0, cfg)
        dist = sup_distance(traj)
        dist_T = lp.norm(traj.final - base.final, P)
        ratio = dist / init if init > 0 else 0.0
        trunc_ratios.append(ratio)
        report.cases.append({"variant": "truncation", "delta": "", "N": N, "initial": init, "distance": dist,
                             "ratio": ratio, "distance_T": dist_T, "ratio_T": dist_T / init if init > 0 else 0.0})
    positive = [x for x in deltas if x > 0]
    report.constants.update(
        max_truncation_ratio=max(trunc_ratios, default=0.0),
        min_truncation_ratio=min(trunc_ratios, default=0.0),
        max_truncation_ratio_T=max((c["ratio_T"] for c in report.cases if c["variant"] == "truncation"), default=0.0),
        lipschitz_ratios=[c["ratio"] for c in report.cases if c["variant"] == "perturbation"],
    )
    report.checks["monotone_in_delta"] = all(a > b for a, b in zip(dists, dists[1:]))
    if len(positive) >= 2:
        # distance shrinks at least in proportion to delta, up to a factor 10
        report.checks["distance_to_zero"] = dists[len(positive) - 1] <= 10 * dists[0] * positive[-1] / positive[0]
    if ratio_bound is not None:
        report.checks["truncation_ratio_bounded"] = max(trunc_ratios, default=0.0) <= ratio_bound
    return report


# ---------------------------------------------------------------- Picard iteration


def iteration_convergence_experiment(
    u0: GridFunction,
    n_max: int,
    s: float,
    p: float,
    solver: SolveConfig,
    *,
    rho: float = 0.6,
    burn_in: int = 3,
    noise_floor: float = 1e-12,
) -> Report:
    """Picard increments b_n = ||u^{n+1}(T) - u^n(T)|| in B^{s-1}_{p,inf}.

    Ratios b_{n+1}/b_n are checked for n >= burn_in while b_n stays above
    ``noise_floor * ||u0||_{B^{s-1}_{p,inf}}`` (below that both are round-off).
    """
    if n_max < 3:
        raise ValueError("n_max must be >= 3")
    grid = u0.grid
    B = lp.SpaceParams.besov(s - 1, p, math.inf)
    report = Report(
        "picard",
        {"grid": {"L": grid.L, "N": grid.N}, "space": {"s": s, "p": p}, "n_max": n_max,
         "rho": rho, "burn_in": burn_in, "solver": _solver_dict(solver)},
    )
    res = picard_iterate(u0, n_max, solver, increment_space=B)
    b = res.increments
    scale = lp.norm(u0, B)
    floor = noise_floor * scale
    ref = solve(u0, solver.with_(record_every=10**9)).final
    for i, val in enumerate(b):
        n = i + 1
        ratio = b[i + 1] / val if i + 1 < len(b) and val > 0 else math.nan
        report.cases.append({"n": n, "b_n": val, "ratio_next": ratio,
                             "dist_to_solve": lp.norm(res.iterates[i].final - ref, B)})
    # ratio b_{n+1}/b_n, 1-based n, skipped once b_n is at the round-off floor
    checked = [(n, b[n] / b[n - 1]) for n in range(burn_in, len(b)) if b[n - 1] > floor]
    dist_final = lp.norm(res.iterates[-1].final - ref, B)
    positive = [(i + 1, v) for i, v in enumerate(b) if v > floor]
    rate = math.nan
    if len(positive) >= 2:
        ns, vs = zip(*positive)
        rate = float(np.exp(np.polyfit(ns, np.log(vs), 1)[0]))
    ub = uniform_bound_check(res.iterates, u0, lp.SpaceParams.tl(s, p, 2.0), every=max(1, len(res.iterates[0]) // 20))
    report.constants.update(
        increments=b, geometric_rate=rate, dist_final_to_solve=dist_final,
        uniform_bound_C=ub.C, uniform_bound_margin=ub.margin, max_checked_ratio=max((r for _, r in checked), default=0.0),
    )
    if u0.values.any():
        report.checks["ratio_below_rho"] = all(r <= rho for _, r in checked)
        report.checks["final_matches_solve"] = dist_final <= 2 * b[-1] if b[-1] > floor else dist_final <= 2 * floor + 1e-12
        report.checks["uniform_bound_holds"] = bool(ub.holds)
    else:
        report.checks["all_zero"] = all(v == 0 for v in b)
    return report


# ---------------------------------------------------------------- peakon travel


def crest_position(u: GridFunction) -> float:
    """Location of the global maximum, refined to a root of the trigonometric interpolant of u_x."""
    ux = derivative(u)
    i = int(np.argmax(u.values))
    x, h = u.grid.x[i], u.grid.dx
    return brentq(lambda y: float(ux.evaluate([y])[0]), x - 2 * h, x + 2 * h, xtol=1e-13)


@dataclass(frozen=True)
class PeakonTravel:
    sigma: float
    c: float
    speed: float
    matched_speed: float

    @property
    def error(self) -> float:
        """Relative gap between the measured crest speed and c."""
        return abs(self.speed - self.c) / self.c

    @property
    def matched_error(self) -> float:
        """Relative gap to the speed of the ODE peakon carrying the same H^1 energy."""
        return abs(self.speed - self.matched_speed) / self.matched_speed


def peakon_travel(
    grid: Grid, c: float, sigma: float, T: float, *, center: float = 0.0, cfl: float = 0.4
) -> PeakonTravel:
    """Mean crest speed of the NE solution from a mollified sqrt(c) e^{-|x|} over [0, T].

    A single ODE peakon with amplitude p has energy 2 p^2 and speed p^2, so the
    energy-matched speed is ||u0||_{H^1}^2 / 2.
    """
    u0 = mollified_peakon(grid, c, sigma, center=center)
    cfg = SolveConfig(dt=cfl * grid.dx / c, T=T, record_every=10**9)
    uT = solve(u0, cfg, EquationKind.NE).final
    speed = (crest_position(uT) - crest_position(u0)) / T
    return PeakonTravel(sigma, c, speed, h1_energy(u0) / 2)
