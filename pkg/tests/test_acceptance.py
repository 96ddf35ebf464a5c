"""Acceptance criteria 1-11, each printed as one PASS/FAIL line."""

import math
import time

import numpy as np
import pytest
from scipy.integrate import quad

from novikov_lab import littlewood_paley as lp
from novikov_lab.cli import default_config_path
from novikov_lab.config import build_field, load_config
from novikov_lab.data import build_fn, build_gn, gaussian, make_bump_profile
from novikov_lab.experiments import (
    NudExperimentConfig,
    iteration_convergence_experiment,
    nonuniform_dependence_experiment,
    peakon_travel,
    taylor_flow_experiment,
)
from novikov_lab.inequalities import (
    HARNESS_LEMMAS,
    product_law_ratios,
    random_band_limited,
    run_harness,
    verify_commutator,
    verify_moser,
)
from novikov_lab.peakon import PeakonState, multipeakon_eval, multipeakon_h1, multipeakon_solve
from novikov_lab.regression import (
    FS_HS_BRACKET,
    HARNESS_FACTOR,
    HARNESS_MAX,
    HARNESS_SEED,
    NUD_FLOOR,
    ORACLE_FAMILY_SEED,
)
from novikov_lab.solver import SolveConfig, solve
from novikov_lab.spectral import Grid, helmholtz_inverse, linf_norm


def verdict(n, ok, detail=""):
    print(f"\nACCEPTANCE {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, f"criterion {n}: {detail}"


def test_criterion_01_partition_of_unity():
    t0 = time.perf_counter()
    C = lp.make_cutoffs()
    xi = np.linspace(0.0, 100.0, 1000)
    total = C.theta(xi) + sum(C.phi(2.0**-j * xi) for j in range(13))
    err = float(np.max(np.abs(total - 1)))
    elapsed = time.perf_counter() - t0
    verdict(1, err < 1e-12 and elapsed < 1.0, f"max error {err:.2e}, {elapsed:.3f} s")


def test_criterion_02_helmholtz_oracle():
    t0 = time.perf_counter()
    L = 32.0
    g = Grid(L, 2**13)

    def bump(y):
        return math.exp(-y * y)

    def kernel(d):
        d = abs(d) % (2 * L)
        return math.cosh(L - d) / (2 * math.sinh(L))

    # the bump is below 1e-60 outside [-12, 12]
    ref = np.array([
        quad(lambda y, x=x: kernel(x - y) * bump(y), -12.0, 12.0, points=[x] if abs(x) < 12 else None,
             limit=200, epsabs=1e-15, epsrel=1e-13)[0]
        for x in g.x
    ])
    u = helmholtz_inverse(g.sample(lambda x: np.exp(-x * x))).values
    rel = float(np.linalg.norm(u - ref) / np.linalg.norm(ref))
    elapsed = time.perf_counter() - t0
    verdict(2, rel < 1e-8 and elapsed < 5.0, f"relative L2 error {rel:.2e}, {elapsed:.2f} s")


def test_criterion_03_h1_conservation():
    t0 = time.perf_counter()
    g = Grid(32.0, 2**13)
    traj = solve(gaussian(g, 1.0, 1.0), SolveConfig(dt=0.003, T=1.0, record_every=10))
    h1 = np.asarray(traj.diagnostics["h1_sq"])
    drift = float(np.max(np.abs(h1 / h1[0] - 1)))
    elapsed = time.perf_counter() - t0
    verdict(3, drift < 1e-6 and elapsed < 60, f"relative H1 drift {drift:.2e}, {elapsed:.1f} s")


def test_criterion_04_peakon_travel():
    t0 = time.perf_counter()
    traj = multipeakon_solve(PeakonState(0.0, [0.25], [1.0]), T=2.0, dt=0.01)
    ode_exact = all(S.p[0] == 1.0 and abs(S.q[0] - 0.25 - S.t) <= 1e-12 for S in traj)

    g = Grid(16.0, 2**13)
    runs = {s: peakon_travel(g, 1.0, s, T=2.0, center=-4.0) for s in (0.1, 0.05, 0.025)}
    raw = [runs[s].error for s in (0.1, 0.05, 0.025)]
    decreasing = raw[0] > raw[1] > raw[2]
    # context only: the mollified datum carries less energy than the sharp peakon
    extrapolated = 2 * runs[0.025].speed - runs[0.05].speed
    elapsed = time.perf_counter() - t0
    ok = ode_exact and raw[1] < 0.01 and decreasing and elapsed < 120
    verdict(4, ok, f"ODE exact {ode_exact}; crest speed error vs c at sigma=0.05 {raw[1]:.4f} (limit 0.01); "
                   f"errors at sigma 0.1/0.05/0.025: {raw[0]:.4f} {raw[1]:.4f} {raw[2]:.4f} (decreasing {decreasing}); "
                   f"energy-matched ODE speed error {runs[0.05].matched_error:.1e}; "
                   f"sigma->0 extrapolated error {abs(extrapolated - 1):.1e}; {elapsed:.1f} s")


def test_criterion_05_multipeakon_h1():
    S = PeakonState(0.0, [-2.0, 2.0], [1.0, 0.5])

    def density(x):
        u, ux = multipeakon_eval(S, x)
        return float(u**2 + ux**2)

    pts = [-60.0, -2.0, 2.0, 60.0]
    integral = sum(quad(density, a, b, epsabs=1e-14, epsrel=1e-13)[0] for a, b in zip(pts, pts[1:]))
    quad_err = abs(integral - multipeakon_h1(S)) / multipeakon_h1(S)
    drift = multipeakon_solve(S, T=5.0, dt=1e-3).h1_drift()
    verdict(5, quad_err < 1e-8 and drift < 1e-8, f"closed form vs quadrature {quad_err:.2e}, drift over T=5 {drift:.2e}")


def test_criterion_06_taylor_exponent():
    t0 = time.perf_counter()
    cfg = load_config(default_config_path("taylor"))
    sec = cfg.section("taylor")
    grid = cfg.grid.build()
    t_list = list(sec.t_list)
    rep = taylor_flow_experiment(build_field(sec.initial, grid), cfg.space.s, cfg.space.p, cfg.space.r,
                                 t_list, cfg.solver.build(), min_steps=sec.min_steps)
    slope, r2 = rep.constants["slope"], rep.constants["r2"]
    elapsed = time.perf_counter() - t0
    ok = (min(t_list) == pytest.approx(1e-3) and max(t_list) == pytest.approx(0.1)
          and 1.9 <= slope <= 2.1 and r2 >= 0.99 and elapsed < 300)
    verdict(6, ok, f"slope {slope:.4f}, R^2 {r2:.6f}, {elapsed:.1f} s")


def test_criterion_07_norm_scalings():
    g = Grid(12 * math.pi, 2**16)
    phi = make_bump_profile(g)
    s = 2.0
    worst = 0.0
    for sigma in (s - 1, s, s + 1):
        P = lp.SpaceParams.tl(sigma, 2, 2)
        norms = [lp.norm(build_fn(n, s, phi), P) for n in range(5, 10)]
        for a, b in zip(norms, norms[1:]):
            worst = max(worst, abs(b / a / 2.0 ** (sigma - s) - 1))
    P = lp.SpaceParams.tl(s, 2, 2)
    g_norms = [lp.norm(build_gn(n, phi), P) for n in range(5, 10)]
    g_err = max(abs(b / a - 2**-0.5) for a, b in zip(g_norms, g_norms[1:]))
    verdict(7, worst <= 0.2 and g_err <= 1e-10, f"worst f_n ratio deviation {worst:.2e}, g_n ratio error {g_err:.2e}")


def test_criterion_08_nonuniform_dependence():
    t0 = time.perf_counter()
    cfg = NudExperimentConfig(n_list=(5, 6, 7, 8), t_eval=(0.05, 0.1), L=12 * math.pi, N=2**16,
                              solver=SolveConfig(dt=4.5e-4, T=0.1), floor=NUD_FLOOR)
    rep = nonuniform_dependence_experiment(cfg)
    ratios = rep.constants["d0_step_ratios"]
    exact_decay = all(abs(r - 2**-0.5) <= 1e-10 for r in ratios)
    margins = [c["d"] / (NUD_FLOOR * c["t"]) for c in rep.cases]
    elapsed = time.perf_counter() - t0
    ok = NUD_FLOOR > 0 and exact_decay and min(margins) >= 1.0 and elapsed < 1800
    verdict(8, ok, f"d0 ratios {[f'{r:.12f}' for r in ratios]}, min d/(floor t) {min(margins):.3f}, "
                   f"floor {NUD_FLOOR:.4g}, {elapsed:.0f} s")


def test_criterion_09_picard():
    cfg = load_config(default_config_path("picard"))
    sec = cfg.section("picard")
    grid = cfg.grid.build()
    solver = cfg.solver.build()
    rep = iteration_convergence_experiment(build_field(sec.initial, grid), sec.n_max, cfg.space.s, cfg.space.p,
                                           solver, rho=0.6, burn_in=3)
    b = rep.constants["increments"]
    ok = (solver.T == pytest.approx(0.1) and rep.checks["ratio_below_rho"] and rep.checks["final_matches_solve"])
    verdict(9, ok, f"max ratio (n>=3) {rep.constants['max_checked_ratio']:.3f}, final distance "
                   f"{rep.constants['dist_final_to_solve']:.2e} vs 2 b_last {2 * b[-1]:.2e}")


def test_criterion_10_inequality_harnesses():
    worst = {}
    for lemma in HARNESS_LEMMAS:
        res = run_harness(lemma, trials=100, seed=HARNESS_SEED)
        worst[lemma] = res.max / HARNESS_MAX[lemma]
    bounded = all(w <= HARNESS_FACTOR for w in worst.values())

    g = Grid(32.0, 512)
    rng = np.random.default_rng(HARNESS_SEED)
    P = lp.SpaceParams.tl(2, 2, 2)
    inv = 0.0
    for _ in range(10):
        f, h = random_band_limited(g, rng), random_band_limited(g, rng)
        lam, mu = rng.uniform(0.1, 10.0, 2) * rng.choice([-1, 1], 2)
        pairs = [
            (verify_moser(f, h, P), verify_moser(lam * f, mu * h, P)),
            (product_law_ratios(f, h, P)["primary"], product_law_ratios(lam * f, mu * h, P)["primary"]),
        ]
        pairs += list(zip(verify_commutator(f, h, 2, 2, 2), verify_commutator(lam * f, mu * h, 2, 2, 2)))
        for Q in (P, lp.SpaceParams.besov(1.5, 2, math.inf), lp.SpaceParams.sobolev(2)):
            pairs.append((abs(lam) * lp.norm(f, Q), lp.norm(lam * f, Q)))
        inv = max(inv, max(abs(b / a - 1) for a, b in pairs))
    detail = ", ".join(f"{k} {v:.2f}x" for k, v in worst.items())
    verdict(10, bounded and inv <= 1e-10, f"max/frozen: {detail}; homogeneity error {inv:.1e}")


def test_criterion_11_oracle_cross_check():
    g = Grid(32.0, 512)
    rng = np.random.default_rng(ORACLE_FAMILY_SEED)
    lo, hi = FS_HS_BRACKET
    ratios = []
    for _ in range(50):
        f = random_band_limited(g, rng)
        ratios.append(lp.norm(f, lp.SpaceParams.tl(2, 2, 2)) / lp.norm(f, lp.SpaceParams.sobolev(2)))
    inside = lo <= min(ratios) and max(ratios) <= hi

    u0 = gaussian(g, 1.0, 1.0)
    dt0 = 0.05
    ref = solve(u0, SolveConfig(dt=dt0 / 8, T=1.0, record_every=10**9)).final
    errs = [linf_norm(solve(u0, SolveConfig(dt=dt, T=1.0, record_every=10**9)).final - ref) for dt in (dt0, dt0 / 2)]
    order_ratio = errs[0] / errs[1]
    ok = inside and abs(order_ratio - 16) <= 3
    verdict(11, ok, f"F/H ratios in [{min(ratios):.4f}, {max(ratios):.4f}] within [{lo:.4f}, {hi:.4f}]; "
                    f"Richardson error ratio {order_ratio:.2f}")
