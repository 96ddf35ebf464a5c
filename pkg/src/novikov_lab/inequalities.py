"""Empirical checks of harmonic-analysis inequalities.

Each ``verify_*`` returns the ratio of the left side to the right side of an
inequality (so a bounded ratio over a family is the empirical statement).
``run_harness`` sweeps a seeded random family and reports max/median ratios.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import littlewood_paley as lp
from .spectral import Grid, GridFunction, derivative, linf_norm

__all__ = [
    "random_band_limited",
    "verify_moser",
    "verify_product_law",
    "product_law_ratios",
    "verify_commutator",
    "commutator_lhs",
    "HarnessResult",
    "run_harness",
    "HARNESS_LEMMAS",
]


def random_band_limited(grid: Grid, rng: np.random.Generator, k_max: float | None = None, decay: float = 1.0) -> GridFunction:
    """Random real trigonometric polynomial with |k| <= k_max (default Nyquist/4).

    Amplitudes fall off like (1 + k^2)^(-decay/2); the result is scaled to unit sup norm.
    """
    if k_max is None:
        k_max = grid.k_nyquist / 4
    k = grid.rk
    active = k <= k_max
    coeffs = (rng.standard_normal(k.size) + 1j * rng.standard_normal(k.size)) * active
    coeffs *= (1 + k**2) ** (-decay / 2)
    coeffs[0] = coeffs[0].real
    values = np.fft.irfft(coeffs, n=grid.N)
    return GridFunction(grid, values / np.max(np.abs(values)))


def _ratio(num: float, den: float, scale: float) -> float:
    # den vanishing relative to its natural size means both sides are round-off
    if den <= 1e-13 * scale or den == 0.0:
        return 0.0
    return num / den


def _homogeneous(P: lp.SpaceParams) -> lp.SpaceParams:
    return lp.SpaceParams(lp.Family.TRIEBEL_LIZORKIN, P.s, P.p, P.q, True)


def verify_moser(f: GridFunction, g: GridFunction, P: lp.SpaceParams) -> float:
    """||fg|| / (||f||_inf ||g|| + ||g||_inf ||f||), all in the homogeneous F^s_{p,q}."""
    if P.s <= 0:
        raise ValueError("the product estimate needs s > 0")
    H = _homogeneous(P)
    fi, gi = linf_norm(f), linf_norm(g)
    ff, gf = lp.norm(f, H), lp.norm(g, H)
    num = lp.norm(f * g, H)
    den = fi * gf + gi * ff
    return _ratio(num, den, fi * gi + fi * gf + gi * ff)


def product_law_ratios(f: GridFunction, g: GridFunction, P: lp.SpaceParams) -> dict[str, float]:
    """Three readings of ``||fg||_{B^{s-2}} <= C ...``.

    ``primary``: against ``||f||_{B^{s-2}} ||g||_{B^{s-1}}``;
    ``as_printed``: against ``||g||_{B^{s-2}} ||g||_{B^{s-1}}``;
    ``symmetrized``: against the sum of both orderings.
    """
    Bm2 = lp.SpaceParams.besov(P.s - 2, P.p, P.q)
    Bm1 = lp.SpaceParams.besov(P.s - 1, P.p, P.q)
    num = lp.norm(f * g, Bm2)
    f2, f1 = lp.norm(f, Bm2), lp.norm(f, Bm1)
    g2, g1 = lp.norm(g, Bm2), lp.norm(g, Bm1)
    scale = (linf_norm(f) + f1) * (linf_norm(g) + g1)
    return {
        "primary": _ratio(num, f2 * g1, scale),
        "as_printed": _ratio(num, g2 * g1, scale),
        "symmetrized": _ratio(num, f2 * g1 + g2 * f1, scale),
    }


def verify_product_law(f: GridFunction, g: GridFunction, P: lp.SpaceParams) -> float:
    if not P.s > max(1 + 1 / P.p, 1.5):
        raise ValueError(f"product law needs s > max(1 + 1/p, 3/2), got s={P.s}, p={P.p}")
    return product_law_ratios(f, g, P)["primary"]


def commutator_lhs(f: GridFunction, g: GridFunction, s: float, p: float, q: float) -> float:
    """L^p norm of the l^q(k) sum of 2^{ks} |f Delta_k g_x - Delta_k(f g_x)| over homogeneous blocks."""
    grid = f.grid
    gx = derivative(g)
    fgx = f * gx
    gx_blocks = dict(lp._block_values(gx, homogeneous=True))
    fgx_blocks = dict(lp._block_values(fgx, homogeneous=True))
    pieces = [2.0 ** (k * s) * np.abs(f.values * gx_blocks[k] - fgx_blocks[k]) for k in gx_blocks]
    return lp._lp_array(lp._lq(pieces, q), p, grid.dx)


def verify_commutator(f: GridFunction, g: GridFunction, s: float, p: float, q: float) -> tuple[float, float]:
    """Ratios of the commutator norm to its two upper bounds (first-derivative and sup-norm forms)."""
    if s <= 0:
        raise ValueError("commutator estimate needs s > 0")
    H = lp.SpaceParams.tl(s, p, q, homogeneous=True)
    fx, gx = derivative(f), derivative(g)
    lhs = commutator_lhs(f, g, s, p, q)
    fx_inf, gx_inf, g_inf = linf_norm(fx), linf_norm(gx), linf_norm(g)
    g_F, f_F, fx_F = lp.norm(g, H), lp.norm(f, H), lp.norm(fx, H)
    rhs_a = fx_inf * g_F + gx_inf * f_F
    rhs_b = fx_inf * g_F + g_inf * fx_F
    scale = (linf_norm(f) + fx_inf + f_F) * (g_inf + gx_inf + g_F)
    return _ratio(lhs, rhs_a, scale), _ratio(lhs, rhs_b, scale)


# ---------------------------------------------------------------- harness

HARNESS_LEMMAS = ("moser", "product", "commutator_a", "commutator_b", "transport")


@dataclass
class HarnessResult:
    lemma: str
    P: lp.SpaceParams
    seed: int
    ratios: list[float]
    extra: dict[str, list[float]] = field(default_factory=dict)

    @property
    def max(self) -> float:
        return float(np.max(self.ratios))

    @property
    def median(self) -> float:
        return float(np.median(self.ratios))

    def rows(self):
        for i, r in enumerate(self.ratios):
            yield {"lemma": self.lemma, "s": self.P.s, "p": self.P.p, "q": self.P.q, "trial": i, "ratio": r}

    def summary(self) -> dict:
        out = {"lemma": self.lemma, "s": self.P.s, "p": self.P.p, "q": _jsonable(self.P.q),
               "trials": len(self.ratios), "max": self.max, "median": self.median, "seed": self.seed}
        for key, vals in self.extra.items():
            out[f"{key}_max"] = float(np.max(vals))
            out[f"{key}_median"] = float(np.median(vals))
        return out


def _jsonable(x):
    return "inf" if isinstance(x, float) and math.isinf(x) else x


def _transport_case(grid, rng, P, T, dt):
    from .solver import SolveConfig, transport_estimate_terms

    f0 = random_band_limited(grid, rng)
    va = random_band_limited(grid, rng) * 0.8
    vb = random_band_limited(grid, rng) * 0.4
    g = random_band_limited(grid, rng) * 0.2

    def velocity(t, va=va.values, vb=vb.values):
        return va + t * vb

    cfg = SolveConfig(dt=dt, T=T, cfl_safety=1.0)
    return transport_estimate_terms(f0, velocity, g, P, cfg).C


def run_harness(
    lemma: str,
    *,
    trials: int = 100,
    seed: int = 20240501,
    P: lp.SpaceParams | None = None,
    grid: Grid | None = None,
    transport_T: float = 0.5,
    transport_dt: float = 0.02,
) -> HarnessResult:
    """Evaluate one inequality over a seeded family of random band-limited fields."""
    if lemma not in HARNESS_LEMMAS:
        raise ValueError(f"unknown lemma {lemma!r}; choose from {HARNESS_LEMMAS}")
    if P is None:
        P = lp.SpaceParams.tl(2.0, 2.0, 2.0)
    if grid is None:
        grid = Grid(32.0, 256 if lemma == "transport" else 512)
    rng = np.random.default_rng(seed)
    ratios: list[float] = []
    extra: dict[str, list[float]] = {}
    for _ in range(trials):
        if lemma == "transport":
            ratios.append(_transport_case(grid, rng, P, transport_T, transport_dt))
            continue
        f = random_band_limited(grid, rng)
        g = random_band_limited(grid, rng)
        if lemma == "moser":
            ratios.append(verify_moser(f, g, P))
        elif lemma == "product":
            r = product_law_ratios(f, g, P)
            ratios.append(r["primary"])
            extra.setdefault("as_printed", []).append(r["as_printed"])
            extra.setdefault("symmetrized", []).append(r["symmetrized"])
        else:
            a, b = verify_commutator(f, g, P.s, P.p, P.q)
            ratios.append(a if lemma == "commutator_a" else b)
    return HarnessResult(lemma, P, seed, ratios, extra)


def write_harness_reports(results: list[HarnessResult], outdir) -> tuple[Path, Path]:
    """CSV with (lemma, s, p, q, trial, ratio) and a JSON summary."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    csv_path = outdir / "harness.csv"
    with csv_path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["lemma", "s", "p", "q", "trial", "ratio"])
        w.writeheader()
        for res in results:
            for row in res.rows():
                row = {k: (repr(float(v)) if isinstance(v, float) else v) for k, v in row.items()}
                w.writerow(row)
    json_path = outdir / "harness_summary.json"
    json_path.write_text(json.dumps([r.summary() for r in results], indent=2, sort_keys=True) + "\n")
    return csv_path, json_path
