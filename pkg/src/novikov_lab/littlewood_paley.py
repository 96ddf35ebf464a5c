"""Dyadic frequency decomposition and the norms built on it.

Blocks are diagonal multipliers evaluated at the grid wavenumbers:
``Delta_{-1} = theta(D)``, ``Delta_j = phi(2^-j D)`` for ``j >= 0`` and the
homogeneous family ``phi(2^-j D)`` for every integer ``j``.
"""

from __future__ import annotations

import enum
import functools
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .spectral import Grid, GridFunction, _check_finite, _readonly

__all__ = [
    "smooth_step",
    "CutoffPair",
    "make_cutoffs",
    "Family",
    "SpaceParams",
    "BlockDecomposition",
    "j_max",
    "j_min_homogeneous",
    "dyadic_block",
    "homogeneous_block",
    "low_freq",
    "decompose",
    "besov_norm",
    "triebel_lizorkin_norm",
    "sobolev_norm",
    "norm",
    "bony_parts",
    "WellPosednessWarning",
]

THETA_PLATEAU = 3.0 / 4.0
THETA_SUPPORT = 4.0 / 3.0


def _h(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1, built from exp(-1/t)."""
    a = _h(t)
    b = _h(1.0 - np.asarray(t, dtype=float))
    return a / (a + b)


def _theta(xi):
    xi = np.abs(np.asarray(xi, dtype=float))
    return smooth_step((THETA_SUPPORT - xi) / (THETA_SUPPORT - THETA_PLATEAU))


def _phi(xi):
    return _theta(np.asarray(xi, dtype=float) / 2.0) - _theta(xi)


@dataclass(frozen=True)
class CutoffPair:
    """Radial profiles theta (low-pass) and phi(xi) = theta(xi/2) - theta(xi)."""

    def theta(self, xi):
        return _theta(xi)

    def phi(self, xi):
        return _phi(xi)


_CUTOFFS = CutoffPair()


def make_cutoffs() -> CutoffPair:
    return _CUTOFFS


class Family(str, enum.Enum):
    BESOV = "besov"
    TRIEBEL_LIZORKIN = "triebel_lizorkin"
    SOBOLEV = "sobolev"


class WellPosednessWarning(UserWarning):
    """Space parameters below the well-posedness threshold s > max(3/2, 1 + 1/p)."""


@dataclass(frozen=True)
class SpaceParams:
    """Selects a Besov, Triebel-Lizorkin or Sobolev norm.

    ``q`` is the inner (summation) index; it is called r for Besov spaces.
    """

    family: Family = Family.TRIEBEL_LIZORKIN
    s: float = 2.0
    p: float = 2.0
    q: float = 2.0
    homogeneous: bool = False

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if self.family is not Family.SOBOLEV:
            if not (1 <= self.p < math.inf):
                raise ValueError(f"p must lie in [1, inf), got {self.p}")
            if not (self.q >= 1):
                raise ValueError(f"q must be >= 1 (or inf), got {self.q}")

    @classmethod
    def besov(cls, s, p=2.0, r=2.0):
        return cls(Family.BESOV, s, p, r)

    @classmethod
    def tl(cls, s, p=2.0, q=2.0, homogeneous=False):
        return cls(Family.TRIEBEL_LIZORKIN, s, p, q, homogeneous)

    @classmethod
    def sobolev(cls, s):
        return cls(Family.SOBOLEV, s, 2.0, 2.0)

    def with_s(self, s: float) -> "SpaceParams":
        return SpaceParams(self.family, s, self.p, self.q, self.homogeneous)

    def well_posed(self) -> bool:
        return self.s > max(1.5, 1.0 + 1.0 / self.p)

    def warn_if_ill_posed(self) -> None:
        if not self.well_posed():
            warnings.warn(
                f"s={self.s}, p={self.p} violates s > max(3/2, 1+1/p)",
                WellPosednessWarning,
                stacklevel=2,
            )


def j_max(grid: Grid) -> int:
    """Largest block index that can be nonzero on this grid."""
    return math.ceil(math.log2(grid.k_nyquist * THETA_SUPPORT / THETA_PLATEAU))


def j_min_homogeneous(grid: Grid) -> int:
    """Smallest homogeneous block index touching the first nonzero wavenumber."""
    # phi(2^-j k1) > 0 needs 2^-j k1 < 8/3
    return math.floor(math.log2(grid.dk * 3.0 / 8.0)) + 1


@functools.lru_cache(maxsize=64)
def _block_symbols(grid: Grid) -> tuple[tuple[int, np.ndarray], ...]:
    k = grid.rk
    out = [(-1, _readonly(_theta(k)))]
    for j in range(0, j_max(grid) + 1):
        out.append((j, _readonly(_phi(k / 2.0**j))))
    return tuple(out)


@functools.lru_cache(maxsize=64)
def _homogeneous_symbols(grid: Grid) -> tuple[tuple[int, np.ndarray], ...]:
    k = grid.rk
    out = []
    for j in range(j_min_homogeneous(grid), j_max(grid) + 1):
        sym = _phi(k / 2.0**j)
        sym[0] = 0.0
        out.append((j, _readonly(sym)))
    return tuple(out)


def _block_values(f: GridFunction, homogeneous: bool = False):
    """Yield (j, block samples) for every block that can be nonzero."""
    _check_finite(f.values)
    F = np.fft.rfft(f.values)
    symbols = _homogeneous_symbols(f.grid) if homogeneous else _block_symbols(f.grid)
    for j, sym in symbols:
        yield j, np.fft.irfft(F * sym, n=f.grid.N)


@dataclass(frozen=True)
class BlockDecomposition:
    blocks: tuple[tuple[int, GridFunction], ...]
    j_max: int

    def reconstruct(self) -> GridFunction:
        grid = self.blocks[0][1].grid
        total = np.zeros(grid.N)
        for _, b in self.blocks:
            total += b.values
        return GridFunction(grid, total)

    def __getitem__(self, j: int) -> GridFunction:
        for jj, b in self.blocks:
            if jj == j:
                return b
        return self.blocks[0][1].grid.zeros()


def decompose(f: GridFunction, homogeneous: bool = False) -> BlockDecomposition:
    blocks = tuple((j, GridFunction(f.grid, v)) for j, v in _block_values(f, homogeneous))
    return BlockDecomposition(blocks, j_max(f.grid))


def dyadic_block(j: int, f: GridFunction) -> GridFunction:
    """Inhomogeneous block Delta_j f (zero for j <= -2)."""
    _check_finite(f.values)
    if j <= -2:
        return f.grid.zeros()
    k = f.grid.rk
    sym = _theta(k) if j == -1 else _phi(k / 2.0**j)
    return GridFunction(f.grid, np.fft.irfft(np.fft.rfft(f.values) * sym, n=f.grid.N))


def homogeneous_block(j: int, f: GridFunction) -> GridFunction:
    _check_finite(f.values)
    sym = _phi(f.grid.rk / 2.0**j)
    sym[0] = 0.0
    return GridFunction(f.grid, np.fft.irfft(np.fft.rfft(f.values) * sym, n=f.grid.N))


def _low_symbol(grid: Grid, j: int) -> np.ndarray:
    # telescoping: theta + sum_{q=0}^{j-1} phi(2^-q .) = theta(2^-j .)
    return _theta(grid.rk / 2.0**j)


def low_freq(j: int, f: GridFunction) -> GridFunction:
    """S_j f = sum of Delta_q f for -1 <= q <= j - 1."""
    _check_finite(f.values)
    if j <= -1:
        return f.grid.zeros()
    return GridFunction(f.grid, np.fft.irfft(np.fft.rfft(f.values) * _low_symbol(f.grid, j), n=f.grid.N))


def _lq(stack_weighted: list[np.ndarray], q: float) -> np.ndarray:
    """Pointwise l^q norm over a list of non-negative arrays."""
    if math.isinf(q):
        return np.max(np.stack(stack_weighted), axis=0)
    top = np.max(np.stack(stack_weighted), axis=0)
    safe = np.where(top > 0, top, 1.0)
    acc = np.zeros_like(top)
    for a in stack_weighted:
        acc += (a / safe) ** q
    return top * acc ** (1.0 / q)


def _lp_array(a: np.ndarray, p: float, dx: float) -> float:
    a = np.abs(a)
    top = a.max()
    if top == 0:
        return 0.0
    return float(top * (np.sum((a / top) ** p) * dx) ** (1.0 / p))


def _lq_scalar(values: list[float], q: float) -> float:
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return 0.0
    if math.isinf(q):
        return float(v.max())
    top = v.max()
    if top == 0:
        return 0.0
    return float(top * np.sum((v / top) ** q) ** (1.0 / q))


def besov_norm(f: GridFunction, P: SpaceParams) -> float:
    """l^r over j >= -1 of 2^{sj} ||Delta_j f||_{L^p}."""
    terms = [2.0 ** (P.s * j) * _lp_array(b, P.p, f.grid.dx) for j, b in _block_values(f, P.homogeneous)]
    return _lq_scalar(terms, P.q)


def triebel_lizorkin_norm(f: GridFunction, P: SpaceParams) -> float:
    """L^p of the pointwise l^q sum over blocks.

    Inhomogeneous: ``(|S_0 f|^q + sum_{j>=0} 2^{jsq} |Delta_j f|^q)^{1/q}``;
    homogeneous: ``(sum_{j in Z} 2^{jsq} |Delta_j f|^q)^{1/q}``.
    """
    pieces = []
    for j, b in _block_values(f, P.homogeneous):
        weight = 1.0 if (j == -1 and not P.homogeneous) else 2.0 ** (P.s * j)
        pieces.append(weight * np.abs(b))
    return _lp_array(_lq(pieces, P.q), P.p, f.grid.dx)


def sobolev_norm(f: GridFunction, s: float) -> float:
    """(2L * sum (1 + k^2)^s |c_k|^2)^{1/2} with the unit-mass normalization."""
    _check_finite(f.values)
    grid = f.grid
    F = np.fft.rfft(f.values) / grid.N
    w = np.full(F.shape, 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    total = np.sum(w * (1.0 + grid.rk**2) ** s * np.abs(F) ** 2)
    return float(np.sqrt(grid.length * total))


def norm(f: GridFunction, P: SpaceParams) -> float:
    if P.family is Family.BESOV:
        return besov_norm(f, P)
    if P.family is Family.TRIEBEL_LIZORKIN:
        return triebel_lizorkin_norm(f, P)
    return sobolev_norm(f, P.s)


def bony_parts(u: GridFunction, v: GridFunction):
    """Paraproducts and remainder: ``uv = T_u v + T_v u + R(u, v)``.

    ``T_u v = sum_j S_{j-1}u Delta_j v`` and ``R(u, v) = sum_{|j-k|<=1} Delta_j u Delta_k v``.
    Products are formed pointwise on the grid, so the identity is exact only when
    the product is alias-free (combined bandwidth below Nyquist).
    """
    if u.grid != v.grid:
        raise ValueError("fields live on different grids")
    grid = u.grid
    du = dict(_block_values(u))
    dv = dict(_block_values(v))
    js = sorted(du)
    zero = np.zeros(grid.N)

    def low(d, j):
        # S_{j-1} = sum_{q <= j-2}
        acc = np.zeros(grid.N)
        for q in js:
            if q <= j - 2:
                acc += d[q]
        return acc

    Tuv = np.zeros(grid.N)
    Tvu = np.zeros(grid.N)
    R = np.zeros(grid.N)
    for j in js:
        Tuv += low(du, j) * dv[j]
        Tvu += low(dv, j) * du[j]
        for k in (j - 1, j, j + 1):
            R += du[j] * dv.get(k, zero)
    return GridFunction(grid, Tuv), GridFunction(grid, Tvu), GridFunction(grid, R)
