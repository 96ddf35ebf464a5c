"""Periodic grid, Fourier transforms and diagonal multipliers.

The real line is approximated by the torus [-L, L). Coefficients are
normalized so that ``c_m ~ (1/2L) * integral f(x) exp(-i k_m x) dx``, which
makes Parseval read ``||f||_2^2 = 2L * sum |c_m|^2``.

Internally every diagonal operator works on ``rfft`` spectra of the raw
sample arrays; the public :class:`SpectralField` uses the full complex
spectrum with the phase convention above.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Grid",
    "GridFunction",
    "SpectralField",
    "NonFiniteFieldError",
    "forward_transform",
    "inverse_transform",
    "derivative",
    "helmholtz_inverse",
    "dealias",
    "lp_norm",
    "linf_norm",
    "ladder_wavenumber",
]


class NonFiniteFieldError(ValueError):
    """Raised when a field carries NaN or Inf samples."""


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on [-L, L) with N points (N a power of two)."""

    L: float = 32.0
    N: int = 2**13

    def __post_init__(self):
        if not (self.L > 0 and np.isfinite(self.L)):
            raise ValueError(f"half length must be positive and finite, got {self.L}")
        n = int(self.N)
        if n != self.N or n < 4 or n & (n - 1):
            raise ValueError(f"N must be a power of two >= 4, got {self.N}")
        object.__setattr__(self, "L", float(self.L))
        object.__setattr__(self, "N", n)

    @property
    def length(self) -> float:
        return 2.0 * self.L

    @property
    def dx(self) -> float:
        return self.length / self.N

    @property
    def x(self) -> np.ndarray:
        return _nodes(self)

    @property
    def dk(self) -> float:
        """Spacing of the wavenumber ladder, pi / L."""
        return np.pi / self.L

    @property
    def k_nyquist(self) -> float:
        return np.pi * self.N / self.length

    @property
    def wavenumbers(self) -> np.ndarray:
        """Full-spectrum wavenumbers in numpy FFT order, Nyquist taken positive."""
        return _full_wavenumbers(self)

    @property
    def rk(self) -> np.ndarray:
        """Non-negative wavenumbers matching ``np.fft.rfft`` output."""
        return _rfft_wavenumbers(self)

    def zeros(self) -> "GridFunction":
        return GridFunction(self, np.zeros(self.N))

    def field(self, values) -> "GridFunction":
        return GridFunction(self, values)

    def sample(self, func) -> "GridFunction":
        """Evaluate a vectorized callable at the grid nodes."""
        return GridFunction(self, np.asarray(func(self.x), dtype=float))


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@functools.lru_cache(maxsize=64)
def _nodes(grid: Grid) -> np.ndarray:
    return _readonly(-grid.L + grid.dx * np.arange(grid.N))


@functools.lru_cache(maxsize=64)
def _full_wavenumbers(grid: Grid) -> np.ndarray:
    m = np.fft.fftfreq(grid.N, d=1.0 / grid.N)
    m[grid.N // 2] = grid.N // 2
    return _readonly(m * grid.dk)


@functools.lru_cache(maxsize=64)
def _rfft_wavenumbers(grid: Grid) -> np.ndarray:
    return _readonly(np.arange(grid.N // 2 + 1) * grid.dk)


@functools.lru_cache(maxsize=64)
def _phase(grid: Grid) -> np.ndarray:
    # exp(i k_m L) = (-1)^m because the first node sits at x = -L
    m = np.fft.fftfreq(grid.N, d=1.0 / grid.N).astype(int)
    return _readonly(np.where(m % 2 == 0, 1.0, -1.0))


@functools.lru_cache(maxsize=64)
def _ik(grid: Grid) -> np.ndarray:
    ik = 1j * grid.rk
    ik[-1] = 0.0  # odd multiplier has no real representative at Nyquist
    return _readonly(ik)


@functools.lru_cache(maxsize=64)
def _helmholtz_symbol(grid: Grid) -> np.ndarray:
    return _readonly(1.0 / (1.0 + grid.rk**2))


@functools.lru_cache(maxsize=256)
def _dealias_mask(grid: Grid, fraction: float) -> np.ndarray:
    return _readonly(grid.rk <= fraction * grid.k_nyquist * (1 + 1e-12))


def _check_finite(values: np.ndarray, what: str = "field") -> None:
    if not np.all(np.isfinite(values)):
        bad = int(np.count_nonzero(~np.isfinite(values)))
        raise NonFiniteFieldError(f"{what} has {bad} non-finite sample(s)")


class GridFunction:
    """Real samples of a periodic function on a :class:`Grid`.

    Values are stored read-only; arithmetic returns new instances.
    """

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid, values):
        values = np.array(values, dtype=float, copy=True)
        if values.shape != (grid.N,):
            raise ValueError(f"expected {grid.N} samples, got shape {values.shape}")
        values.setflags(write=False)
        self.grid = grid
        self.values = values

    def __repr__(self):
        return f"GridFunction(L={self.grid.L}, N={self.grid.N}, max|f|={np.max(np.abs(self.values)):.3g})"

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    def _other(self, other):
        if isinstance(other, GridFunction):
            if other.grid != self.grid:
                raise ValueError("fields live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return GridFunction(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridFunction(self.grid, self.values - self._other(other))

    def __rsub__(self, other):
        return GridFunction(self.grid, self._other(other) - self.values)

    def __mul__(self, other):
        return GridFunction(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return GridFunction(self.grid, self.values / self._other(other))

    def __neg__(self):
        return GridFunction(self.grid, -self.values)

    def __pow__(self, n):
        return GridFunction(self.grid, self.values**n)

    def shifted(self, a: float) -> "GridFunction":
        """Return x -> f(x - a), exactly for band-limited f."""
        F = np.fft.rfft(self.values)
        return GridFunction(self.grid, np.fft.irfft(F * np.exp(-1j * self.grid.rk * a), n=self.grid.N))

    def evaluate(self, x) -> np.ndarray:
        """Trigonometric interpolant evaluated at arbitrary points."""
        spec = forward_transform(self)
        x = np.atleast_1d(np.asarray(x, dtype=float))
        k = self.grid.wavenumbers.copy()
        coeffs = spec.coeffs.copy()
        nyq = self.grid.N // 2
        # split the Nyquist mode symmetrically so the interpolant is real
        k_extra = -k[nyq]
        c_extra = coeffs[nyq] / 2
        coeffs[nyq] /= 2
        out = np.exp(1j * np.outer(x, k)) @ coeffs + c_extra * np.exp(1j * x * k_extra)
        return out.real


@dataclass(frozen=True)
class SpectralField:
    """Complex amplitudes indexed like ``grid.wavenumbers``."""

    grid: Grid
    coeffs: np.ndarray

    @property
    def wavenumbers(self) -> np.ndarray:
        return self.grid.wavenumbers

    def is_conjugate_symmetric(self, rtol: float = 1e-12) -> bool:
        c = self.coeffs
        mirrored = np.conj(np.roll(c[::-1], 1))
        scale = max(np.max(np.abs(c)), np.finfo(float).tiny)
        return bool(np.max(np.abs(c - mirrored)) <= rtol * scale)

    def samples(self) -> np.ndarray:
        """Complex samples of the series at the grid nodes (no reality assumption)."""
        return np.fft.ifft(self.coeffs * _phase(self.grid)) * self.grid.N


def forward_transform(f: GridFunction) -> SpectralField:
    _check_finite(f.values)
    coeffs = np.fft.fft(f.values) / f.grid.N * _phase(f.grid)
    return SpectralField(f.grid, coeffs)


def inverse_transform(F: SpectralField) -> GridFunction:
    """Real field from a conjugate-symmetric spectrum.

    Use :meth:`SpectralField.samples` for spectra of complex-valued functions.
    """
    _check_finite(F.coeffs, "spectrum")
    z = F.samples()
    scale = max(np.max(np.abs(z)), 1.0)
    if np.max(np.abs(z.imag)) > 1e-10 * scale:
        raise ValueError("spectrum is not conjugate symmetric; use SpectralField.samples()")
    return GridFunction(F.grid, z.real)


def apply_multiplier(values: np.ndarray, grid: Grid, symbol: np.ndarray) -> np.ndarray:
    """Apply a diagonal multiplier given on the rfft wavenumbers."""
    return np.fft.irfft(np.fft.rfft(values) * symbol, n=grid.N)


def derivative(f: GridFunction) -> GridFunction:
    _check_finite(f.values)
    return GridFunction(f.grid, apply_multiplier(f.values, f.grid, _ik(f.grid)))


def helmholtz_inverse(f: GridFunction) -> GridFunction:
    """(1 - d^2/dx^2)^{-1}, i.e. convolution with the periodized exp(-|x|)/2."""
    _check_finite(f.values)
    return GridFunction(f.grid, apply_multiplier(f.values, f.grid, _helmholtz_symbol(f.grid)))


def dealias(f: GridFunction, fraction: float = 0.5) -> GridFunction:
    if not 0 < fraction <= 1:
        raise ValueError(f"dealias fraction must lie in (0, 1], got {fraction}")
    return GridFunction(f.grid, apply_multiplier(f.values, f.grid, _dealias_mask(f.grid, float(fraction))))


def lp_norm(f: GridFunction, p: float = 2.0) -> float:
    """Rectangle-rule L^p norm on the torus."""
    if not (np.isfinite(p) and p >= 1):
        raise ValueError(f"p must be finite and >= 1, got {p}")
    a = np.abs(f.values)
    if p == 2:
        return float(np.sqrt(np.dot(a, a) * f.grid.dx))
    top = a.max()
    if top == 0:
        return 0.0
    return float(top * (np.sum((a / top) ** p) * f.grid.dx) ** (1.0 / p))


def linf_norm(f: GridFunction) -> float:
    return float(np.max(np.abs(f.values)))


def ladder_wavenumber(grid: Grid, k: float) -> float:
    """Nearest wavenumber on the grid ladder pi*m/L."""
    return round(k / grid.dk) * grid.dk
