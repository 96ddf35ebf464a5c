"""Initial data: smooth bumps, mollified peakons and the high/low frequency pairs."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .littlewood_paley import smooth_step
from .spectral import Grid, GridFunction

__all__ = [
    "gaussian",
    "sine_mode",
    "bessel_potential",
    "mollified_peakon",
    "BumpProfile",
    "make_bump_profile",
    "high_frequency",
    "build_fn",
    "build_gn",
    "FrequencyError",
]


class FrequencyError(ValueError):
    """Requested frequency cannot be represented below the dealiasing cutoff."""


def gaussian(grid: Grid, amplitude: float = 1.0, width: float = 1.0, center: float = 0.0) -> GridFunction:
    return grid.sample(lambda x: amplitude * np.exp(-((x - center) ** 2) / (2 * width**2)))


def sine_mode(grid: Grid, k: float, amplitude: float = 1.0, phase: float = 0.0) -> GridFunction:
    return grid.sample(lambda x: amplitude * np.sin(k * x + phase))


def bessel_potential(grid: Grid, amplitude: float = 1.0, center: float = 0.0) -> GridFunction:
    """amplitude * (1 + |x|) e^{-|x|}; its transform decays like (1 + k^2)^-2."""
    return grid.sample(lambda x: amplitude * (1 + np.abs(x - center)) * np.exp(-np.abs(x - center)))


def _from_spectrum(grid: Grid, values_at_k: np.ndarray, center: float = 0.0) -> GridFunction:
    """Field whose continuous transform is ``values_at_k`` (given on grid.rk)."""
    k = grid.rk
    # x_j = -L + j dx, so rfft coefficients pick up exp(i k L)
    coeffs = values_at_k / grid.length * grid.N * np.exp(1j * k * (grid.L - center))
    coeffs[-1] = coeffs[-1].real
    return GridFunction(grid, np.fft.irfft(coeffs, n=grid.N))


def mollified_peakon(grid: Grid, c: float = 1.0, sigma: float = 0.05, center: float = 0.0, sign: int = 1) -> GridFunction:
    """sign * sqrt(c) e^{-|x - center|} convolved with a unit Gaussian of width sigma.

    Built from its exact transform ``2 sqrt(c) / (1 + k^2) * exp(-sigma^2 k^2 / 2)``;
    ``sigma = 0`` gives the periodized peakon itself.
    """
    if c <= 0:
        raise ValueError("peakon speed c must be positive")
    k = grid.rk
    spec = sign * 2 * math.sqrt(c) / (1 + k**2) * np.exp(-0.5 * (sigma * k) ** 2)
    return _from_spectrum(grid, spec, center)


@dataclass(frozen=True)
class BumpProfile:
    """phi with an even, non-negative transform equal to 1 on |xi| <= 1/4 and 0 on |xi| >= 1/2."""

    phi: GridFunction
    plateau: float = 0.25
    support: float = 0.5

    def transform(self, xi) -> np.ndarray:
        return _bump_hat(xi, self.plateau, self.support)


def _bump_hat(xi, plateau=0.25, support=0.5):
    xi = np.abs(np.asarray(xi, dtype=float))
    return smooth_step((support - xi) / (support - plateau))


def make_bump_profile(grid: Grid) -> BumpProfile:
    return BumpProfile(_from_spectrum(grid, _bump_hat(grid.rk)))


def high_frequency(n: int) -> float:
    """Carrier frequency (17/12) 2^n of f_n."""
    return 17.0 / 12.0 * 2.0**n


def _carrier(grid: Grid, n: int, snap: bool) -> float:
    omega = high_frequency(n)
    m = omega / grid.dk
    if snap and abs(m - round(m)) > 1e-9:
        omega = round(m) * grid.dk
    return omega


def build_fn(
    n: int,
    s: float,
    phi: BumpProfile,
    *,
    dealias_fraction: float = 0.5,
    snap: bool = True,
) -> GridFunction:
    """f_n = 2^{-ns} phi(x) sin((17/12) 2^n x).

    The carrier is snapped to the nearest ladder wavenumber when it is not on
    the grid ladder (on L = 12 pi it always is), so the product stays periodic.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    grid = phi.phi.grid
    omega = _carrier(grid, n, snap)
    cutoff = dealias_fraction * grid.k_nyquist
    if omega + phi.support > cutoff:
        raise FrequencyError(
            f"f_{n} occupies |k| up to {omega + phi.support:.4g}, above the cutoff {cutoff:.4g}"
        )
    x = grid.x
    return GridFunction(grid, 2.0 ** (-n * s) * phi.phi.values * np.sin(omega * x))


def build_gn(n: int, phi: BumpProfile) -> GridFunction:
    """g_n = 2^{-n/2} phi."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return 2.0 ** (-n / 2) * phi.phi
