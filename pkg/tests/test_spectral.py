import math
import threading

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from novikov_lab.inequalities import random_band_limited
from novikov_lab.spectral import (
    Grid,
    GridFunction,
    NonFiniteFieldError,
    SpectralField,
    dealias,
    derivative,
    forward_transform,
    helmholtz_inverse,
    inverse_transform,
    ladder_wavenumber,
    linf_norm,
    lp_norm,
)


def periodized_kernel(d, L):
    """Sum over n of exp(-|d + 2Ln|)/2 for |d| <= 2L, in closed form."""
    d = abs(d) % (2 * L)
    return math.cosh(L - d) / (2 * math.sinh(L))


def helmholtz_by_quadrature(func, x, L, center=0.0):
    def integrand(y):
        return periodized_kernel(x - y, L) * func(y)

    # breakpoints at the kernel kink and at the data's bump
    pts = sorted({float(x), center - 1.0, center, center + 1.0} - {-L, L})
    val, _ = quad(integrand, -L, L, points=pts, limit=400, epsabs=1e-14, epsrel=1e-13)
    return val


class TestGrid:
    def test_rejects_non_power_of_two(self):
        with pytest.raises(ValueError):
            Grid(1.0, 12)

    def test_rejects_bad_length(self):
        with pytest.raises(ValueError):
            Grid(-1.0, 16)

    def test_spacing_and_ladder(self):
        g = Grid(32.0, 64)
        assert g.dx * g.N == pytest.approx(2 * g.L, rel=0, abs=1e-13)
        k = g.wavenumbers
        assert k.max() == pytest.approx(g.k_nyquist)
        # symmetric apart from the Nyquist mode
        inner = np.sort(k[np.abs(k) < g.k_nyquist])
        np.testing.assert_allclose(inner, -inner[::-1], atol=1e-14)
        assert g.x[0] == -g.L

    def test_ladder_wavenumber_snaps(self):
        g = Grid(32.0, 1024)
        k = ladder_wavenumber(g, 2.8)
        assert k / g.dk == pytest.approx(round(k / g.dk), abs=1e-12)
        assert abs(k - 2.8) <= g.dk / 2


class TestGridFunction:
    def test_non_finite_is_detected(self, grid):
        v = np.zeros(grid.N)
        v[3] = np.nan
        f = GridFunction(grid, v)
        assert not f.is_finite()
        with pytest.raises(NonFiniteFieldError):
            forward_transform(f)
        with pytest.raises(NonFiniteFieldError):
            helmholtz_inverse(f)

    def test_values_are_read_only(self, grid):
        f = grid.zeros()
        with pytest.raises(ValueError):
            f.values[0] = 1.0

    def test_wrong_length(self, grid):
        with pytest.raises(ValueError):
            GridFunction(grid, np.zeros(grid.N + 1))

    def test_evaluate_interpolates_trig_polynomial(self, grid):
        k = 5 * grid.dk
        f = grid.sample(lambda x: np.sin(k * x) + 0.3 * np.cos(2 * k * x))
        xs = np.array([0.123, -7.7, 31.9])
        np.testing.assert_allclose(f.evaluate(xs), np.sin(k * xs) + 0.3 * np.cos(2 * k * xs), atol=1e-12)


class TestTransforms:
    def test_zero(self, grid):
        F = forward_transform(grid.zeros())
        assert not np.any(F.coeffs)
        assert not np.any(inverse_transform(SpectralField(grid, np.zeros(grid.N, complex))).values)

    def test_single_mode_cosine(self, grid):
        f = grid.sample(lambda x: np.cos(np.pi * x / grid.L))
        F = forward_transform(f)
        nz = np.flatnonzero(np.abs(F.coeffs) > 1e-12)
        m = np.round(F.wavenumbers[nz] / grid.dk).astype(int)
        assert sorted(m) == [-1, 1]
        np.testing.assert_allclose(F.coeffs[nz], 0.5, atol=1e-13)

    def test_single_mode_samples(self, grid):
        coeffs = np.zeros(grid.N, complex)
        m1 = np.flatnonzero(np.isclose(grid.wavenumbers, grid.dk))[0]
        coeffs[m1] = 1.0
        samples = SpectralField(grid, coeffs).samples()
        np.testing.assert_allclose(samples, np.exp(1j * grid.dk * grid.x), atol=1e-13)

    def test_round_trip(self, grid, rng):
        f = random_band_limited(grid, rng, k_max=grid.k_nyquist)
        g = inverse_transform(forward_transform(f))
        assert np.max(np.abs(g.values - f.values)) <= 1e-12 * linf_norm(f)

    def test_conjugate_symmetry(self, grid, rng):
        assert forward_transform(random_band_limited(grid, rng)).is_conjugate_symmetric()

    def test_parseval(self, grid, rng):
        f = random_band_limited(grid, rng, k_max=grid.k_nyquist)
        c = forward_transform(f).coeffs
        assert lp_norm(f, 2) ** 2 == pytest.approx(2 * grid.L * np.sum(np.abs(c) ** 2), rel=1e-10)

    def test_coefficients_approximate_continuous_transform(self, fine_grid):
        f = fine_grid.sample(lambda x: np.exp(-(x**2) / 2))
        F = forward_transform(f)
        k = F.wavenumbers
        exact = math.sqrt(2 * math.pi) * np.exp(-(k**2) / 2) / (2 * fine_grid.L)
        np.testing.assert_allclose(F.coeffs, exact, atol=1e-14)

    def test_imaginary_inverse_rejected(self, grid):
        coeffs = np.zeros(grid.N, complex)
        coeffs[1] = 1.0
        with pytest.raises(ValueError):
            inverse_transform(SpectralField(grid, coeffs))


class TestDerivative:
    def test_constant(self, grid):
        f = GridFunction(grid, np.full(grid.N, 3.0))
        assert linf_norm(derivative(f)) < 1e-14

    def test_sine_ladder(self, grid):
        k = ladder_wavenumber(grid, 2.8)
        d = derivative(grid.sample(lambda x: np.sin(k * x)))
        assert np.max(np.abs(d.values - k * np.cos(k * grid.x))) < 1e-10

    def test_finite_difference_oracle_order_two(self):
        errs = []
        for N in (64, 128, 256):
            g = Grid(32.0, N)
            f = g.sample(lambda x: np.exp(np.sin(np.pi * x / g.L)))
            fd = (np.roll(f.values, -1) - np.roll(f.values, 1)) / (2 * g.dx)
            errs.append(np.max(np.abs(fd - derivative(f).values)))
        orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        np.testing.assert_allclose(orders, 2.0, atol=0.05)

    def test_nyquist_zeroed(self):
        g = Grid(1.0, 16)
        f = GridFunction(g, np.cos(g.k_nyquist * g.x))
        assert linf_norm(derivative(f)) < 1e-12


class TestHelmholtz:
    def test_constant(self, grid):
        f = GridFunction(grid, np.full(grid.N, 2.5))
        np.testing.assert_allclose(helmholtz_inverse(f).values, 2.5, atol=1e-14)

    def test_eigenfunction(self, grid):
        k = 7 * grid.dk
        f = grid.sample(lambda x: np.sin(k * x))
        np.testing.assert_allclose(helmholtz_inverse(f).values, f.values / (1 + k**2), atol=1e-14)

    def test_inverts_one_minus_dxx(self, grid, rng):
        f = random_band_limited(grid, rng)
        back = helmholtz_inverse(f - derivative(derivative(f)))
        assert np.max(np.abs(back.values - f.values)) < 1e-10

    def test_quadrature_oracle(self):
        g = Grid(32.0, 2**10)

        def bump(y):
            return math.exp(-4 * y * y)

        f = g.sample(lambda x: np.exp(-4 * x**2))
        spec = helmholtz_inverse(f)
        idx = np.arange(0, g.N, 37)
        oracle = np.array([helmholtz_by_quadrature(bump, g.x[i], g.L) for i in idx])
        assert np.max(np.abs(spec.values[idx] - oracle)) < 1e-10

    @pytest.mark.parametrize("width", [0.3, 1.0, 2.0])
    def test_positivity_on_bumps(self, grid, width):
        f = grid.sample(lambda x: np.exp(-(x**2) / width**2))
        assert helmholtz_inverse(f).values.min() > 0

    def test_thread_safety(self, grid, rng):
        f = random_band_limited(grid, rng)
        expected = helmholtz_inverse(f).values
        results = [None] * 8

        def work(i):
            results[i] = helmholtz_inverse(f).values

        threads = [threading.Thread(target=work, args=(i,)) for i in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        for r in results:
            np.testing.assert_array_equal(r, expected)


class TestDealias:
    def test_identity_at_full_fraction(self, grid, rng):
        f = random_band_limited(grid, rng, k_max=grid.k_nyquist * 0.9)
        np.testing.assert_allclose(dealias(f, 1.0).values, f.values, atol=1e-14)

    def test_high_mode_removed(self, grid):
        k = 400 * grid.dk
        assert k > 0.5 * grid.k_nyquist
        f = grid.sample(lambda x: np.sin(k * x))
        assert linf_norm(dealias(f, 0.5)) < 1e-12

    def test_spectrum_above_cutoff_is_zero(self, grid, rng):
        f = random_band_limited(grid, rng, k_max=grid.k_nyquist)
        c = forward_transform(dealias(f, 0.5))
        above = np.abs(c.wavenumbers) > 0.5 * grid.k_nyquist
        assert np.max(np.abs(c.coeffs[above])) < 1e-16

    @pytest.mark.parametrize("frac", [0.0, -0.1, 1.5])
    def test_bad_fraction(self, grid, frac):
        with pytest.raises(ValueError):
            dealias(grid.zeros(), frac)


class TestLpNorm:
    def test_constant(self):
        g = Grid(32.0, 256)
        assert lp_norm(GridFunction(g, np.ones(g.N)), 2) == pytest.approx(8.0, rel=1e-14)

    def test_sine(self):
        g = Grid(32.0, 256)
        k = 3 * g.dk
        assert lp_norm(g.sample(lambda x: np.sin(k * x)), 2) == pytest.approx(math.sqrt(32.0), rel=1e-13)

    def test_zero(self, grid):
        assert lp_norm(grid.zeros(), 3.0) == 0.0

    @pytest.mark.parametrize("p", [0.5, math.inf])
    def test_rejects_bad_p(self, grid, p):
        with pytest.raises(ValueError):
            lp_norm(grid.zeros(), p)


@settings(max_examples=30, deadline=None)
@given(
    seed=st.integers(0, 2**31),
    scale=st.floats(1e-3, 1e3),
)
def test_round_trip_property(seed, scale):
    g = Grid(10.0, 128)
    f = random_band_limited(g, np.random.default_rng(seed), k_max=g.k_nyquist) * scale
    back = inverse_transform(forward_transform(f))
    assert np.max(np.abs(back.values - f.values)) <= 1e-12 * linf_norm(f)
