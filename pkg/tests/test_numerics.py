import math

import numpy as np
import pytest
from scipy import integrate

from poltomo import numerics
from poltomo.numerics import (
    QuadratureSpec,
    bessel_i,
    centered_axis,
    cpow,
    dft_grid,
    gauss_hermite_2d,
    reciprocal_axis,
    sinc,
)
from poltomo.pqpd import w_m


def bessel_i_series(n, x, terms=60):
    """Independent oracle: I_n(x) = sum_k (x/2)^(n+2k) / (k! (n+k)!)."""
    total = 0.0
    for k in range(terms):
        total += (x / 2.0) ** (n + 2 * k) / (
            math.factorial(k) * math.factorial(n + k))
    return total


def test_sinc_values():
    assert sinc(0.0) == 1.0
    assert abs(sinc(np.pi)) < 1e-15
    x = 1e-6
    assert abs(sinc(x) - (1.0 - x * x / 6.0)) < 1e-16
    x = np.array([0.0, 1.0, np.pi])
    assert np.allclose(sinc(x), [1.0, np.sin(1.0), 0.0], atol=1e-15)


def test_bessel_i_against_series():
    assert bessel_i(0, 0.0) == 1.0
    assert abs(bessel_i(0, 0.6) - bessel_i_series(0, 0.6)) < 1e-12
    assert abs(bessel_i(1, 0.6) - bessel_i_series(1, 0.6)) < 1e-12
    # frozen series values
    assert abs(bessel_i(0, 0.6) - 1.092045364317) < 1e-10
    assert abs(bessel_i(1, 0.6) - 0.313704025605) < 1e-10


def test_fft_pair_roundtrip():
    rng = np.random.default_rng(3)
    for shape in ((32,), (16, 24), (8, 10, 12)):
        vals = rng.normal(size=shape) + 1j * rng.normal(size=shape)
        deltas = tuple(rng.uniform(0.05, 0.3) for _ in shape)
        fwd = dft_grid(vals, deltas, sign=-1)
        dks = tuple(2 * np.pi / (n * d) for n, d in zip(shape, deltas))
        back = dft_grid(fwd, dks, sign=+1) / (2 * np.pi) ** len(shape)
        assert np.abs(back - vals).max() < 1e-12


def test_dft_gaussian_pair():
    n, d = 256, 0.1
    u = centered_axis(n, d)
    vals = np.exp(-0.5 * u**2)
    out = dft_grid(vals, d, sign=-1, normalization="angular")
    k = reciprocal_axis(n, d)
    expected = np.exp(-0.5 * k**2) / np.sqrt(2 * np.pi)
    assert np.abs(out - expected).max() < 1e-13


def test_dft_delta_is_flat_and_hermitian_gives_real():
    n, d = 64, 0.2
    vals = np.zeros(n)
    vals[n // 2] = 1.0  # sample at the origin of the centered grid
    out = dft_grid(vals, d, sign=-1)
    assert np.allclose(out, d)
    # hermitian input -> real output
    u = centered_axis(n, d)
    herm = np.exp(-(u**2)) * np.cos(u) + 1j * np.sin(u) * np.exp(-(u**2))
    out2 = dft_grid(herm, d, sign=-1)
    assert np.abs(out2.imag).max() < 1e-13


def test_dft_requires_even_grid():
    with pytest.raises(ValueError):
        dft_grid(np.ones(15), 0.1)


def test_gauss_hermite_exact_for_polynomials():
    # against the Gaussian weight, degree <= 2*order - 1 is exact
    spec = QuadratureSpec(tol=1e-12)
    for (i, j) in ((0, 0), (2, 0), (4, 2), (6, 6)):
        res = gauss_hermite_2d(
            lambda z1, z2: z1**i * z2**j * np.exp(-0.5 * (z1**2 + z2**2)),
            (0.0, 0.0), (1.0, 1.0), spec)
        m_i = math.prod(range(i - 1, 0, -2)) if i else 1  # (i-1)!! moments
        m_j = math.prod(range(j - 1, 0, -2)) if j else 1
        expect = 2 * np.pi * m_i * m_j
        assert abs(res.value - expect) < 1e-12 * max(1.0, expect)
        assert res.converged


def test_gauss_hermite_error_monotonicity():
    # doubling the order must not blow up the estimate on a smooth integrand
    f = lambda z1, z2: np.cos(z1 + 0.3 * z2) * np.exp(-0.5 * (z1**2 + z2**2))
    res = gauss_hermite_2d(f, (0.0, 0.0), (1.0, 1.0), QuadratureSpec(tol=1e-10))
    assert res.converged
    exact = 2 * np.pi * np.exp(-0.5 * (1 + 0.09))
    assert abs(res.value - exact) < 1e-9


def test_cpow_principal_branch_via_damped_hankel_oracle():
    # the regularized ring kernel is the only branch-sensitive consumer of
    # cpow; validate it against the branch-free damped double integral
    def oracle(m, s23, gamma):
        def inner(phi):
            f = lambda rho: rho * np.exp(-gamma * rho) * np.cos(m * rho) \
                * np.cos(s23 * rho * np.cos(phi))
            v, _ = integrate.quad(f, 0.0, np.inf, limit=400)
            return v
        val, _ = integrate.quad(inner, 0.0, 2 * np.pi, limit=200)
        return val / (2 * np.pi) ** 2

    for m, s23, gamma in ((1, 0.0, 0.3), (1, 0.5, 0.3), (1, 1.5, 0.3),
                          (2, 1.0, 0.5), (0, 0.7, 0.4)):
        assert abs(w_m(m, s23, gamma) - oracle(m, s23, gamma)) < 1e-9


def test_cpow_matches_exp_log():
    z = np.array([1 + 2j, -1 + 0.5j, -2 - 3j, 0.1 - 0.1j])
    assert np.allclose(cpow(z, 1.5), np.exp(1.5 * np.log(z)))
