"""Shared numerical kernels.

Centered uniform-grid Fourier transforms, adaptive Gauss-Hermite quadrature,
adaptive radial quadrature, modified Bessel functions, and small-argument-safe
elementary helpers.  Everything here is pure and reentrant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial.hermite import hermgauss
from scipy import integrate, special


class QuadratureConvergenceError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance.

    Carries the best achieved error bound in ``achieved``.
    """

    def __init__(self, message: str, achieved: float):
        super().__init__(f"{message} (achieved error bound {achieved:.3e})")
        self.achieved = achieved


def sinc(x):
    """sin(x)/x with sinc(0) = 1; Taylor branch below 1e-4 avoids cancellation."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-4
    safe = np.where(small, 1.0, x)
    out = np.where(small, 1.0 - x * x / 6.0, np.sin(safe) / safe)
    return out.item() if out.ndim == 0 else out


def one_minus_cos(x):
    """1 - cos(x) evaluated as 2 sin^2(x/2), exact for small arguments."""
    x = np.asarray(x, dtype=float)
    out = 2.0 * np.sin(0.5 * x) ** 2
    return out.item() if out.ndim == 0 else out


def cpow(z, p):
    """Principal-branch complex power, shared by every caller that needs one."""
    return np.power(np.asarray(z, dtype=complex), p)


def binomial(n: int, k: int) -> int:
    return math.comb(n, k)


def bessel_i(n: int, x):
    """Modified Bessel function of the first kind I_n(x)."""
    return special.iv(n, x)


@lru_cache(maxsize=32)
def _hermgauss_cached(order: int):
    x, w = hermgauss(order)
    # w * exp(x^2) computed in log space: exp(x^2) alone overflows at high order
    wexp = np.exp(np.log(w) + x * x)
    return x, wexp


@dataclass(frozen=True)
class QuadratureSpec:
    """Configuration for the adaptive quadratures.

    method is one of ``gauss-hermite``, ``adaptive-radial``, ``trapezoid-grid``.
    """

    method: str = "gauss-hermite"
    tol: float = 1e-8
    max_order: int = 256


@dataclass(frozen=True)
class QuadResult:
    value: complex
    error: float
    converged: bool


_GH_ORDERS = (16, 24, 32, 48, 64, 96, 128, 192, 256)


def gauss_hermite_2d(
    f: Callable[[np.ndarray, np.ndarray], np.ndarray],
    centers: tuple[float, float],
    precisions: tuple[float, float],
    spec: QuadratureSpec = QuadratureSpec(),
) -> QuadResult:
    """Integrate f(z1, z2) over the plane by tensor-product Gauss-Hermite.

    ``precisions`` (a1, a2) describe the Gaussian envelope of the integrand,
    |f| ~ exp(-a1 (z1-c1)^2/2 - a2 (z2-c2)^2/2): nodes are placed on that
    envelope's scale around ``centers``.  The order escalates until two
    successive quadratures agree to spec.tol.
    """
    a1, a2 = precisions
    if a1 <= 0 or a2 <= 0:
        raise ValueError("envelope precisions must be positive")
    c1, c2 = centers
    s1 = math.sqrt(2.0 / a1)
    s2 = math.sqrt(2.0 / a2)
    prev = None
    best_err = np.inf
    for order in _GH_ORDERS:
        if order > spec.max_order:
            break
        x, wexp = _hermgauss_cached(order)
        z1 = c1 + s1 * x
        z2 = c2 + s2 * x
        vals = f(z1[:, None], z2[None, :])
        est = s1 * s2 * np.einsum("i,j,ij->", wexp, wexp, vals)
        if prev is not None:
            best_err = abs(est - prev)
            if best_err < spec.tol:
                return QuadResult(est, best_err, True)
        prev = est
    return QuadResult(prev, best_err, False)


def adaptive_radial(
    f: Callable[[float], float],
    r_max: float = np.inf,
    breakpoints: Sequence[float] = (),
    tol: float = 1e-10,
) -> QuadResult:
    """Integrate f(rho) * 2*pi*rho over [0, r_max] adaptively."""
    g = lambda rho: 2.0 * np.pi * rho * f(rho)
    pts = sorted(p for p in breakpoints if 0.0 < p < min(r_max, 1e300))
    if np.isinf(r_max):
        cut = max([1.0] + [2.0 * p for p in pts])
        v1, e1 = integrate.quad(g, 0.0, cut, points=pts or None,
                                limit=400, epsabs=tol, epsrel=tol)
        v2, e2 = integrate.quad(g, cut, np.inf, limit=400,
                                epsabs=tol, epsrel=tol)
        return QuadResult(v1 + v2, e1 + e2, True)
    val, err = integrate.quad(g, 0.0, r_max, points=pts or None,
                              limit=400, epsabs=tol, epsrel=tol)
    return QuadResult(val, err, True)


def centered_axis(n: int, delta: float) -> np.ndarray:
    """Uniform grid axis with n points, spacing delta, centered on zero.

    n must be even; index n//2 sits exactly at the origin.
    """
    if n % 2:
        raise ValueError("centered grids require an even point count")
    return (np.arange(n) - n // 2) * delta


def reciprocal_axis(n: int, delta: float) -> np.ndarray:
    """Conjugate axis of ``centered_axis(n, delta)`` under ``dft_grid``."""
    return np.fft.fftshift(np.fft.fftfreq(n, d=delta)) * 2.0 * np.pi


def dft_grid(values: np.ndarray, deltas, sign: int = -1,
             normalization: str = "none") -> np.ndarray:
    """Fourier transform of samples on a centered uniform grid.

    Computes F(k) = sum_j f(u_j) exp(sign * i * u_j . k) * prod(deltas) at the
    points of ``reciprocal_axis`` along every dimension.  With
    normalization="angular" the result is divided by (2*pi)**ndim, the
    convention used for quasi-probability inversion.
    """
    values = np.asarray(values)
    if np.isscalar(deltas):
        deltas = (float(deltas),) * values.ndim
    if len(deltas) != values.ndim:
        raise ValueError("one grid spacing per dimension required")
    if any(n % 2 for n in values.shape):
        raise ValueError("centered grids require even point counts")
    shifted = np.fft.ifftshift(values)
    if sign == -1:
        out = np.fft.fftn(shifted)
    elif sign == +1:
        out = np.fft.ifftn(shifted) * values.size
    else:
        raise ValueError("sign must be +1 or -1")
    out = np.fft.fftshift(out) * np.prod(deltas)
    if normalization == "angular":
        out = out / (2.0 * np.pi) ** values.ndim
    elif normalization != "none":
        raise ValueError(f"unknown normalization {normalization!r}")
    return out
