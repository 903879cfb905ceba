"""Quasi-probability distributions over the Stokes variables.

Builds the singular radial kernels w_m and the linearly polarized marginals
from them, the smoothed (photon-number-integrated) distribution, the Wigner
function of the signal state, the closed-form highlighted marginals for
squeezed vacuum and squeezed single-photon signals, and the negativity-volume
measure.  Delta combs are kept symbolic; only gamma-regularized kernels are
ever rasterized onto grids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate
from scipy.interpolate import RegularGridInterpolator

from . import numerics
from .numerics import centered_axis, cpow, dft_grid, reciprocal_axis
from .states import (
    Fock,
    LinearPolarizedState,
    SingleModeState,
    chi_s,
    gaussian_envelope,
)


class GridCoverageError(ValueError):
    """A grid does not cover enough of the distribution it must represent."""


@dataclass(frozen=True)
class StokesPoint:
    """A point (S1, S2, S3) in photon-number Stokes units."""

    S1: float
    S2: float
    S3: float

    @property
    def S23(self):
        return np.hypot(self.S2, self.S3)

    def normalized(self, alpha0: complex, eta: float):
        """Map (S2, S3) to the oscillator-normalized plane (s2, s3)."""
        z = (self.S2 - 1j * np.asarray(self.S3)) / (
            math.sqrt(eta) * np.conj(complex(alpha0)))
        return z.real, z.imag


@dataclass
class QpdGrid:
    """Sampled (quasi-)probability values on a rectangular uniform grid."""

    axes: tuple
    values: np.ndarray
    coordinate_system: str = "stokes"
    jacobian: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.axes = tuple(np.asarray(ax, dtype=float) for ax in self.axes)
        if tuple(len(ax) for ax in self.axes) != self.values.shape:
            raise ValueError("axis lengths must match the value array shape")

    @property
    def spacings(self) -> tuple[float, ...]:
        out = []
        for ax in self.axes:
            d = np.diff(ax)
            if not np.allclose(d, d[0], rtol=1e-9, atol=0.0):
                raise ValueError("grid axes must be uniform")
            out.append(float(d[0]))
        return tuple(out)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacings))

    def total_mass(self) -> float:
        return float(self.values.sum() * self.cell_volume)


def w_m(m: int, s23, gamma: float):
    """Radial kernel of the linearly polarized marginal in the (S2, S3) plane.

    Regularized form (gamma > 0):
        (1/2pi) Re[a / (a^2 + S23^2)^{3/2}],  a = gamma + i m
    with the principal branch.  The gamma -> 0 limit is -m/(2pi (m^2-S23^2)^{3/2})
    inside the ring S23 < m and 0 outside; m = 0 gives a nascent delta.  The
    kernel is negative throughout the open disk and carries a positive
    singular ring on S23 = m that restores unit mass.
    """
    if m < 0 or m != int(m):
        raise ValueError("ring index m must be a nonnegative integer")
    if gamma < 0.0:
        raise ValueError("regularization width must be >= 0")
    m = int(m)
    s23 = np.asarray(s23, dtype=float)
    scalar = s23.ndim == 0
    s23 = np.atleast_1d(s23)
    if gamma == 0.0:
        if np.any(s23 == m):
            raise ValueError("w_m is singular on the ring S23 = m at gamma = 0")
        out = np.zeros_like(s23)
        if m > 0:
            inside = s23 < m
            out[inside] = -m / (2.0 * np.pi * (m**2 - s23[inside] ** 2) ** 1.5)
    else:
        a = gamma + 1j * m
        out = (a / cpow(a * a + s23**2, 1.5)).real / (2.0 * np.pi)
    return out.item() if scalar else out


@dataclass(frozen=True)
class WmRegularized:
    """A gamma-regularized radial kernel, callable on S23 values."""

    m: int
    gamma: float

    def __post_init__(self):
        if self.gamma <= 0.0:
            raise ValueError("regularization width must be positive")

    def __call__(self, s23):
        return w_m(self.m, s23, self.gamma)


def ring_weights(state: LinearPolarizedState) -> dict[int, float]:
    """Beamsplitter-binomial weights of each ring index m in the marginal."""
    weights: dict[int, float] = {}
    for n, pn in state.entries():
        scale = pn / 2.0**n
        for k in range(n + 1):
            m = abs(2 * k - n)
            weights[m] = weights.get(m, 0.0) + scale * math.comb(n, k)
    return weights


def marginal_w1_lp(state: LinearPolarizedState) -> list[tuple[int, float]]:
    """Delta comb of the first Stokes variable: the photon-number distribution.

    Returned symbolically as (location, weight) pairs; deltas are never
    sampled onto grids.
    """
    return state.entries()


def marginal_w23_profile(state: LinearPolarizedState, s23, gamma: float):
    """Radial profile of the (S2, S3) marginal, gamma-regularized."""
    if gamma <= 0.0:
        raise ValueError("grid evaluation requires gamma > 0")
    s23 = np.asarray(s23, dtype=float)
    out = np.zeros_like(s23)
    for m, wt in sorted(ring_weights(state).items()):
        out += wt * w_m(m, s23, gamma)
    return out.item() if out.ndim == 0 else out


def marginal_w23_lp(state: LinearPolarizedState, axes, gamma: float) -> QpdGrid:
    """The (S2, S3) marginal of a linearly polarized mixture on a grid.

    Rotationally symmetric by construction; the total mass tends to the
    state's total weight as gamma -> 0.
    """
    s2_ax, s3_ax = (np.asarray(a, dtype=float) for a in axes)
    s23 = np.hypot(s2_ax[:, None], s3_ax[None, :])
    vals = marginal_w23_profile(state, s23, gamma)
    grid = QpdGrid((s2_ax, s3_ax), vals, coordinate_system="stokes",
                   meta={"gamma": gamma, "ring_weights": ring_weights(state)})
    grid.meta["mass"] = grid.total_mass()
    return grid


def smoothed_pqpd_lp(state: LinearPolarizedState, sigma: float, S1, S2, S3):
    """Smoothed linearly polarized distribution under sigma-wide readout noise.

    Sum of 3-d Gaussians, variance sigma^2 along S1 and n + sigma^2 in the
    (S2, S3) plane; strictly positive and unit-normalized over R^3.  Valid in
    the photon-number-integration regime, so sigma >= 1 is required (the
    expansion behind it needs sigma >> 1).
    """
    if sigma < 1.0:
        raise ValueError("the smoothed form requires sigma >= 1")
    S1, S2, S3 = (np.asarray(a, dtype=float) for a in (S1, S2, S3))
    s23sq = S2**2 + S3**2
    out = np.zeros(np.broadcast(S1, S2, S3).shape)
    norm3 = (2.0 * np.pi) ** 1.5
    for n, pn in state.entries():
        var23 = n + sigma**2
        out = out + pn / (norm3 * sigma * var23) * np.exp(
            -((S1 - n) ** 2) / (2.0 * sigma**2) - s23sq / (2.0 * var23))
    return out.item() if out.ndim == 0 else out


def _chi_s_extent(state: SingleModeState, axis_precision: float) -> float:
    """Half-width beyond which |chi_s| < ~1e-16 along one axis."""
    t = 74.0
    if isinstance(state, Fock) and state.n > 0:
        for _ in range(4):
            t = 74.0 + 2.0 * state.n * math.log(max(t, 2.0))
    return math.sqrt(t / axis_precision)


def wigner(state: SingleModeState, x_axis=None, p_axis=None, *,
           n: int = 256) -> QpdGrid:
    """Wigner function of a single-mode state by Fourier inversion of chi_s.

    Convention: vacuum variance 1/2 in both quadratures, W_vac(0,0) = 1/pi.
    With x_axis/p_axis omitted the natural reciprocal grid of the internal
    transform is returned; otherwise values are interpolated onto the request.
    The normalization error |mass - 1| is reported in meta.
    """
    a1, a2 = gaussian_envelope(state)
    ext1 = _chi_s_extent(state, a1)
    ext2 = _chi_s_extent(state, a2)
    d1, d2 = 2.0 * ext1 / n, 2.0 * ext2 / n
    zr = centered_axis(n, d1)
    zi = centered_axis(n, d2)
    chi = chi_s(state, zr[:, None] + 1j * zi[None, :])
    # W(x, p) = 2 * F[chi_s](sqrt(2) x, sqrt(2) p) with the (2pi)^-2 constant
    wab = dft_grid(chi, (d1, d2), sign=-1, normalization="angular") * 2.0
    ax_x = reciprocal_axis(n, d1) / math.sqrt(2.0)
    ax_p = reciprocal_axis(n, d2) / math.sqrt(2.0)
    imag_residual = float(np.abs(wab.imag).max())
    vals = wab.real
    cell = (ax_x[1] - ax_x[0]) * (ax_p[1] - ax_p[0])
    mass = float(vals.sum() * cell)
    meta = {"mass": mass, "mass_error": abs(mass - 1.0),
            "imag_residual": imag_residual}
    if x_axis is None and p_axis is None:
        return QpdGrid((ax_x, ax_p), vals, coordinate_system="phase-space",
                       meta=meta)
    x_axis = np.asarray(x_axis, dtype=float)
    p_axis = np.asarray(p_axis, dtype=float)
    interp = RegularGridInterpolator((ax_x, ax_p), vals, method="cubic",
                                     bounds_error=False, fill_value=0.0)
    xx, pp = np.meshgrid(x_axis, p_axis, indexing="ij")
    out = interp(np.stack([xx.ravel(), pp.ravel()], axis=-1)).reshape(xx.shape)
    return QpdGrid((x_axis, p_axis), out, coordinate_system="phase-space",
                   meta=meta)


def _delta_pm2(r: float, eps2: float) -> tuple[float, float]:
    return math.exp(2 * r) + eps2, math.exp(-2 * r) + eps2


def _raw_to_normalized(S2, S3, alpha0: complex, eta: float):
    z = (np.asarray(S2, float) - 1j * np.asarray(S3, float)) / (
        math.sqrt(eta) * np.conj(complex(alpha0)))
    return z.real, z.imag


def w23_highlighted_sqz0(point, r: float, eps2: float,
                         coordinate_system: str = "normalized", *,
                         alpha0: complex | None = None,
                         eta: float | None = None):
    """Smoothed highlighted (S2, S3) marginal for a squeezed vacuum signal.

    A normalized Gaussian with variances delta_pm^2 = e^{±2r} + eps^2 in the
    oscillator-normalized plane; positive everywhere.  ``point`` is an
    (s2, s3) pair, or (S2, S3) raw Stokes values when
    coordinate_system="stokes" (then alpha0 and eta supply the mapping and
    the eta |alpha0|^2 Jacobian).
    """
    if eps2 < 0.0:
        raise ValueError("eps^2 must be >= 0")
    a, b = point
    if coordinate_system == "normalized":
        s2, s3 = np.asarray(a, float), np.asarray(b, float)
        jac = 1.0
    elif coordinate_system == "stokes":
        if alpha0 is None or eta is None:
            raise ValueError("raw Stokes evaluation needs alpha0 and eta")
        s2, s3 = _raw_to_normalized(a, b, alpha0, eta)
        jac = eta * abs(alpha0) ** 2
    else:
        raise ValueError(f"unknown coordinate system {coordinate_system!r}")
    dp2, dm2 = _delta_pm2(r, eps2)
    out = np.exp(-0.5 * (s2**2 / dp2 + s3**2 / dm2)) / (
        2.0 * np.pi * math.sqrt(dp2 * dm2)) / jac
    return out.item() if np.ndim(out) == 0 else out


def w23_highlighted_sqz1(point, r: float, eps2: float,
                         coordinate_system: str = "normalized", *,
                         alpha0: complex | None = None,
                         eta: float | None = None):
    """Smoothed highlighted (S2, S3) marginal for a squeezed single photon.

    Polynomial-times-Gaussian surface whose central value is proportional to
    eps^4 - 1: a nonempty negative region exists exactly when eps < 1.
    Coordinate handling matches ``w23_highlighted_sqz0``.
    """
    if eps2 < 0.0:
        raise ValueError("eps^2 must be >= 0")
    a, b = point
    if coordinate_system == "normalized":
        s2, s3 = np.asarray(a, float), np.asarray(b, float)
        jac = 1.0
    elif coordinate_system == "stokes":
        if alpha0 is None or eta is None:
            raise ValueError("raw Stokes evaluation needs alpha0 and eta")
        s2, s3 = _raw_to_normalized(a, b, alpha0, eta)
        jac = eta * abs(alpha0) ** 2
    else:
        raise ValueError(f"unknown coordinate system {coordinate_system!r}")
    dp2, dm2 = _delta_pm2(r, eps2)
    ep, em = math.exp(2 * r), math.exp(-2 * r)
    bracket = (s2**2 * ep / dp2**2 + s3**2 * em / dm2**2
               + (eps2**2 - 1.0) / (dp2 * dm2))
    out = bracket * np.exp(-0.5 * (s2**2 / dp2 + s3**2 / dm2)) / (
        2.0 * np.pi * math.sqrt(dp2 * dm2)) / jac
    return out.item() if np.ndim(out) == 0 else out


def w23_from_wigner_convolution(wigner_grid: QpdGrid, alpha0: complex,
                                eta: float, eps2: float,
                                coordinate_system: str = "normalized") -> QpdGrid:
    """Map a Wigner grid to the smoothed highlighted (S2, S3) marginal.

    In the oscillator-normalized plane the map is s = sqrt(2) (x, p) followed
    by an isotropic Gaussian blur of variance eps^2; at eps = 0 it degenerates
    to the pure change of variables.  Raw Stokes output divides by the
    eta |alpha0|^2 Jacobian and requires a real alpha0 (axis-aligned frame).
    """
    if eps2 < 0.0:
        raise ValueError("eps^2 must be >= 0")
    if wigner_grid.coordinate_system != "phase-space":
        raise ValueError("input must be a Wigner (phase-space) grid")
    ax_x, ax_p = wigner_grid.axes
    vals = wigner_grid.values
    absv = np.abs(vals)
    peak = absv.max()
    edge = max(absv[0, :].max(), absv[-1, :].max(),
               absv[:, 0].max(), absv[:, -1].max())
    wsum = absv.sum()
    for ax, axis in ((ax_x, 1), (ax_p, 0)):
        marg = absv.sum(axis=axis)
        mean = float((marg * ax).sum() / wsum)
        std = math.sqrt(max(float((marg * (ax - mean) ** 2).sum() / wsum), 1e-300))
        if ax.max() - mean < 3.0 * std or mean - ax.min() < 3.0 * std:
            raise GridCoverageError(
                "Wigner grid must extend at least 3 standard deviations past "
                "the distribution mean on every side")
    if edge > 1e-6 * peak:
        raise GridCoverageError(
            f"Wigner grid boundary values are too large (edge/peak = {edge/peak:.2e})")
    s_axes = (ax_x * math.sqrt(2.0), ax_p * math.sqrt(2.0))
    ws = vals / 2.0
    if eps2 > 0.0:
        ds = (s_axes[0][1] - s_axes[0][0], s_axes[1][1] - s_axes[1][0])
        f = dft_grid(ws, ds, sign=-1)
        k2 = reciprocal_axis(len(s_axes[0]), ds[0])
        k3 = reciprocal_axis(len(s_axes[1]), ds[1])
        f *= np.exp(-0.5 * eps2 * (k2[:, None] ** 2 + k3[None, :] ** 2))
        dk = (k2[1] - k2[0], k3[1] - k3[0])
        ws = (dft_grid(f, dk, sign=+1) / (2.0 * np.pi) ** 2).real
    meta = {"eps2": eps2, "source_mass": wigner_grid.meta.get("mass")}
    if coordinate_system == "normalized":
        return QpdGrid(s_axes, ws, coordinate_system="normalized",
                       jacobian=eta * abs(alpha0) ** 2, meta=meta)
    if coordinate_system == "stokes":
        a0 = complex(alpha0)
        if abs(a0.imag) > 1e-12 * abs(a0) or a0.real <= 0:
            raise ValueError("raw Stokes grids need a real positive oscillator amplitude")
        scale = math.sqrt(eta) * a0.real
        jac = eta * abs(alpha0) ** 2
        s3_to_S3 = -scale * s_axes[1]
        order = np.argsort(s3_to_S3)
        return QpdGrid((scale * s_axes[0], s3_to_S3[order]), ws[:, order] / jac,
                       coordinate_system="stokes", jacobian=jac, meta=meta)
    raise ValueError(f"unknown coordinate system {coordinate_system!r}")


@dataclass(frozen=True)
class Sqz1Family:
    """Closed-form negative-region spec for the squeezed single photon."""

    r: float
    eps2: float

    def __post_init__(self):
        if self.eps2 < 0.0:
            raise ValueError("eps^2 must be >= 0")


def _vneg_sqz1(r: float, eps2: float, tol: float = 1e-12) -> float:
    """Negativity volume of the squeezed-single-photon marginal.

    Polar integration over the interior of the analytic zero ellipse; the
    radial part is reduced in closed form, the angular part is adaptive.
    """
    dp2, dm2 = _delta_pm2(r, eps2)
    bconst = (eps2**2 - 1.0) / (dp2 * dm2)
    if bconst >= 0.0:
        return 0.0
    ep, em = math.exp(2 * r), math.exp(-2 * r)
    pref = 1.0 / (2.0 * np.pi * math.sqrt(dp2 * dm2))

    def angular(phi):
        c2, s2 = np.cos(phi) ** 2, np.sin(phi) ** 2
        a = c2 * ep / dp2**2 + s2 * em / dm2**2
        c = c2 / dp2 + s2 / dm2
        t = c * (-bconst / a) / 2.0
        emt = np.exp(-t)
        return (a * (2.0 / c**2) * (1.0 - (1.0 + t) * emt)
                + bconst * (1.0 - emt) / c)

    val, _ = integrate.quad(angular, 0.0, 2.0 * np.pi, epsabs=tol, epsrel=tol,
                            limit=200)
    return -pref * val


def negativity_volume(qpd) -> float:
    """Volume of the negative part of a quasi-probability distribution.

    Accepts a sampled QpdGrid (cell-wise clipping) or a closed-form
    ``Sqz1Family`` spec (analytic zero contour, adaptive angular quadrature).
    """
    if isinstance(qpd, Sqz1Family):
        return _vneg_sqz1(qpd.r, qpd.eps2)
    if isinstance(qpd, QpdGrid):
        neg = np.minimum(qpd.values, 0.0)
        return float(-neg.sum() * qpd.cell_volume)
    raise TypeError("expected a QpdGrid or Sqz1Family")


@dataclass(frozen=True)
class NegativityCheck:
    """Outcome of the eps < 1 observability threshold test."""

    negative: bool
    boundary: bool

    def __bool__(self) -> bool:
        return self.negative


def negativity_condition(eps2: float) -> NegativityCheck:
    """Whether the squeezed-single-photon marginal has a negative region.

    True exactly when eps < 1; the threshold itself reports boundary=True.
    """
    if eps2 < 0.0:
        raise ValueError("eps^2 must be >= 0")
    if eps2 == 1.0:
        return NegativityCheck(False, True)
    return NegativityCheck(eps2 < 1.0, False)
