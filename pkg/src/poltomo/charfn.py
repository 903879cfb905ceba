"""Polarization characteristic functions chi(u1, u2, u3).

The Fourier-conjugate Stokes coordinates are (u1, u2, u3) with w = u2 + i u3
and lam = sqrt(u1^2 + |w|^2).  Functions here evaluate chi for linearly
polarized number mixtures, two-mode coherent states, and highlighted states
(signal in one polarization, coherent local oscillator in the other), in
exact, asymptotic, and smoothed forms.  All are pure and accept numpy arrays
in the coordinate fields.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import (
    QuadratureConvergenceError,
    QuadratureSpec,
    gauss_hermite_2d,
    one_minus_cos,
    sinc,
)
from .states import (
    LinearPolarizedState,
    SingleModeState,
    chi_s,
    resolve_char_fn,
)


@dataclass(frozen=True)
class CharPoint:
    """A point in the Fourier-conjugate Stokes space.

    Fields may be scalars or broadcastable numpy arrays.
    """

    u1: float
    u2: float
    u3: float

    @property
    def w(self):
        return self.u2 + 1j * np.asarray(self.u3, dtype=float)

    @property
    def lam(self):
        return np.sqrt(np.asarray(self.u1) ** 2 + np.asarray(self.u2) ** 2
                       + np.asarray(self.u3) ** 2)

    @classmethod
    def from_radon(cls, lam, theta, phi) -> "CharPoint":
        """Map a measurement ray (lam, theta, phi) to Cartesian coordinates."""
        lam = np.asarray(lam, dtype=float)
        u1 = lam * np.cos(theta)
        st = np.sin(theta)
        return cls(u1, lam * st * np.cos(phi), lam * st * np.sin(phi))

    def to_radon(self):
        """Inverse of ``from_radon``: lam >= 0, theta in [0, pi], phi in [0, 2pi).

        At lam = 0 the angles are degenerate and returned as zeros.
        """
        lam = self.lam
        with np.errstate(invalid="ignore", divide="ignore"):
            theta = np.where(lam > 0, np.arccos(np.clip(
                np.divide(self.u1, np.where(lam > 0, lam, 1.0)), -1.0, 1.0)), 0.0)
        phi = np.mod(np.arctan2(self.u3, self.u2), 2.0 * np.pi)
        phi = np.where(np.asarray(self.u2) ** 2 + np.asarray(self.u3) ** 2 > 0, phi, 0.0)
        if np.ndim(lam) == 0:
            return float(lam), float(theta), float(phi)
        return lam, theta, phi


@dataclass(frozen=True)
class HighlightedState:
    """Signal state in the H mode plus a coherent local oscillator in V.

    ``alpha0`` is the oscillator amplitude as calibrated at the detectors;
    optical losses act on the signal side only (the grey filter commutes
    through the oscillator up to this recalibration).
    """

    signal: SingleModeState
    alpha0: complex

    def __post_init__(self):
        if abs(complex(self.alpha0)) <= 0.0:
            raise ValueError("the local oscillator must have nonzero amplitude")


@dataclass(frozen=True)
class Inefficiency:
    """Combined loss-plus-readout inefficiency of the highlighted scheme."""

    eta: float
    sigma: float
    alpha0: complex

    def __post_init__(self):
        if not 0.0 < self.eta <= 1.0:
            raise ValueError("eta must be in (0, 1]")
        if self.sigma < 0.0:
            raise ValueError("sigma must be >= 0")
        if abs(complex(self.alpha0)) == 0.0:
            raise ValueError("alpha0 must be nonzero")

    @property
    def eps2(self) -> float:
        return (1.0 - self.eta + self.sigma**2 / abs(self.alpha0) ** 2) / self.eta

    def zeta(self, w):
        """Rescaled Fourier variable sqrt(eta) * alpha0 * conj(w)."""
        return math.sqrt(self.eta) * complex(self.alpha0) * np.conj(np.asarray(w, complex))


def chi_fock_lp(p: CharPoint, n: int):
    """chi for an n-photon state in one polarization mode, the other empty."""
    if n < 0:
        raise ValueError("photon number must be nonnegative")
    lam = p.lam
    base = np.cos(lam) + 1j * np.asarray(p.u1) * sinc(lam)
    out = base**n if n else np.ones_like(base)
    return out.item() if np.ndim(out) == 0 else out


def chi_lp(state: LinearPolarizedState, p: CharPoint):
    """chi of a linearly polarized photon-number mixture (Horner sum)."""
    lam = p.lam
    base = np.cos(lam) + 1j * np.asarray(p.u1) * sinc(lam)
    out = np.zeros_like(base)
    for pn in reversed(state.probs):
        out = out * base + pn
    return out.item() if np.ndim(out) == 0 else out


def chi_two_mode_coherent(p: CharPoint, alpha: complex, alpha0: complex):
    """chi of independent coherent states in the two polarization modes."""
    alpha = complex(alpha)
    alpha0 = complex(alpha0)
    lam = p.lam
    sc = sinc(lam)
    kappa = one_minus_cos(lam) - 1j * np.asarray(p.u1) * sc
    w = p.w
    cross = alpha * alpha0.conjugate() * w
    out = np.exp(-kappa * abs(alpha) ** 2 - np.conj(kappa) * abs(alpha0) ** 2
                 + 1j * (cross + np.conj(cross)) * sc)
    return out.item() if np.ndim(out) == 0 else out


def smooth_char(chi_value, lam, sigma: float):
    """Apply the photon-number-integration factor exp(-sigma^2 lam^2 / 2)."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    out = np.asarray(chi_value) * np.exp(-0.5 * sigma**2 * np.asarray(lam) ** 2)
    return out.item() if np.ndim(out) == 0 else out


def chi_highlighted_asymptotic(p2, hs: HighlightedState, det) -> complex:
    """Bright-oscillator limit of the highlighted chi on the u1 = 0 slice.

    chi_tilde(0, u2, u3) = chi_s(zeta) exp(-eps^2 |zeta|^2 / 2) with
    zeta = sqrt(eta) alpha0 conj(w); smoothing and loss live entirely in eps^2.
    """
    u2, u3 = p2
    ineff = Inefficiency(det.eta, det.sigma, hs.alpha0)
    zeta = ineff.zeta(u2 + 1j * np.asarray(u3, dtype=float))
    out = np.asarray(chi_s(hs.signal, zeta) * np.exp(
        -0.5 * ineff.eps2 * (zeta.real**2 + zeta.imag**2)))
    return out.item() if out.ndim == 0 else out


_W_DOMAIN_MSG = "the u1 = 0 highlighted forms are defined for |w| < 2*pi"


def chi_highlighted_exact(p2, signal, alpha0: complex, *,
                          spec: QuadratureSpec = QuadratureSpec(tol=1e-8),
                          return_error: bool = False):
    """Exact highlighted chi(0, u2, u3) by 2-d adaptive Gauss-Hermite quadrature.

    ``signal`` is a single-mode state or a characteristic-function callable
    (e.g. the output of ``apply_loss``).  The integrand is chi_s against a
    Gaussian kernel of precision cot^2(|w|/2) centered at
    2 alpha0 (conj(w)/|w|) tan(|w|/2); nodes follow the combined envelope.
    Raises QuadratureConvergenceError when successive orders disagree.
    """
    u2, u3 = p2
    w = complex(u2) + 1j * complex(u3)
    aw = abs(w)
    if aw >= 2.0 * math.pi:
        raise ValueError(_W_DOMAIN_MSG)
    if aw == 0.0:
        return (1.0 + 0.0j, 0.0) if return_error else 1.0 + 0.0j
    alpha0 = complex(alpha0)
    fn, (a1, a2) = resolve_char_fn(signal)
    half = 0.5 * aw
    s2 = math.sin(half) ** 2
    c = (math.cos(half) / math.sin(half)) ** 2
    mu = 2.0 * alpha0 * w.conjugate() / aw * math.tan(half)
    prec = (c + a1, c + a2)
    centers = (c * mu.real / prec[0], c * mu.imag / prec[1])

    def integrand(zr, zi):
        z = zr + 1j * zi
        kern = np.exp(-0.5 * c * ((zr - mu.real) ** 2 + (zi - mu.imag) ** 2))
        return fn(z) * kern

    res = gauss_hermite_2d(integrand, centers, prec, spec)
    value = res.value / (2.0 * math.pi * s2)
    if not res.converged:
        raise QuadratureConvergenceError(
            "highlighted characteristic-function quadrature did not converge",
            res.error / (2.0 * math.pi * s2))
    if return_error:
        return value, res.error / (2.0 * math.pi * s2)
    return value


def _exact_prefactors(aw: float, r: float, eta: float):
    dp2 = eta * math.exp(2 * r) + 1.0 - eta
    dm2 = eta * math.exp(-2 * r) + 1.0 - eta
    half = 0.5 * aw
    s2 = math.sin(half) ** 2
    c = (math.cos(half) / math.sin(half)) ** 2
    kp2 = dp2 + c
    km2 = dm2 + c
    c0 = 1.0 / (math.sqrt(kp2 * km2) * s2)
    return dp2, dm2, c, kp2, km2, c0


def chi_sqz0_exact(p2, r: float, eta: float, alpha0: complex) -> complex:
    """Exact highlighted chi(0, u2, u3) for a lossy squeezed vacuum signal.

    Closed form: C0 exp{-(2/|w|^2)[D+^2 Re^2(alpha0 w*)/k+^2
    + D-^2 Im^2(alpha0 w*)/k-^2]} with D±^2 = eta e^{±2r} + 1 - eta and
    k±^2 = D±^2 + cot^2(|w|/2).  Valid for |w| < 2*pi (best below pi).
    """
    u2, u3 = p2
    w = complex(u2) + 1j * complex(u3)
    aw = abs(w)
    if aw >= 2.0 * math.pi:
        raise ValueError(_W_DOMAIN_MSG)
    if aw == 0.0:
        return 1.0 + 0.0j
    dp2, dm2, _, kp2, km2, c0 = _exact_prefactors(aw, r, eta)
    x = complex(alpha0) * w.conjugate()
    expo = -(2.0 / aw**2) * (dp2 * x.real**2 / kp2 + dm2 * x.imag**2 / km2)
    return c0 * math.exp(expo) + 0.0j


def chi_sqz1_exact(p2, r: float, eta: float, alpha0: complex) -> complex:
    """Exact highlighted chi(0, u2, u3) for a lossy squeezed single photon.

    Same Gaussian as ``chi_sqz0_exact`` times the bracket
    C0^2 (eta cos|w| + 1 - eta) - (4 eta / |w|^2) cot^2(|w|/2)
    [e^{2r} Re^2(alpha0 w*)/k+^4 + e^{-2r} Im^2(alpha0 w*)/k-^4].
    """
    u2, u3 = p2
    w = complex(u2) + 1j * complex(u3)
    aw = abs(w)
    if aw >= 2.0 * math.pi:
        raise ValueError(_W_DOMAIN_MSG)
    if aw == 0.0:
        return 1.0 + 0.0j
    dp2, dm2, c, kp2, km2, c0 = _exact_prefactors(aw, r, eta)
    x = complex(alpha0) * w.conjugate()
    bracket = c0**2 * (eta * math.cos(aw) + 1.0 - eta) - (4.0 * eta / aw**2) * c * (
        math.exp(2 * r) * x.real**2 / kp2**2 + math.exp(-2 * r) * x.imag**2 / km2**2)
    expo = -(2.0 / aw**2) * (dp2 * x.real**2 / kp2 + dm2 * x.imag**2 / km2)
    return c0 * bracket * math.exp(expo) + 0.0j
