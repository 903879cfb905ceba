"""Single-mode quantum states and their symmetric characteristic functions.

The state families are immutable value objects.  ``chi_s`` evaluates the
symmetrically ordered characteristic function chi_s(z) = <exp(i(z a^dag +
z* a))>; ``apply_loss`` wraps a state in the beamsplitter (grey filter) loss
map without mutating it.  Photon statistics helpers cover the linearly
polarized special cases used by the measurement simulator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np


@dataclass(frozen=True)
class Vacuum:
    pass


@dataclass(frozen=True)
class Fock:
    n: int

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 0:
            raise ValueError("Fock occupation must be a nonnegative integer")


@dataclass(frozen=True)
class Coherent:
    alpha: complex

    def __post_init__(self):
        if not np.isfinite(complex(self.alpha)):
            raise ValueError("coherent amplitude must be finite")


@dataclass(frozen=True)
class SqueezedVacuum:
    r: float

    def __post_init__(self):
        if not np.isfinite(self.r):
            raise ValueError("squeeze parameter must be finite")


@dataclass(frozen=True)
class SqueezedFock1:
    """Squeezed single photon: the squeezing operator applied to |1>."""

    r: float

    def __post_init__(self):
        if not np.isfinite(self.r):
            raise ValueError("squeeze parameter must be finite")


SingleModeState = Union[Vacuum, Fock, Coherent, SqueezedVacuum, SqueezedFock1]


@dataclass(frozen=True)
class DetectorModel:
    """Unified quantum efficiency and photon-number-integration width.

    ``eta`` absorbs every optical loss into one beamsplitter transmissivity;
    ``sigma`` is the additive Gaussian readout noise in photon-number units.
    """

    eta: float
    sigma: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.eta <= 1.0:
            raise ValueError(f"quantum efficiency must be in (0, 1], got {self.eta}")
        if self.sigma < 0.0:
            raise ValueError(f"integration width must be >= 0, got {self.sigma}")


def laguerre(n: int, x):
    """Laguerre polynomial L_n(x) by the stable three-term recurrence."""
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if n == 0:
        return prev.item() if prev.ndim == 0 else prev
    cur = 1.0 - x
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 1 - x) * cur - k * prev) / (k + 1)
    return cur.item() if cur.ndim == 0 else cur


def chi_s(state: SingleModeState, z):
    """Symmetric characteristic function of ``state`` at complex z.

    Accepts scalars or numpy arrays of z.  Squeezed families follow the
    convention <x^2> = e^{2r}/2, <p^2> = e^{-2r}/2 for the squeezed vacuum.
    """
    z = np.asarray(z, dtype=complex)
    zr, zi = z.real, z.imag
    mod2 = zr * zr + zi * zi
    if isinstance(state, Vacuum):
        out = np.exp(-0.5 * mod2).astype(complex)
    elif isinstance(state, Fock):
        out = laguerre(state.n, mod2) * np.exp(-0.5 * mod2) + 0.0j
    elif isinstance(state, Coherent):
        a = complex(state.alpha)
        out = np.exp(1j * (z * a.conjugate() + z.conjugate() * a) - 0.5 * mod2)
    elif isinstance(state, SqueezedVacuum):
        ep, em = math.exp(2 * state.r), math.exp(-2 * state.r)
        out = np.exp(-0.5 * (ep * zr * zr + em * zi * zi)).astype(complex)
    elif isinstance(state, SqueezedFock1):
        ep, em = math.exp(2 * state.r), math.exp(-2 * state.r)
        q = ep * zr * zr + em * zi * zi
        out = (1.0 - q) * np.exp(-0.5 * q) + 0.0j
    else:
        raise TypeError(f"not a single-mode state: {state!r}")
    return out.item() if out.ndim == 0 else out


def gaussian_envelope(state: SingleModeState) -> tuple[float, float]:
    """Gaussian decay precisions (a_re, a_im) of |chi_s| along Re z, Im z.

    |chi_s(z)| is bounded by a constant times exp(-a_re z'^2/2 - a_im z''^2/2);
    quadratures use this to scale their nodes.
    """
    if isinstance(state, (SqueezedVacuum, SqueezedFock1)):
        return math.exp(2 * state.r), math.exp(-2 * state.r)
    return 1.0, 1.0


@dataclass(frozen=True)
class LossyCharFn:
    """chi_s of ``state`` after a transmissivity-eta grey filter.

    Callable: chi(z) = chi_s(state, sqrt(eta) z) * exp(-(1-eta)|z|^2/2).
    """

    state: SingleModeState
    eta: float

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        damp = np.exp(-0.5 * (1.0 - self.eta) * (z.real**2 + z.imag**2))
        out = np.asarray(chi_s(self.state, math.sqrt(self.eta) * z) * damp)
        return out.item() if out.ndim == 0 else out

    @property
    def envelope(self) -> tuple[float, float]:
        a1, a2 = gaussian_envelope(self.state)
        return (self.eta * a1 + 1.0 - self.eta, self.eta * a2 + 1.0 - self.eta)


def apply_loss(state: SingleModeState, eta: float) -> LossyCharFn:
    """Loss-transformed characteristic function as a new callable."""
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"transmissivity must be in (0, 1], got {eta}")
    return LossyCharFn(state, float(eta))


@dataclass(frozen=True)
class LinearPolarizedState:
    """Diagonal photon-number mixture occupying one polarization mode.

    ``probs[n]`` is the weight of n photons; truncation may only lose mass.
    """

    probs: tuple[float, ...]

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("probs must be a nonempty 1-d sequence")
        if np.any(p < 0):
            raise ValueError("probabilities must be nonnegative")
        total = float(p.sum())
        if not (1.0 - 1e-12 <= total <= 1.0 + 1e-12):
            raise ValueError(f"probabilities must sum to 1 (lost mass < 1e-12), got {total}")
        object.__setattr__(self, "probs", tuple(float(x) for x in p))

    @property
    def n_max(self) -> int:
        return len(self.probs) - 1

    def entries(self):
        """(n, p_n) pairs with nonzero weight."""
        return [(n, p) for n, p in enumerate(self.probs) if p > 0.0]


def default_coherent_n_max(mean: float) -> int:
    """Truncation order keeping the lost Poisson mass below 1e-12."""
    return int(math.ceil(mean + 10.0 * math.sqrt(mean) + 10.0))


def poisson_pmf(mean: float, n_max: int) -> np.ndarray:
    """Poisson weights e^{-mu} mu^n / n! for n = 0..n_max, evaluated stably."""
    n = np.arange(n_max + 1)
    if mean == 0.0:
        out = np.zeros(n_max + 1)
        out[0] = 1.0
        return out
    logs = -mean + n * math.log(mean) - [math.lgamma(k + 1) for k in n]
    return np.exp(np.asarray(logs))


def lp_photon_probs(state: SingleModeState, eta: float,
                    n_max: int | None = None) -> LinearPolarizedState:
    """Detected photon-number distribution of a lossy linearly polarized state.

    Supports the vacuum, the single photon, and coherent states; the loss
    only thins the statistics (single photon: survives with probability eta;
    coherent: stays coherent with mean eta |alpha|^2).
    """
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"quantum efficiency must be in (0, 1], got {eta}")
    if isinstance(state, Vacuum) or (isinstance(state, Fock) and state.n == 0):
        return LinearPolarizedState((1.0,))
    if isinstance(state, Fock) and state.n == 1:
        return LinearPolarizedState((1.0 - eta, eta))
    if isinstance(state, Coherent):
        mean = eta * abs(state.alpha) ** 2
        if n_max is None:
            n_max = default_coherent_n_max(mean)
        return LinearPolarizedState(tuple(poisson_pmf(mean, n_max)))
    raise ValueError(
        f"no closed-form photon statistics implemented for {type(state).__name__}"
    )


CharFn = Callable[[np.ndarray], np.ndarray]


def resolve_char_fn(signal) -> tuple[CharFn, tuple[float, float]]:
    """Normalize a state or characteristic-function callable to (fn, envelope)."""
    if isinstance(signal, LossyCharFn):
        return signal, signal.envelope
    if isinstance(signal, (Vacuum, Fock, Coherent, SqueezedVacuum, SqueezedFock1)):
        return (lambda z: chi_s(signal, z)), gaussian_envelope(signal)
    if callable(signal):
        env = getattr(signal, "envelope", (1.0, 1.0))
        return signal, env
    raise TypeError(f"expected a single-mode state or characteristic function, got {signal!r}")
