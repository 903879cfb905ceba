"""Tomography inversion chain.

Empirical characteristic functions from tomograms, assembly of per-setting
radial scans onto Cartesian grids in the Fourier-conjugate Stokes coordinates
(the measurement geometry samples chi along rays), and FFT inversion to
quasi-probability grids.  Shot-noise variances propagate through every linear
stage.  Negative-frequency content comes from hermitian symmetry instead of
measurement, halving acquisition cost.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .measure import Tomogram
from .numerics import dft_grid, reciprocal_axis
from .pqpd import QpdGrid


class CoverageError(ValueError):
    """Angular or radial sampling does not cover the requested grid."""

    def __init__(self, message: str, worst_gap: float | None = None):
        if worst_gap is not None:
            message = f"{message} (worst gap {worst_gap:.4f})"
        super().__init__(message)
        self.worst_gap = worst_gap


class WindowingError(ValueError):
    """The characteristic function has not decayed at the grid boundary."""


@dataclass
class CharGrid:
    """Complex characteristic-function samples on a centered uniform grid.

    ``variance`` holds per-point shot-noise variances of the complex
    estimator; exact inputs carry zeros.
    """

    axes: tuple
    values: np.ndarray
    variance: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.axes = tuple(np.asarray(ax, dtype=float) for ax in self.axes)
        if tuple(len(ax) for ax in self.axes) != self.values.shape:
            raise ValueError("axis lengths must match the value array shape")

    @property
    def dimension(self) -> int:
        return len(self.axes)

    @property
    def spacings(self) -> tuple[float, ...]:
        return tuple(float(ax[1] - ax[0]) for ax in self.axes)


_CHUNK = 1 << 22


def empirical_char(t: Tomogram, lam):
    """Characteristic-function estimate of one tomogram at lam.

    Exact pmfs evaluate the finite sum (times the analytic smearing factor
    when the tomogram declares a readout width); sample sets average
    exp(i lam y), whose expectation is the smeared characteristic function.
    Returns (value, variance) with variance = (1 - |value|^2)/shots for
    sampled data and 0 for exact pmfs.
    """
    lam = np.asarray(lam, dtype=float)
    scalar = lam.ndim == 0
    lam1 = np.atleast_1d(lam)
    if t.kind == "exact_pmf":
        vals = (np.asarray(t.pmf) * np.exp(1j * lam1[:, None]
                                           * np.asarray(t.support))).sum(axis=1)
        if t.sigma > 0.0:
            vals = vals * np.exp(-0.5 * t.sigma**2 * lam1**2)
        var = np.zeros_like(lam1)
    elif t.kind == "sample_set":
        if t.shots == 0:
            raise ValueError("empty tomogram")
        y = np.asarray(t.samples)
        diffs = np.diff(lam1)
        if len(lam1) > 2 and np.allclose(diffs, diffs[0], rtol=1e-12, atol=0):
            # uniform scan: exp(i lam_j y) = exp(i lam_0 y) * step^j, so one
            # running product replaces a full exp per lam
            phase = np.exp(1j * lam1[0] * y)
            step_ph = np.exp(1j * diffs[0] * y)
            vals = np.empty(lam1.shape, dtype=complex)
            for j in range(len(lam1)):
                vals[j] = phase.mean()
                phase *= step_ph
        else:
            vals = np.empty(lam1.shape, dtype=complex)
            step = max(1, _CHUNK // max(len(y), 1))
            for i in range(0, len(lam1), step):
                block = lam1[i:i + step]
                vals[i:i + step] = np.exp(1j * block[:, None] * y).mean(axis=1)
        var = (1.0 - np.abs(vals) ** 2) / t.shots
        var = np.clip(var, 0.0, None)
    else:
        raise ValueError(f"unknown tomogram kind {t.kind!r}")
    if scalar:
        return vals[0], float(var[0])
    return vals, var


def _worst_gap(angles: np.ndarray, period: float) -> float:
    a = np.sort(np.mod(angles, period))
    gaps = np.diff(np.concatenate([a, [a[0] + period]]))
    return float(gaps.max())


def _interp_error_estimate(table: np.ndarray, axis: int) -> float:
    if table.shape[axis] < 3:
        return float("inf")
    d2 = np.abs(np.diff(table, n=2, axis=axis))
    return float(d2.max()) / 8.0


def assemble_2d(tomograms, axes, n_radial: int = 129,
                lam_max: float | None = None,
                angular_gap_max: float = 0.35) -> CharGrid:
    """Assemble equatorial (theta = pi/2) scans onto a (u2, u3) grid.

    Each tomogram is a phi-ray; chi is sampled on a uniform radial lam grid
    per ray, mirrored to phi + pi by hermitian symmetry, then interpolated
    radially and angularly onto the Cartesian grid.  The origin is pinned to
    1 and hermitian symmetry is enforced on the result.
    """
    u2_ax, u3_ax = (np.asarray(a, float) for a in axes)
    corner = math.hypot(max(-u2_ax.min(), u2_ax.max()),
                        max(-u3_ax.min(), u3_ax.max()))
    if lam_max is None:
        lam_max = corner * (1.0 + 1e-12)
    elif lam_max < corner:
        raise CoverageError(
            f"radial extent {lam_max} does not reach the grid corner {corner:.4f}")
    phis = []
    for t in tomograms:
        if abs(t.setting.theta - math.pi / 2.0) > 1e-9:
            raise ValueError("equatorial assembly needs theta = pi/2 tomograms")
        phis.append(t.setting.phi)
    lam_grid = np.linspace(0.0, lam_max, n_radial)
    vals = np.empty((len(tomograms), n_radial), dtype=complex)
    var = np.empty((len(tomograms), n_radial))
    for i, t in enumerate(tomograms):
        vals[i], var[i] = empirical_char(t, lam_grid)
    # hermitian mirror: chi(-u) = conj(chi(u)) maps a ray to phi + pi
    phis = np.asarray(phis, dtype=float)
    mirror = np.mod(phis + np.pi, 2.0 * np.pi)
    keep = [j for j, p in enumerate(mirror)
            if np.min(np.abs(np.mod(phis - p + np.pi, 2 * np.pi) - np.pi)) > 1e-9]
    full_phi = np.concatenate([phis, mirror[keep]])
    full_vals = np.concatenate([vals, np.conj(vals[keep])], axis=0)
    full_var = np.concatenate([var, var[keep]], axis=0)
    worst = _worst_gap(full_phi, 2.0 * np.pi)
    if worst > angular_gap_max:
        raise CoverageError("angular coverage is insufficient", worst_gap=worst)
    order = np.argsort(np.mod(full_phi, 2.0 * np.pi))
    full_phi = np.mod(full_phi, 2.0 * np.pi)[order]
    full_vals = full_vals[order]
    full_var = full_var[order]

    uu2, uu3 = np.meshgrid(u2_ax, u3_ax, indexing="ij")
    rho = np.hypot(uu2, uu3)
    ang = np.mod(np.arctan2(uu3, uu2), 2.0 * np.pi)
    grid_vals, grid_var = _polar_interp(full_phi, lam_grid, full_vals, full_var,
                                        ang.ravel(), rho.ravel())
    grid_vals = grid_vals.reshape(rho.shape)
    grid_var = grid_var.reshape(rho.shape)
    i0 = np.argmin(np.abs(u2_ax))
    j0 = np.argmin(np.abs(u3_ax))
    if abs(u2_ax[i0]) < 1e-12 and abs(u3_ax[j0]) < 1e-12:
        grid_vals[i0, j0] = 1.0
        grid_var[i0, j0] = 0.0
    cg = CharGrid((u2_ax, u3_ax), grid_vals, grid_var,
                  meta={"worst_gap": worst, "lam_max": lam_max,
                        "n_radial": n_radial,
                        "interp_error_est":
                            _interp_error_estimate(full_vals, 1)
                            + _interp_error_estimate(full_vals, 0)})
    return hermitize(cg)


def _polar_interp(phi_table, lam_table, vals, var, ang, rho):
    """Bilinear interpolation in (phi, lam) from ray tables, phi periodic."""
    nphi = len(phi_table)
    j_hi = np.searchsorted(phi_table, ang, side="right")
    j_lo = j_hi - 1
    phi_lo = phi_table[np.mod(j_lo, nphi)]
    phi_hi = np.where(j_hi < nphi, phi_table[np.mod(j_hi, nphi)],
                      phi_table[0] + 2.0 * np.pi)
    phi_lo = np.where(j_lo < 0, phi_table[-1] - 2.0 * np.pi, phi_lo)
    span = phi_hi - phi_lo
    wa = np.where(span > 0, (ang - phi_lo) / np.where(span > 0, span, 1.0), 0.0)
    j_lo = np.mod(j_lo, nphi)
    j_hi = np.mod(j_hi, nphi)

    dlam = lam_table[1] - lam_table[0]
    k = np.clip((rho / dlam).astype(int), 0, len(lam_table) - 2)
    wr = rho / dlam - k

    out = np.empty(ang.shape, dtype=complex)
    out_var = np.empty(ang.shape)
    v_ll = vals[j_lo, k]
    v_lh = vals[j_lo, k + 1]
    v_hl = vals[j_hi, k]
    v_hh = vals[j_hi, k + 1]
    out = ((1 - wa) * ((1 - wr) * v_ll + wr * v_lh)
           + wa * ((1 - wr) * v_hl + wr * v_hh))
    out_var = (((1 - wa) * (1 - wr)) ** 2 * var[j_lo, k]
               + ((1 - wa) * wr) ** 2 * var[j_lo, k + 1]
               + (wa * (1 - wr)) ** 2 * var[j_hi, k]
               + (wa * wr) ** 2 * var[j_hi, k + 1])
    return out, out_var


def assemble_3d(tomograms, axes, n_radial: int = 129,
                lam_max: float | None = None,
                angular_gap_max: float = 0.5) -> CharGrid:
    """Assemble a (theta, phi) product scan onto a (u1, u2, u3) grid.

    The scan must form a product net with theta spanning [0, pi].  Rays at
    phi + pi are synthesized from conj(chi) at (pi - theta, phi) when not
    measured, then values are interpolated linearly in lam along rays and
    bilinearly across the (theta, phi) net.
    """
    u1_ax, u2_ax, u3_ax = (np.asarray(a, float) for a in axes)
    corner = math.sqrt(max(-u1_ax.min(), u1_ax.max()) ** 2
                       + max(-u2_ax.min(), u2_ax.max()) ** 2
                       + max(-u3_ax.min(), u3_ax.max()) ** 2)
    if lam_max is None:
        lam_max = corner * (1.0 + 1e-12)
    elif lam_max < corner:
        raise CoverageError(
            f"radial extent {lam_max} does not reach the grid corner {corner:.4f}")
    thetas = np.array(sorted({round(t.setting.theta, 12) for t in tomograms}))
    phis = np.array(sorted({round(t.setting.phi, 12) for t in tomograms}))
    if abs(thetas[0]) > 1e-9 or abs(thetas[-1] - math.pi) > 1e-9:
        raise CoverageError("theta scan must span [0, pi] inclusive")
    if not np.allclose(thetas, thetas[::-1] * -1 + math.pi, atol=1e-9):
        raise CoverageError("theta scan must be symmetric under theta -> pi - theta")
    lam_grid = np.linspace(0.0, lam_max, n_radial)
    table = np.full((len(thetas), len(phis), n_radial), np.nan, dtype=complex)
    tvar = np.zeros((len(thetas), len(phis), n_radial))
    for t in tomograms:
        i = int(np.argmin(np.abs(thetas - t.setting.theta)))
        j = int(np.argmin(np.abs(phis - t.setting.phi)))
        table[i, j], tvar[i, j] = empirical_char(t, lam_grid)
    if np.isnan(table).any():
        raise CoverageError("the (theta, phi) scan must be a full product net")
    # extend phi to [0, 2pi) via chi(lam, pi - theta, phi + pi) = conj(chi)
    ext_phi = np.mod(phis + np.pi, 2.0 * np.pi)
    new = [j for j, p in enumerate(ext_phi)
           if np.min(np.abs(np.mod(phis - p + np.pi, 2 * np.pi) - np.pi)) > 1e-9]
    if new:
        full_phi = np.concatenate([phis, ext_phi[new]])
        mirrored = np.conj(table[::-1, new, :])
        table = np.concatenate([table, mirrored], axis=1)
        tvar = np.concatenate([tvar, tvar[::-1, new, :]], axis=1)
    else:
        full_phi = phis
    order = np.argsort(full_phi)
    full_phi = full_phi[order]
    table = table[:, order, :]
    tvar = tvar[:, order, :]
    worst_phi = _worst_gap(full_phi, 2.0 * np.pi)
    worst_theta = float(np.diff(thetas).max())
    if worst_phi > angular_gap_max or worst_theta > angular_gap_max:
        raise CoverageError("angular coverage is insufficient",
                            worst_gap=max(worst_phi, worst_theta))

    U1, U2, U3 = np.meshgrid(u1_ax, u2_ax, u3_ax, indexing="ij", sparse=False)
    lam = np.sqrt(U1**2 + U2**2 + U3**2).ravel()
    with np.errstate(invalid="ignore"):
        th = np.arccos(np.clip(np.divide(U1.ravel(), np.where(lam > 0, lam, 1.0)),
                               -1.0, 1.0))
    th[lam == 0] = math.pi / 2.0
    ph = np.mod(np.arctan2(U3.ravel(), U2.ravel()), 2.0 * np.pi)

    it_hi = np.clip(np.searchsorted(thetas, th, side="right"), 1, len(thetas) - 1)
    it_lo = it_hi - 1
    wt = (th - thetas[it_lo]) / (thetas[it_hi] - thetas[it_lo])

    vals = np.zeros(lam.shape, dtype=complex)
    var = np.zeros(lam.shape)
    for idx, wgt in ((it_lo, 1.0 - wt), (it_hi, wt)):
        row_vals = np.empty(lam.shape, dtype=complex)
        row_var = np.empty(lam.shape)
        for irow in np.unique(idx):
            sel = idx == irow
            rv, rr = _polar_interp(full_phi, lam_grid, table[irow], tvar[irow],
                                   ph[sel], lam[sel])
            row_vals[sel] = rv
            row_var[sel] = rr
        vals += wgt * row_vals
        var += wgt**2 * row_var
    shape = (len(u1_ax), len(u2_ax), len(u3_ax))
    vals = vals.reshape(shape)
    var = var.reshape(shape)
    zero_idx = tuple(int(np.argmin(np.abs(ax))) for ax in (u1_ax, u2_ax, u3_ax))
    if all(abs(ax[i]) < 1e-12 for ax, i in zip((u1_ax, u2_ax, u3_ax), zero_idx)):
        vals[zero_idx] = 1.0
        var[zero_idx] = 0.0
    cg = CharGrid((u1_ax, u2_ax, u3_ax), vals, var,
                  meta={"worst_gap": max(worst_phi, worst_theta),
                        "lam_max": lam_max, "n_radial": n_radial,
                        "interp_error_est":
                            _interp_error_estimate(table, 2)
                            + _interp_error_estimate(table, 1)
                            + _interp_error_estimate(table, 0)})
    return hermitize(cg)


def _conj_flip(a: np.ndarray) -> np.ndarray:
    flipped = np.conj(a[tuple(slice(None, None, -1) for _ in range(a.ndim))])
    return np.roll(flipped, shift=(1,) * a.ndim, axis=tuple(range(a.ndim)))


def hermitize(cg: CharGrid) -> CharGrid:
    """Enforce chi(-u) = conj(chi(u)) by averaging with the reflected grid.

    Idempotent; already-hermitian data is unchanged.  Variances combine
    conservatively (mirrored points may share the same measurements).
    """
    sym = 0.5 * (cg.values + _conj_flip(cg.values))
    var = 0.5 * (cg.variance + np.roll(
        cg.variance[tuple(slice(None, None, -1) for _ in range(cg.variance.ndim))],
        shift=(1,) * cg.variance.ndim, axis=tuple(range(cg.variance.ndim))))
    return CharGrid(cg.axes, sym, var, meta=dict(cg.meta))


def _boundary_max(values: np.ndarray) -> float:
    worst = 0.0
    for axis in range(values.ndim):
        sl = [slice(None)] * values.ndim
        for edge in (0, -1):
            sl[axis] = edge
            worst = max(worst, float(np.abs(values[tuple(sl)]).max()))
    return worst


def _cosine_taper(n: int, frac: float = 0.15) -> np.ndarray:
    ramp = max(2, int(frac * n))
    win = np.ones(n)
    edge = 0.5 * (1.0 - np.cos(np.pi * np.arange(ramp) / ramp))
    win[:ramp] = edge
    win[-ramp:] = edge[::-1]
    return win


def _invert(cg: CharGrid, coordinate_system: str, decay_tol: float,
            window: bool) -> QpdGrid:
    boundary = _boundary_max(cg.values)
    values = cg.values
    windowed = False
    # noisy grids sit on a shot-noise floor: boundary values consistent with
    # zero at five standard deviations are treated as decayed
    noise_floor = 5.0 * math.sqrt(max(_boundary_max(cg.variance), 0.0))
    if boundary > max(decay_tol, noise_floor):
        if not window:
            raise WindowingError(
                f"chi has not decayed at the grid boundary "
                f"(max |chi| = {boundary:.3e} > {decay_tol:.0e}); pass "
                "window=True to taper at the cost of a smoothing bias")
        taper = np.ones(values.shape)
        for axis, ax in enumerate(cg.axes):
            shape = [1] * values.ndim
            shape[axis] = len(ax)
            taper = taper * _cosine_taper(len(ax)).reshape(shape)
        values = values * taper
        windowed = True
    deltas = cg.spacings
    out = dft_grid(values, deltas, sign=-1, normalization="angular")
    axes = tuple(reciprocal_axis(len(ax), d) for ax, d in zip(cg.axes, deltas))
    imag_residual = float(np.abs(out.imag).max())
    cell = float(np.prod(deltas))
    d = values.ndim
    noise_std = math.sqrt(float(cg.variance.sum())) * cell / (2.0 * math.pi) ** d
    grid = QpdGrid(axes, out.real, coordinate_system=coordinate_system,
                   meta={"imag_residual": imag_residual,
                         "boundary_max": boundary,
                         "windowed": windowed,
                         "noise_std": noise_std,
                         "interp_error_est": cg.meta.get("interp_error_est")})
    grid.meta["mass"] = grid.total_mass()
    return grid


def invert_2d(cg: CharGrid, coordinate_system: str = "stokes",
              decay_tol: float = 1e-6, window: bool = False) -> QpdGrid:
    """Fourier inversion of a 2-d characteristic grid to the (S2, S3) marginal.

    Uses the (2*pi)^-2 constant explicitly; the output is real (the imaginary
    residual is reported in meta), with the propagated shot-noise standard
    deviation in meta["noise_std"].  Raises WindowingError when chi exceeds
    ``decay_tol`` at the boundary unless ``window=True`` opts into a cosine
    taper (which biases the result toward smoothness).
    """
    if cg.dimension != 2:
        raise ValueError("invert_2d needs a 2-d grid")
    return _invert(cg, coordinate_system, decay_tol, window)


def invert_3d(cg: CharGrid, coordinate_system: str = "stokes",
              decay_tol: float = 1e-6, window: bool = False) -> QpdGrid:
    """Fourier inversion of a 3-d characteristic grid to the full PQPD.

    Only meaningful on smoothed data: without readout smearing the
    distribution is a delta comb along S1 and no finite grid can hold it.
    """
    if cg.dimension != 3:
        raise ValueError("invert_3d needs a 3-d grid")
    return _invert(cg, coordinate_system, decay_tol, window)
