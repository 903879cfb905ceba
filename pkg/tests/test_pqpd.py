import math

import numpy as np
import pytest
from scipy import integrate

from poltomo.pqpd import (
    GridCoverageError,
    QpdGrid,
    Sqz1Family,
    StokesPoint,
    WmRegularized,
    marginal_w1_lp,
    marginal_w23_lp,
    marginal_w23_profile,
    negativity_condition,
    negativity_volume,
    ring_weights,
    smoothed_pqpd_lp,
    w23_from_wigner_convolution,
    w23_highlighted_sqz0,
    w23_highlighted_sqz1,
    w_m,
    wigner,
)
from poltomo.states import (
    Coherent,
    Fock,
    LinearPolarizedState,
    SqueezedFock1,
    SqueezedVacuum,
    Vacuum,
    lp_photon_probs,
)

TWO_PI = 2.0 * math.pi


# ----------------------------------------------------------- ring kernels --

def test_w_m_limits_and_examples():
    assert w_m(1, 0.0, 0.0) == pytest.approx(-1.0 / TWO_PI, abs=1e-12)
    assert w_m(1, 2.0, 0.0) == 0.0
    assert w_m(1, 1.5, 0.0) == 0.0
    # nascent delta normalizer at the origin: (1/2pi)/gamma^2
    assert w_m(0, 0.0, 1e-3) == pytest.approx(1.0 / (TWO_PI * 1e-6), rel=1e-12)
    # gamma -> 0 closed limit inside the ring
    s = 0.6
    assert w_m(2, s, 0.0) == pytest.approx(-2.0 / (TWO_PI * (4 - s * s) ** 1.5))


def test_w_m_gamma_limit_consistency():
    # the regularized form approaches the closed gamma = 0 limit off the ring
    for m, s in ((1, 0.3), (1, 1.7), (3, 2.0), (2, 2.5)):
        seq = [w_m(m, s, g) for g in (1e-4, 1e-6, 1e-8)]
        assert seq[-1] == pytest.approx(w_m(m, s, 0.0), abs=1e-4)


def test_w_m_singular_ring_rejected():
    with pytest.raises(ValueError):
        w_m(1, 1.0, 0.0)
    with pytest.raises(ValueError):
        w_m(0, 0.0, 0.0)
    with pytest.raises(ValueError):
        w_m(-1, 0.5, 0.1)
    with pytest.raises(ValueError):
        WmRegularized(1, 0.0)


def test_w_m_normalization_regularized():
    # integral over the plane is exactly 1 for any gamma > 0
    for m in range(4):
        kern = WmRegularized(m, 1e-3)
        f = lambda s: TWO_PI * s * kern(s)
        v1, _ = integrate.quad(f, 0.0, 50.0, points=[m, 0.5 * m] if m else None,
                               limit=2000)
        v2, _ = integrate.quad(f, 50.0, np.inf, limit=400)
        assert v1 + v2 == pytest.approx(1.0, abs=1e-4)


def line_integral(kern, c, v_max=30.0):
    """Integral of kern(sqrt(c^2 + t^2)) over the line, via t = c sinh v."""
    f = lambda v: 2.0 * c * np.cosh(v) * kern(c * np.cosh(v))
    pts = [np.arccosh(1.0 / c)] if c < 1.0 else None
    val, _ = integrate.quad(f, 0.0, v_max, points=pts, limit=2000)
    return val


def test_w1_line_integral_nullification():
    # chords inside the ring integrate to ~0; the tangent line is large
    kern = WmRegularized(1, 1e-3)
    inner = line_integral(kern, 0.5)
    tangent = line_integral(kern, 1.0)
    assert abs(inner) < 1e-2 * abs(tangent)


# -------------------------------------------------------------- marginals --

def test_ring_weights_binomial():
    # two photons split 50/50: half the weight returns to the center ring
    state = LinearPolarizedState((0.0, 0.0, 1.0))
    assert ring_weights(state) == pytest.approx({0: 0.5, 2: 0.5})
    mix = LinearPolarizedState((0.4, 0.6))
    assert ring_weights(mix) == pytest.approx({0: 0.4, 1: 0.6})


def test_marginal_w1_comb():
    assert marginal_w1_lp(LinearPolarizedState((1.0,))) == [(0, 1.0)]
    assert marginal_w1_lp(LinearPolarizedState((0.4, 0.6))) == [(0, 0.4), (1, 0.6)]
    pois = lp_photon_probs(Coherent(1.0), 1.0)
    comb = marginal_w1_lp(pois)
    for n, p in comb[:8]:
        assert p == pytest.approx(math.exp(-1.0) / math.factorial(n))


def test_marginal_w23_profile_matches_kernel_mixture():
    gamma = 1e-3
    s23 = np.linspace(0.0, 3.0, 50)
    mix = LinearPolarizedState((0.4, 0.6))
    expect = 0.4 * w_m(0, s23, gamma) + 0.6 * w_m(1, s23, gamma)
    assert np.allclose(marginal_w23_profile(mix, s23, gamma), expect, atol=1e-15)
    fock2 = LinearPolarizedState((0.0, 0.0, 1.0))
    expect2 = 0.5 * (w_m(0, s23, gamma) + w_m(2, s23, gamma))
    assert np.allclose(marginal_w23_profile(fock2, s23, gamma), expect2, atol=1e-15)


def test_marginal_w23_grid_rotational_symmetry():
    gamma = 1e-2
    ax = np.linspace(-2.0, 2.0, 41)
    grid = marginal_w23_lp(LinearPolarizedState((0.3, 0.7)), (ax, ax), gamma)
    # values at (a, b) and (b, -a) coincide: the surface depends only on S23
    assert np.allclose(grid.values, np.rot90(grid.values), atol=1e-15)
    r = math.hypot(ax[7], ax[31])
    assert grid.values[7, 31] == pytest.approx(
        float(marginal_w23_profile(LinearPolarizedState((0.3, 0.7)), r, gamma)))


def test_marginal_w23_requires_regularization():
    with pytest.raises(ValueError):
        marginal_w23_profile(LinearPolarizedState((1.0,)), 0.5, 0.0)


# ------------------------------------------------------------ smoothed LP --

def test_smoothed_pqpd_lp_values():
    vac = LinearPolarizedState((1.0,))
    sig = 3.0
    assert smoothed_pqpd_lp(vac, sig, 0.0, 0.0, 0.0) == pytest.approx(
        1.0 / ((2 * np.pi) ** 1.5 * sig**3))
    fock5 = LinearPolarizedState((0.0,) * 5 + (1.0,))
    got = smoothed_pqpd_lp(fock5, 100.0, 5.0, 0.0, 0.0)
    assert got == pytest.approx(1.0 / ((2 * np.pi) ** 1.5 * 100.0 * (5 + 1e4)))
    # decay far away
    assert smoothed_pqpd_lp(fock5, 100.0, 5e3, 0.0, 0.0) < 1e-20


def test_smoothed_pqpd_lp_positive_and_normalized():
    state = LinearPolarizedState((0.2, 0.5, 0.3))
    rng = np.random.default_rng(7)
    pts = rng.normal(scale=30.0, size=(3, 2000))
    vals = smoothed_pqpd_lp(state, 5.0, *pts)
    assert np.all(vals >= 0.0)
    # normalization by construction of the Gaussian mixture
    ax = np.linspace(-60, 60, 121)
    cell = (ax[1] - ax[0]) ** 3
    total = smoothed_pqpd_lp(state, 5.0, ax[:, None, None], ax[None, :, None],
                             ax[None, None, :]).sum() * cell
    assert total == pytest.approx(1.0, abs=1e-6)


def test_smoothed_pqpd_lp_rejects_small_sigma():
    with pytest.raises(ValueError):
        smoothed_pqpd_lp(LinearPolarizedState((1.0,)), 0.5, 0.0, 0.0, 0.0)


# ------------------------------------------------------------------ wigner --

def test_wigner_vacuum():
    g = wigner(Vacuum())
    i0, j0 = len(g.axes[0]) // 2, len(g.axes[1]) // 2
    assert g.values[i0, j0] == pytest.approx(1.0 / np.pi, rel=1e-10)
    assert g.meta["mass"] == pytest.approx(1.0, abs=1e-6)


def test_wigner_single_photon_minimum_two_resolutions():
    for n in (192, 256):
        g = wigner(SqueezedFock1(0.0), n=n)
        i0, j0 = len(g.axes[0]) // 2, len(g.axes[1]) // 2
        assert g.values[i0, j0] == pytest.approx(-1.0 / np.pi, rel=1e-9)
        assert g.meta["mass"] == pytest.approx(1.0, abs=1e-6)


def test_wigner_squeezed_vacuum_variances():
    r = 0.5
    g = wigner(SqueezedVacuum(r))
    cell = g.cell_volume
    x, p = g.axes
    varx = float((g.values * x[:, None] ** 2).sum() * cell)
    varp = float((g.values * p[None, :] ** 2).sum() * cell)
    assert varx == pytest.approx(math.exp(2 * r) / 2, rel=1e-9)
    assert varp == pytest.approx(math.exp(-2 * r) / 2, rel=1e-9)


def test_wigner_interpolated_axes():
    ax = np.linspace(-2.0, 2.0, 81)
    g = wigner(Fock(1), ax, ax)
    i0 = 40
    assert g.axes[0][i0] == 0.0
    assert g.values[i0, i0] == pytest.approx(-1.0 / np.pi, rel=1e-5)


# ------------------------------------------------- highlighted closed forms --

def test_w23_sqz0_examples():
    assert w23_highlighted_sqz0((0.0, 0.0), 0.0, 0.0) == pytest.approx(1 / TWO_PI)
    assert w23_highlighted_sqz0((0.0, 0.0), 0.0, 1.0) == pytest.approx(1 / (2 * TWO_PI))
    assert w23_highlighted_sqz0((80.0, 80.0), 0.0, 1.0) == pytest.approx(0.0, abs=1e-300)
    # positive everywhere
    rng = np.random.default_rng(8)
    pts = rng.normal(scale=4.0, size=(2, 500))
    assert np.all(w23_highlighted_sqz0((pts[0], pts[1]), 0.4, 0.3) > 0.0)


def test_w23_sqz1_examples():
    assert w23_highlighted_sqz1((0.0, 0.0), 0.0, 0.0) == pytest.approx(-1 / TWO_PI)
    assert w23_highlighted_sqz1((0.0, 0.0), 0.0, 1.0) == pytest.approx(0.0, abs=1e-15)
    # zero contour on the unit circle at r = 0, eps = 0
    for ang in np.linspace(0, 2 * np.pi, 7):
        v = w23_highlighted_sqz1((np.cos(ang), np.sin(ang)), 0.0, 0.0)
        assert v == pytest.approx(0.0, abs=1e-15)


def test_w23_raw_coordinates_jacobian():
    # raw values are the normalized surface divided by eta |alpha0|^2 at the
    # mapped point
    a0, eta = 6.0, 0.8
    S2, S3 = 3.0, -2.0
    s2, s3 = StokesPoint(0.0, S2, S3).normalized(a0, eta)
    raw = w23_highlighted_sqz0((S2, S3), 0.2, 0.4, "stokes", alpha0=a0, eta=eta)
    norm = w23_highlighted_sqz0((s2, s3), 0.2, 0.4)
    assert raw == pytest.approx(norm / (eta * a0**2))
    # total mass in raw coordinates is still 1
    ax = np.linspace(-40, 40, 161)
    vals = w23_highlighted_sqz0((ax[:, None], ax[None, :]), 0.2, 0.4, "stokes",
                                alpha0=a0, eta=eta)
    assert vals.sum() * (ax[1] - ax[0]) ** 2 == pytest.approx(1.0, abs=1e-6)


def test_sqz1_consistency_with_wigner_at_zero_inefficiency():
    # at eps = 0 the marginal is the coordinate-mapped Wigner function
    g = wigner(SqueezedFock1(0.0))
    x, p = g.axes
    sel = (np.abs(x) < 3.0)[:, None] & (np.abs(p) < 3.0)[None, :]
    xx, pp = np.meshgrid(x, p, indexing="ij")
    expect = w23_highlighted_sqz1(
        (math.sqrt(2) * xx[sel], math.sqrt(2) * pp[sel]), 0.0, 0.0)
    assert np.abs(0.5 * g.values[sel] - expect).max() < 1e-6


def test_convolution_identity_at_zero_inefficiency():
    g = wigner(Fock(1))
    out = w23_from_wigner_convolution(g, 5.0, 0.9, 0.0)
    assert np.allclose(out.values, g.values / 2.0)
    assert np.allclose(out.axes[0], g.axes[0] * math.sqrt(2))
    assert out.jacobian == pytest.approx(0.9 * 25.0)


def test_convolution_matches_closed_forms():
    g1 = wigner(SqueezedFock1(0.0))
    out = w23_from_wigner_convolution(g1, 8.0, 0.9, 0.7)
    s2, s3 = np.meshgrid(out.axes[0], out.axes[1], indexing="ij")
    ref = w23_highlighted_sqz1((s2, s3), 0.0, 0.7)
    peak = np.abs(ref).max()
    assert np.abs(out.values - ref).max() < 1e-4 * peak
    g0 = wigner(Vacuum())
    out0 = w23_from_wigner_convolution(g0, 8.0, 0.9, 0.5)
    s2, s3 = np.meshgrid(out0.axes[0], out0.axes[1], indexing="ij")
    ref0 = w23_highlighted_sqz0((s2, s3), 0.0, 0.5)
    assert np.abs(out0.values - ref0).max() < 1e-4 * ref0.max()


def test_convolution_squeezed_case():
    r = math.log(2.0)
    g = wigner(SqueezedFock1(r))
    out = w23_from_wigner_convolution(g, 8.0, 0.9, 0.7)
    s2, s3 = np.meshgrid(out.axes[0], out.axes[1], indexing="ij")
    ref = w23_highlighted_sqz1((s2, s3), r, 0.7)
    assert np.abs(out.values - ref).max() < 1e-4 * np.abs(ref).max()


def test_convolution_raw_output():
    g = wigner(Vacuum())
    out = w23_from_wigner_convolution(g, 6.0, 0.8, 0.3, "stokes")
    S2, S3 = np.meshgrid(out.axes[0], out.axes[1], indexing="ij")
    ref = w23_highlighted_sqz0((S2, S3), 0.0, 0.3, "stokes", alpha0=6.0, eta=0.8)
    assert np.abs(out.values - ref).max() < 1e-4 * ref.max()


def test_convolution_coverage_error():
    # a clipped Wigner grid must be rejected
    ax = np.linspace(-1.0, 1.0, 32)
    vals = np.exp(-(ax[:, None] ** 2 + ax[None, :] ** 2))
    clipped = QpdGrid((ax, ax), vals, coordinate_system="phase-space")
    with pytest.raises(GridCoverageError):
        w23_from_wigner_convolution(clipped, 5.0, 0.9, 0.5)


# -------------------------------------------------------------- negativity --

V_NEG_R0_EPS0 = 2 * math.exp(-0.5) - 1.0          # exact radial reduction
V_NEG_R0_EPS07 = 0.012597619323597                # frozen radial reduction


def vneg_radial_r0(eps2):
    a = 1.0 - eps2**2
    d2 = 1.0 + eps2
    t = a / (2 * d2)
    return (a * (1 - math.exp(-t)) - 2 * d2 * (1 - (1 + t) * math.exp(-t))) / d2**2


def vneg_bruteforce(r, eps2):
    f = lambda s3, s2: min(w23_highlighted_sqz1((s2, s3), r, eps2), 0.0)
    val, err = integrate.dblquad(f, -4, 4, -4, 4, epsabs=1e-11, epsrel=1e-11)
    return -val, err


def test_negativity_volume_anchors():
    assert negativity_volume(Sqz1Family(0.0, 0.0)) == pytest.approx(
        V_NEG_R0_EPS0, abs=1e-10)
    assert negativity_volume(Sqz1Family(0.0, 0.7)) == pytest.approx(
        V_NEG_R0_EPS07, abs=1e-10)
    # the independent radial reduction agrees
    assert vneg_radial_r0(0.7) == pytest.approx(V_NEG_R0_EPS07, abs=1e-12)


def test_negativity_volume_against_bruteforce():
    for r, eps2 in ((0.0, 0.7), (math.log(2.0), 0.7), (0.3, 0.2)):
        brute, err = vneg_bruteforce(r, eps2)
        assert negativity_volume(Sqz1Family(r, eps2)) == pytest.approx(
            brute, abs=max(1e-7, 10 * err))


def test_negativity_volume_zero_beyond_threshold():
    assert negativity_volume(Sqz1Family(0.0, 1.0)) == 0.0
    assert negativity_volume(Sqz1Family(0.5, 1.3)) == 0.0


def test_negativity_volume_monotone_in_eps2():
    for r in (0.0, math.log(2.0)):
        ladder = [negativity_volume(Sqz1Family(r, e))
                  for e in np.linspace(0.0, 1.0, 11)]
        assert all(a >= b - 1e-12 for a, b in zip(ladder, ladder[1:]))
        assert ladder[-1] == 0.0


def test_negativity_volume_on_grid():
    ax = np.linspace(-6.0, 6.0, 401)
    vals = w23_highlighted_sqz1((ax[:, None], ax[None, :]), 0.0, 0.7)
    grid = QpdGrid((ax, ax), vals, coordinate_system="normalized")
    assert negativity_volume(grid) == pytest.approx(V_NEG_R0_EPS07, abs=1e-4)
    assert negativity_volume(grid) >= 0.0


def test_negative_depth_shallower_with_squeezing():
    ax = np.linspace(-4.0, 4.0, 201)
    m1 = w23_highlighted_sqz1((ax[:, None], ax[None, :]), 0.0, 0.7).min()
    m2 = w23_highlighted_sqz1((ax[:, None], ax[None, :]), math.log(2.0), 0.7).min()
    assert m1 < m2 < 0.0


def test_negativity_condition():
    assert bool(negativity_condition(0.0)) is True
    assert negativity_condition(0.0).boundary is False
    check = negativity_condition(1.0)
    assert bool(check) is False and check.boundary is True
    assert bool(negativity_condition(0.9999)) is True
    assert bool(negativity_condition(1.5)) is False
    with pytest.raises(ValueError):
        negativity_condition(-0.1)


def test_negativity_volume_bad_input():
    with pytest.raises(TypeError):
        negativity_volume(np.zeros((3, 3)))
