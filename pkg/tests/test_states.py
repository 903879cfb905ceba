import math

import numpy as np
import pytest

from poltomo.states import (
    Coherent,
    DetectorModel,
    Fock,
    LinearPolarizedState,
    SqueezedFock1,
    SqueezedVacuum,
    Vacuum,
    apply_loss,
    chi_s,
    default_coherent_n_max,
    laguerre,
    lp_photon_probs,
)

ALL_STATES = [Vacuum(), Fock(0), Fock(1), Fock(4), Coherent(0.7 - 0.4j),
              SqueezedVacuum(0.6), SqueezedVacuum(-0.3), SqueezedFock1(0.5)]


def random_z(rng, size):
    return rng.normal(scale=1.5, size=size) + 1j * rng.normal(scale=1.5, size=size)


def test_chi_s_at_origin_is_one():
    for state in ALL_STATES:
        assert chi_s(state, 0.0) == pytest.approx(1.0)


def test_chi_s_frozen_values():
    # squeezed vacuum at r=0 is the bare Gaussian
    assert chi_s(SqueezedVacuum(0.0), 1.0) == pytest.approx(math.exp(-0.5))
    # squeezed single photon at r=0, z=1: (1 - 1) e^{-1/2} = 0; agrees with
    # the Laguerre route L_1(1) e^{-1/2}
    assert chi_s(SqueezedFock1(0.0), 1.0 + 0.0j) == pytest.approx(0.0, abs=1e-15)
    assert laguerre(1, 1.0) == pytest.approx(0.0)


def test_vacuum_fock0_squeezed0_coincide():
    rng = np.random.default_rng(0)
    z = random_z(rng, 50)
    a = chi_s(Vacuum(), z)
    assert np.abs(chi_s(Fock(0), z) - a).max() < 1e-15
    assert np.abs(chi_s(SqueezedVacuum(0.0), z) - a).max() < 1e-15
    assert np.abs(chi_s(Coherent(0.0), z) - a).max() < 1e-15


def test_squeezed_fock1_at_zero_squeezing_equals_fock1():
    rng = np.random.default_rng(1)
    z = random_z(rng, 200)
    assert np.abs(chi_s(SqueezedFock1(0.0), z) - chi_s(Fock(1), z)).max() < 1e-12


def test_chi_s_hermiticity_and_bound():
    rng = np.random.default_rng(2)
    for state in ALL_STATES:
        z = random_z(rng, 1000)
        vals = chi_s(state, z)
        assert np.abs(chi_s(state, -z) - np.conj(vals)).max() < 1e-14
        assert np.abs(vals).max() <= 1.0 + 1e-12


def test_fock_chi_s_laguerre_form():
    rng = np.random.default_rng(3)
    z = random_z(rng, 20)
    m = np.abs(z) ** 2
    for n in (2, 3, 7):
        expect = laguerre(n, m) * np.exp(-0.5 * m)
        assert np.abs(chi_s(Fock(n), z) - expect).max() < 1e-14


def test_apply_loss_on_coherent_is_attenuation():
    rng = np.random.default_rng(4)
    z = random_z(rng, 100)
    eta = 0.55
    lossy = apply_loss(Coherent(1.3 - 0.2j), eta)
    target = chi_s(Coherent(math.sqrt(eta) * (1.3 - 0.2j)), z)
    assert np.abs(lossy(z) - target).max() < 1e-14


def test_apply_loss_identity_and_bound():
    rng = np.random.default_rng(5)
    z = random_z(rng, 100)
    for state in ALL_STATES:
        lossy = apply_loss(state, 1.0)
        assert np.abs(lossy(z) - chi_s(state, z)).max() < 1e-15
        partial = apply_loss(state, 0.7)
        assert np.all(np.abs(partial(z))
                      <= np.abs(chi_s(state, math.sqrt(0.7) * z)) + 1e-15)
        assert partial(0.0) == pytest.approx(1.0)


def test_apply_loss_composes():
    rng = np.random.default_rng(6)
    z = random_z(rng, 128)
    for state in (Fock(1), SqueezedVacuum(0.4), Coherent(0.9j)):
        once = apply_loss(state, 0.6 * 0.85)
        twice_inner = apply_loss(state, 0.6)
        # second filter acts on the already-lossy characteristic function
        eta2 = 0.85
        composed = twice_inner(math.sqrt(eta2) * z) * np.exp(
            -0.5 * (1 - eta2) * np.abs(z) ** 2)
        assert np.abs(composed - once(z)).max() < 1e-12


def test_apply_loss_squeezed_vacuum_variances():
    # lossy squeezed vacuum is Gaussian with D_pm^2 = eta e^{±2r} + 1 - eta
    r, eta = 0.45, 0.7
    lossy = apply_loss(SqueezedVacuum(r), eta)
    dp2 = eta * math.exp(2 * r) + 1 - eta
    dm2 = eta * math.exp(-2 * r) + 1 - eta
    for z in (0.3, 0.3j, 0.2 + 0.5j):
        z = complex(z)
        expect = math.exp(-0.5 * (dp2 * z.real**2 + dm2 * z.imag**2))
        assert lossy(z) == pytest.approx(expect, rel=1e-13)


def test_apply_loss_rejects_bad_eta():
    for eta in (0.0, -0.1, 1.2):
        with pytest.raises(ValueError):
            apply_loss(Vacuum(), eta)


def test_lp_photon_probs_single_photon():
    lp = lp_photon_probs(Fock(1), 0.6)
    assert lp.probs == pytest.approx((0.4, 0.6))


def test_lp_photon_probs_coherent_poisson_oracle():
    lp = lp_photon_probs(Coherent(1.0), 1.0, n_max=20)
    expect = [math.exp(-1.0) / math.factorial(n) for n in range(21)]
    assert np.allclose(lp.probs, expect, atol=1e-15)


def test_lp_photon_probs_vacuum_and_rejections():
    assert lp_photon_probs(Vacuum(), 0.3).probs == (1.0,)
    assert lp_photon_probs(Fock(0), 0.3).probs == (1.0,)
    with pytest.raises(ValueError):
        lp_photon_probs(SqueezedVacuum(0.5), 0.9)
    with pytest.raises(ValueError):
        lp_photon_probs(Fock(2), 0.9)


def test_default_truncation_keeps_mass():
    for mean in (0.3, 4.0, 25.0):
        lp = lp_photon_probs(Coherent(math.sqrt(mean)), 1.0)
        assert 1.0 - sum(lp.probs) < 1e-12
        assert lp.n_max == default_coherent_n_max(mean)


def test_linear_polarized_state_validation():
    with pytest.raises(ValueError):
        LinearPolarizedState((0.5, -0.1, 0.6))
    with pytest.raises(ValueError):
        LinearPolarizedState((0.5, 0.4))  # lost mass above 1e-12
    with pytest.raises(ValueError):
        LinearPolarizedState((0.7, 0.7))  # gained mass
    lp = LinearPolarizedState((0.25, 0.5, 0.25))
    assert lp.n_max == 2
    assert lp.entries() == [(0, 0.25), (1, 0.5), (2, 0.25)]


def test_detector_model_validation():
    DetectorModel(1.0, 0.0)
    DetectorModel(0.4, 100.0)
    with pytest.raises(ValueError):
        DetectorModel(0.0, 1.0)
    with pytest.raises(ValueError):
        DetectorModel(0.5, -1.0)


def test_state_validation():
    with pytest.raises(ValueError):
        Fock(-1)
    with pytest.raises(ValueError):
        SqueezedVacuum(float("nan"))
    with pytest.raises(ValueError):
        Coherent(complex("inf"))
