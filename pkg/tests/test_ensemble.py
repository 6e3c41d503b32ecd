import math

import numpy as np
import pytest

from chainqed.core import (DriveConfig, EmitterParams, Geometry, coherent_scattering_amplitude,
                           input_amplitude, optical_depth, transmission_coefficient)
from chainqed.ensemble import (FLAG_EFFECTIVE_COUPLING, FLAG_SUBWAVELENGTH, BraggGeometry,
                               anti_bragg_angle, antibragg_chain, bragg_angle, bragg_chain,
                               chain_factor, combined_chain, effective_couplings,
                               random_distance_g2_mc, respond, waveguide_chain,
                               waveguide_chain_direct)
from chainqed.errors import NoPhysicalAngle, UnsupportedGeometry
from chainqed.response import EnsembleResponse, SingleEmitterResponse
from chainqed.single_emitter import incoherent_freq, response_waveguide

W = np.linspace(-6, 6, 241)


def test_single_emitter_chain_matches_single_emitter():
    p = EmitterParams(0.02, 0.7)
    chain = waveguide_chain(p, DriveConfig.waveguide(0.01, 1))
    one = response_waveguide(p, DriveConfig.waveguide(0.01))
    assert chain.alpha_out == one.alpha_out
    assert np.array_equal(chain.psi_incoh_freq(W), one.psi_incoh_freq(W))


def test_two_emitters_hand_expansion():
    p = EmitterParams(0.01)
    t0 = 1 - 2 * p.beta
    r = waveguide_chain(p, DriveConfig.waveguide(0.01, 2))
    expected = 2 * t0**2 * incoherent_freq(p, 0.01, 0.0)
    assert r.psi_incoh_freq(0.0) == pytest.approx(expected, rel=1e-14)
    d = waveguide_chain_direct(p, DriveConfig.waveguide(0.01, 2))
    assert d.psi_incoh_freq(0.0) == pytest.approx(expected, rel=1e-14)


def test_empty_chain():
    p = EmitterParams(0.01, 0.3)
    for solver in (waveguide_chain, waveguide_chain_direct):
        r = solver(p, DriveConfig.waveguide(0.01, 0))
        assert r.alpha_out == pytest.approx(input_amplitude(p, 0.01))
        assert not np.any(r.psi_incoh_samples)


@pytest.mark.parametrize("delta", [0.0, 0.4, -1.7])
def test_zero_frequency_branch_is_the_limit(delta):
    p = EmitterParams(0.01, delta)
    n = 250
    at_zero = chain_factor(p, n, np.zeros(1))[0]
    t = transmission_coefficient(p, delta)
    assert at_zero == pytest.approx(n * t ** (2 * (n - 1)), rel=1e-12)
    near = chain_factor(p, n, np.array([1e-8]))[0]
    assert near == pytest.approx(at_zero, rel=1e-10)


@pytest.mark.parametrize("beta,n", [(0.001, 2), (0.0005, 4), (0.0002, 10)])
def test_low_optical_depth_limit(beta, n):
    p = EmitterParams(beta)
    od = optical_depth(p, n)
    assert od < 0.01
    r = waveguide_chain(p, DriveConfig.waveguide(1.0, n))
    exact = r.psi_incoh_freq(W)
    approx = n * incoherent_freq(p, 1.0, W)
    assert np.max(np.abs(exact - approx) / np.abs(approx)) < 0.01


@pytest.mark.parametrize("beta,n,delta", [(0.001, 12, 0.0), (0.001, 10, 0.5), (0.0005, 20, 0.0)])
def test_low_optical_depth_error_is_first_order(beta, n, delta):
    # the neglected attenuation is linear in the accumulated single-pass loss
    p = EmitterParams(beta, delta)
    r = waveguide_chain(p, DriveConfig.waveguide(1.0, n))
    err = np.max(np.abs(r.psi_incoh_freq(W) / (n * incoherent_freq(p, 1.0, W)) - 1))
    bound = (n - 1) * 2 * abs(1 - transmission_coefficient(p, delta))
    assert err <= bound


def test_coherent_decay_recurrence():
    p = EmitterParams(0.03, 1.1)
    t = abs(transmission_coefficient(p, p.delta))
    a = [abs(waveguide_chain(p, DriveConfig.waveguide(0.01, n)).alpha_out) for n in range(40)]
    for n in range(39):
        assert a[n + 1] == pytest.approx(t * a[n], rel=1e-13)


def test_bragg_and_waveguide_pair_spectra_identical():
    p = EmitterParams(0.01)
    b = bragg_chain(p, DriveConfig.external(0.02, 37, Geometry.BRAGG))
    w = waveguide_chain(p, DriveConfig.waveguide(0.02, 37))
    assert np.array_equal(b.psi_incoh_samples, w.psi_incoh_samples)


def test_bragg_coherent_output_is_sum_over_emitters():
    # each scattered amplitude is attenuated by the emitters behind it
    p = EmitterParams(0.01)
    t0 = 1 - 2 * p.beta
    a_sc = coherent_scattering_amplitude(p, 0.01)
    for n in (1, 2, 7, 60):
        r = bragg_chain(p, DriveConfig.external(0.01, n, Geometry.BRAGG))
        assert r.alpha_out == pytest.approx(a_sc * sum(t0**k for k in range(n)), rel=1e-12)
        assert r.psi_coh == pytest.approx(r.alpha_out**2)


def test_external_geometries_reject_detuning():
    p = EmitterParams(0.01, 0.5)
    with pytest.raises(UnsupportedGeometry):
        bragg_chain(p, DriveConfig.external(0.01, 3, Geometry.BRAGG))
    with pytest.raises(UnsupportedGeometry):
        antibragg_chain(p, DriveConfig.external(0.01, 3, Geometry.ANTI_BRAGG))
    with pytest.raises(UnsupportedGeometry):
        combined_chain(p, DriveConfig.combined(0.01, 1.0, 3))


def test_mode_mismatch_rejected():
    p = EmitterParams(0.01)
    with pytest.raises(UnsupportedGeometry):
        waveguide_chain(p, DriveConfig.external(0.01, 3, Geometry.BRAGG))


def test_antibragg_coherent_parity():
    p = EmitterParams(0.01)
    a_sc = coherent_scattering_amplitude(p, 0.01)
    for n in range(1, 8):
        r = antibragg_chain(p, DriveConfig.external(0.01, n, Geometry.ANTI_BRAGG))
        assert r.alpha_out == (a_sc if n % 2 else 0)
        assert r.psi_coh == pytest.approx(r.alpha_out**2, rel=1e-15, abs=0)


def test_antibragg_spectrum_is_direct_sum():
    p = EmitterParams(0.02)
    n = 25
    r = antibragg_chain(p, DriveConfig.external(1.0, n, Geometry.ANTI_BRAGG))
    loss = np.abs(transmission_coefficient(p, W)) ** 2
    direct = sum(loss**k for k in range(n)) * incoherent_freq(p, 1.0, W)
    assert np.allclose(r.psi_incoh_freq(W), direct, rtol=1e-12, atol=0)


def test_antibragg_single_emitter_exact():
    p = EmitterParams(0.01)
    r = antibragg_chain(p, DriveConfig.external(0.01, 1, Geometry.ANTI_BRAGG))
    assert np.array_equal(r.psi_incoh_freq(W), incoherent_freq(p, 0.01, W))


def test_antibragg_plateau():
    p = EmitterParams(0.01)
    a_sc2 = coherent_scattering_amplitude(p, 1.0) ** 2
    r = antibragg_chain(p, DriveConfig.external(1.0, 2000, Geometry.ANTI_BRAGG))
    assert abs(r.psi_incoh_freq(0.0) / a_sc2) == pytest.approx(1 / (p.beta * (1 - p.beta)), rel=1e-12)


def brute_force_combined(p, r, n, omega):
    """Per-emitter sum with every factor written out."""
    beta_eff, carried, total = [], 1.0, 0.0
    t0 = 1 - 2 * p.beta
    for k in range(n):
        beta_eff.append(p.beta * (1 + r / t0**k))
    for k in range(n):
        g = 2 * beta_eff[k]
        g_w = 2 * beta_eff[k] / (1 - 2j * omega)
        downstream = abs(1 - 2 * p.beta / (1 - 2j * omega)) ** (2 * (n - 1 - k))
        total += -(carried**2) * 2 * g * abs(g_w) ** 2 / beta_eff[k] * downstream
        carried *= 1 - 2 * beta_eff[k]
    return input_amplitude(p, 1.0) ** 2 * total, input_amplitude(p, 1.0) * carried


@pytest.mark.parametrize("r,n", [(2.0, 1), (2.0, 29), (10.0, 6), (0.5, 80), (-0.3, 12)])
def test_combined_matches_brute_force(r, n):
    p = EmitterParams(0.01)
    resp = combined_chain(p, DriveConfig.combined(1.0, r, n))
    for w in (0.0, 0.37, 2.2):
        spec, alpha = brute_force_combined(p, r, n, w)
        assert resp.psi_incoh_freq(w) == pytest.approx(spec, rel=1e-11)
        assert resp.alpha_out == pytest.approx(alpha, rel=1e-11)


def test_combined_zero_ratio_bit_identical_to_waveguide():
    p = EmitterParams(0.01)
    c = combined_chain(p, DriveConfig.combined(0.01, 0.0, 57))
    w = waveguide_chain(p, DriveConfig.waveguide(0.01, 57))
    assert c.alpha_out == w.alpha_out
    assert np.array_equal(c.psi_incoh_samples, w.psi_incoh_samples)


def test_self_consistent_combined_is_rescaled_waveguide():
    # the actual guided drive plus the external one decays exactly as t0^(n-1)
    p = EmitterParams(0.01)
    r, n = 2.0, 20
    c = combined_chain(p, DriveConfig.combined(1.0, r, n), self_consistent=True)
    w = waveguide_chain(p, DriveConfig.waveguide(1.0, n))
    assert np.allclose(c.psi_incoh_freq(W), (1 + r) ** 2 * w.psi_incoh_freq(W), rtol=1e-10, atol=0)


def test_effective_couplings_grow_along_chain():
    p = EmitterParams(0.01)
    b = effective_couplings(p, 2.0, 30)
    assert b[0] == pytest.approx(0.03)
    assert np.all(np.diff(b) > 0)
    flagged = combined_chain(p, DriveConfig.combined(0.01, 10.0, 40))
    assert FLAG_EFFECTIVE_COUPLING in flagged.flags


def test_antiphase_combined_flagged():
    p = EmitterParams(0.01)
    r = combined_chain(p, DriveConfig.combined(0.01, -0.2, 5))
    assert any("anti-phase" in f for f in r.flags)


def test_bragg_angles():
    assert bragg_angle(BraggGeometry(1.0, 1.0, 1.0, 1)) == pytest.approx(math.pi / 2)
    # guided wavelength lambda / n_eff: cos = m lambda / a - n_eff
    assert bragg_angle(BraggGeometry(1.0, 1.0, 1.2, 1)) == pytest.approx(math.acos(-0.2))
    assert anti_bragg_angle(BraggGeometry(2.0, 1.0, 1.0, 1)) == pytest.approx(math.acos(-0.25))
    with pytest.raises(NoPhysicalAngle, match="m=3"):
        bragg_angle(BraggGeometry(1.0, 1.0, 1.0, 3))


def test_subwavelength_lattice_flagged():
    assert FLAG_SUBWAVELENGTH in BraggGeometry(0.5).flags
    assert not BraggGeometry(1.5).flags
    with pytest.raises(ValueError):
        BraggGeometry(-1.0)


def test_respond_dispatch():
    p = EmitterParams(0.01)
    assert isinstance(respond(p, DriveConfig.external(0.01)), SingleEmitterResponse)
    r = respond(p, DriveConfig.external(0.01, 3, Geometry.ANTI_BRAGG))
    assert isinstance(r, EnsembleResponse) and r.geometry is Geometry.ANTI_BRAGG


def test_spectrum_sampled_on_symmetric_grid_is_symmetric():
    p = EmitterParams(0.02, 1.3)
    r = waveguide_chain(p, DriveConfig.waveguide(0.01, 80))
    s = r.psi_incoh_samples
    assert np.array_equal(s, s[::-1])


class TestMonteCarlo:
    drive = staticmethod(lambda n: DriveConfig.external(0.01, n, Geometry.BRAGG))

    def test_single_emitter_is_exactly_antibunched(self):
        est = random_distance_g2_mc(EmitterParams(0.01), self.drive(1), 1000, seed=3)
        assert est.estimate == pytest.approx(0.0, abs=1e-20)

    def test_deterministic_for_fixed_seed(self):
        p = EmitterParams(0.01)
        a = random_distance_g2_mc(p, self.drive(5), 20_000, seed=11, chunk_size=3000)
        b = random_distance_g2_mc(p, self.drive(5), 20_000, seed=11, chunk_size=3000)
        assert a == b
        c = random_distance_g2_mc(p, self.drive(5), 20_000, seed=12, chunk_size=3000)
        assert c.estimate != a.estimate

    def test_unscaled_pair_intensity(self):
        est = random_distance_g2_mc(EmitterParams(0.01), self.drive(4), 100_000, seed=5, pair_scale=1.0)
        assert abs(est.estimate - 2 * (1 - 1 / 4)) < 3 * est.stderr

    def test_large_n_tends_to_one(self):
        est = random_distance_g2_mc(EmitterParams(0.01), self.drive(200), 20_000, seed=2)
        assert abs(est.estimate - (1 - 1 / 200)) < 3 * est.stderr
        assert abs(est.estimate - 1) < 0.05

    def test_guards(self):
        with pytest.raises(ValueError):
            random_distance_g2_mc(EmitterParams(0.01), self.drive(2), 99, seed=0)
        with pytest.raises(UnsupportedGeometry):
            random_distance_g2_mc(EmitterParams(0.01, 1.0), self.drive(2), 1000, seed=0)
