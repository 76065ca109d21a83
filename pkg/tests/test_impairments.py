"""Distortion coefficients, conditional distortion covariances, hardware
scaling laws, and the phase-noise accumulation variance."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mimosim.impairments import (
    HardwareProfile,
    ImpairmentScaling,
    PhaseNoiseConfig,
    dl_distortion_covariances,
    evm,
    kappa_from_evm,
    phase_noise_variance,
    scaled_kappa,
    ul_distortion_covariances,
)


# ---------------------------------------------------------------------------
# profile and EVM


def test_profile_defaults_are_ideal():
    p = HardwareProfile.ideal()
    assert p.kappa_t_bs == p.kappa_r_bs == p.kappa_t_ue == p.kappa_r_ue == 0.0
    assert p.noise_bs == p.noise_ue == 1.0


def test_profile_symmetric():
    p = HardwareProfile.symmetric(0.0025)
    assert (p.kappa_t_bs, p.kappa_r_bs, p.kappa_t_ue, p.kappa_r_ue) == (0.0025,) * 4


def test_profile_validation():
    with pytest.raises(ValueError):
        HardwareProfile(kappa_t_bs=-0.1)
    with pytest.raises(ValueError):
        HardwareProfile(noise_bs=0.0)
    with pytest.raises(ValueError):
        HardwareProfile(kappa_r_ue=math.inf)
    # far beyond the practical range is legal: the scaling sweeps need it
    assert HardwareProfile(kappa_r_bs=1e4).kappa_r_bs == 1e4


def test_evm_examples():
    assert evm(0.0025) == pytest.approx(0.05)
    assert evm(0.0) == 0.0
    # common cellular transceiver requirements
    assert evm(0.0064) == pytest.approx(0.08)
    assert evm(0.030625) == pytest.approx(0.175)
    assert kappa_from_evm(0.08) == pytest.approx(0.0064)
    assert kappa_from_evm(0.175) == pytest.approx(0.030625)


@given(st.floats(min_value=0.0, max_value=1.0, allow_nan=False))
@settings(max_examples=50, deadline=None)
def test_evm_kappa_roundtrip(kappa):
    assert kappa_from_evm(evm(kappa)) == pytest.approx(kappa, abs=1e-15)


# ---------------------------------------------------------------------------
# conditional distortion covariances


def test_ul_distortion_examples():
    profile = HardwareProfile(kappa_t_ue=0.0025, kappa_r_bs=0.0025)
    ups_t, ups_r = ul_distortion_covariances(1.0, np.ones(4), profile)
    assert ups_t == pytest.approx(0.0025)
    np.testing.assert_allclose(ups_r, 0.0025 * np.eye(4), atol=1e-15)

    ups_t, _ = ul_distortion_covariances(100.0, np.ones(4), profile)
    assert ups_t == pytest.approx(0.25)


def test_ul_distortion_zero_cases():
    out = ul_distortion_covariances(0.0, np.ones(3), HardwareProfile.symmetric(0.01))
    assert out[0] == 0.0
    assert np.all(out[1] == 0.0)
    out = ul_distortion_covariances(5.0, np.ones(3), HardwareProfile.ideal())
    assert out[0] == 0.0
    assert np.all(out[1] == 0.0)


def test_ul_distortion_tracks_received_power():
    h = np.array([1.0, 2.0j, 0.0])
    _, ups_r = ul_distortion_covariances(2.0, h, HardwareProfile(kappa_r_bs=0.01))
    np.testing.assert_allclose(np.diagonal(ups_r), 0.01 * 2.0 * np.array([1.0, 4.0, 0.0]))


def test_dl_distortion_examples():
    profile = HardwareProfile(kappa_t_bs=0.0025, kappa_r_ue=0.01)
    n, p = 4, 2.0
    h = np.array([0.5, -1.0j, 0.25, 1.0])
    ups_t, ups_r = dl_distortion_covariances(p / n * np.eye(n), h, profile)
    np.testing.assert_allclose(ups_t, 0.0025 * (p / n) * np.eye(n), atol=1e-15)
    assert ups_r == pytest.approx(0.01 * p * np.linalg.norm(h) ** 2 / n)


def test_dl_distortion_orthogonal_beam():
    e1 = np.array([1.0, 0.0]).astype(complex)
    e2 = np.array([0.0, 1.0]).astype(complex)
    _, ups_r = dl_distortion_covariances(3.0 * np.outer(e1, e1.conj()), e2, HardwareProfile.symmetric(0.01))
    assert ups_r == 0.0


def test_dl_distortion_dimension_mismatch():
    with pytest.raises(ValueError):
        dl_distortion_covariances(np.eye(3), np.ones(2), HardwareProfile.ideal())


@given(st.floats(min_value=1e-6, max_value=1e3), st.floats(min_value=1.5, max_value=8.0))
@settings(max_examples=30, deadline=None)
def test_distortion_power_linearity(p, factor):
    """Distortion variance is exactly proportional to signal power."""
    profile = HardwareProfile.symmetric(0.0025)
    h = np.array([1.0 + 0.5j, -0.3, 2.0j])
    t1, r1 = ul_distortion_covariances(p, h, profile)
    t2, r2 = ul_distortion_covariances(factor * p, h, profile)
    assert t2 == pytest.approx(factor * t1, rel=1e-12)
    np.testing.assert_allclose(r2, factor * r1, rtol=1e-12)
    w = np.outer(h, h.conj())
    dt1, dr1 = dl_distortion_covariances(p * w, h, profile)
    dt2, dr2 = dl_distortion_covariances(factor * p * w, h, profile)
    np.testing.assert_allclose(dt2, factor * dt1, rtol=1e-12)
    assert dr2 == pytest.approx(factor * dr1, rel=1e-12)


# ---------------------------------------------------------------------------
# hardware scaling law


def test_scaled_kappa_examples():
    law = ImpairmentScaling(exponent_t=0.5, exponent_r=0.5, base_kappa=0.0025)
    assert scaled_kappa(law, 256) == (pytest.approx(0.04), pytest.approx(0.04))
    law = ImpairmentScaling(exponent_t=2.0, exponent_r=2.0, base_kappa=0.0025)
    assert scaled_kappa(law, 10)[0] == pytest.approx(0.25)
    flat = ImpairmentScaling(exponent_t=0.0, exponent_r=0.0, base_kappa=0.0025)
    for n in (1, 64, 4096):
        assert scaled_kappa(flat, n) == (0.0025, 0.0025)


def test_scaled_kappa_respects_bound():
    law = ImpairmentScaling(exponent_t=2.0, exponent_r=2.0, base_kappa=0.0025)
    with pytest.raises(ValueError):
        scaled_kappa(law, 100)  # 0.0025 * 1e4 = 25 > 1
    kt, kr = scaled_kappa(law, 100, max_kappa=None)
    assert kt == kr == pytest.approx(25.0)


def test_scaled_kappa_consistency_with_evm():
    law = ImpairmentScaling(exponent_t=0.25, exponent_r=0.5, base_kappa=0.0025)
    for n in (1, 16, 256):
        kt, kr = scaled_kappa(law, n)
        assert evm(kt) ** 2 == pytest.approx(kt, rel=1e-12)
        assert evm(kr) ** 2 == pytest.approx(kr, rel=1e-12)


def test_scaling_validation():
    with pytest.raises(ValueError):
        ImpairmentScaling(exponent_t=-0.5, exponent_r=0.0, base_kappa=0.01)
    with pytest.raises(ValueError):
        ImpairmentScaling(exponent_t=0.0, exponent_r=0.0, base_kappa=0.01, reference_n=0)


# ---------------------------------------------------------------------------
# phase noise


def test_phase_noise_zero_time():
    cfg = PhaseNoiseConfig(delta_bs=1e-4, delta_ue=1e-4)
    assert phase_noise_variance(0.0, cfg, 10.0, 100.0, 1.0) == 0.0


def test_phase_noise_common_oscillator_merge():
    delta = 2e-4
    cfg = PhaseNoiseConfig(delta_bs=delta, delta_ue=delta, oscillator="common")
    got = phase_noise_variance(7.0, cfg, 3.0, 9.0, 2.0)
    assert got == pytest.approx(2.0 * 3.0 * 7.0 * delta * 9.0)


def test_phase_noise_separate_uses_diagonal_moment():
    cfg = PhaseNoiseConfig(delta_bs=1e-3, delta_ue=1e-4, oscillator="separate")
    got = phase_noise_variance(5.0, cfg, 2.0, 9.0, 2.0)
    assert got == pytest.approx(2.0 * 5.0 * (1e-4 * 9.0 + 1e-3 * 2.0))


def test_phase_noise_array_scaling():
    """Common-oscillator drift grows with array gain, separate stays O(1).

    With maximum-ratio combining m2_full grows like N while m2_diag stays
    bounded, so the normalized variance ratio between the two modes
    grows linearly in N.
    """
    cfg_c = PhaseNoiseConfig(delta_bs=1e-3, oscillator="common")
    cfg_s = PhaseNoiseConfig(delta_bs=1e-3, oscillator="separate")
    ratios = []
    for n in (16, 64, 256):
        m2_full, m2_diag = float(n), 1.0  # MRC moments at R = I
        ratios.append(
            phase_noise_variance(3.0, cfg_c, 1.0, m2_full, m2_diag)
            / phase_noise_variance(3.0, cfg_s, 1.0, m2_full, m2_diag)
        )
    assert ratios[1] == pytest.approx(4.0 * ratios[0], rel=1e-12)
    assert ratios[2] == pytest.approx(16.0 * ratios[0], rel=1e-12)


def test_phase_noise_validation():
    with pytest.raises(ValueError):
        PhaseNoiseConfig(delta_bs=-1e-3)
    with pytest.raises(ValueError):
        PhaseNoiseConfig(oscillator="shared")
    with pytest.raises(ValueError):
        phase_noise_variance(-1.0, PhaseNoiseConfig(), 1.0, 1.0, 1.0)
