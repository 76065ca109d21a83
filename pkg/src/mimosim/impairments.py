"""Transceiver hardware impairment model.

Residual hardware imperfections are modeled as additive Gaussian
distortion noise whose variance is proportional to the signal power at
the point where it is injected; the proportionality coefficients
(``kappa``) are the squared error-vector magnitudes of the transmitter
and receiver chains.  This module holds the coefficient bookkeeping, the
conditional distortion covariances for one channel use, antenna-scaling
laws for hardware quality, and the phase-noise accumulation variance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def _check_kappa(name: str, value: float) -> None:
    if not (value >= 0.0 and math.isfinite(value)):
        raise ValueError(f"{name} must be finite and >= 0, got {value}")


@dataclass(frozen=True)
class HardwareProfile:
    """Distortion coefficients and thermal noise of one BS-UE link.

    ``kappa_t_*`` are transmitter coefficients, ``kappa_r_*`` receiver
    coefficients, each the squared EVM of that chain.  Practical
    transceivers sit in [0, 1] (LTE EVM limits map to kappa in
    [0.0064, 0.0306]); values above 1 are accepted because the
    antenna-scaling studies sweep kappa far beyond the practical range.
    """

    kappa_t_bs: float = 0.0
    kappa_r_bs: float = 0.0
    kappa_t_ue: float = 0.0
    kappa_r_ue: float = 0.0
    noise_bs: float = 1.0
    noise_ue: float = 1.0

    def __post_init__(self):
        for name in ("kappa_t_bs", "kappa_r_bs", "kappa_t_ue", "kappa_r_ue"):
            _check_kappa(name, getattr(self, name))
        if not self.noise_bs > 0.0:
            raise ValueError(f"noise_bs must be positive, got {self.noise_bs}")
        if not self.noise_ue > 0.0:
            raise ValueError(f"noise_ue must be positive, got {self.noise_ue}")

    @classmethod
    def ideal(cls, noise_bs: float = 1.0, noise_ue: float = 1.0) -> "HardwareProfile":
        return cls(noise_bs=noise_bs, noise_ue=noise_ue)

    @classmethod
    def symmetric(cls, kappa: float, noise_bs: float = 1.0, noise_ue: float = 1.0) -> "HardwareProfile":
        """Same coefficient on all four chains (the common benchmark setup)."""
        return cls(kappa, kappa, kappa, kappa, noise_bs, noise_ue)


def evm(kappa: float) -> float:
    """Error-vector magnitude sqrt(kappa) of a chain with coefficient kappa."""
    _check_kappa("kappa", kappa)
    return math.sqrt(kappa)


def kappa_from_evm(value: float) -> float:
    """Inverse of :func:`evm`: the distortion coefficient is EVM squared."""
    if not (value >= 0.0 and math.isfinite(value)):
        raise ValueError(f"EVM must be finite and >= 0, got {value}")
    return value * value


def ul_distortion_covariances(p_ue: float, h: np.ndarray, profile: HardwareProfile):
    """Conditional uplink distortion covariances for one channel use.

    Given the channel realization ``h``, the UE transmitter injects scalar
    distortion of variance ``kappa_t_ue * p_ue`` (amplified by the channel)
    and the BS receiver injects per-antenna distortion with variance
    proportional to the locally received power.

    Returns
    -------
    (float, numpy.ndarray)
        The UE-side scalar variance and the BS-side diagonal covariance
        ``kappa_r_bs * p_ue * diag(|h_i|^2)``.
    """
    if not p_ue >= 0.0:
        raise ValueError(f"p_ue must be non-negative, got {p_ue}")
    h = np.asarray(h)
    upsilon_t = profile.kappa_t_ue * p_ue
    big_upsilon_r = profile.kappa_r_bs * p_ue * np.diag(np.abs(h) ** 2)
    return upsilon_t, big_upsilon_r


def dl_distortion_covariances(beam_corr: np.ndarray, h: np.ndarray, profile: HardwareProfile):
    """Conditional downlink distortion covariances for one channel use.

    ``beam_corr`` is the transmit-signal correlation matrix W (power
    included).  The BS transmitter distorts each antenna in proportion to
    that antenna's emitted power, i.e. covariance
    ``kappa_t_bs * diag(W_11, ..., W_NN)``; the UE receiver sees scalar
    distortion of variance ``kappa_r_ue * h^T W h*`` (its received power).
    """
    beam_corr = np.asarray(beam_corr, dtype=np.complex128)
    h = np.asarray(h, dtype=np.complex128)
    if beam_corr.shape[0] != beam_corr.shape[1] or beam_corr.shape[0] != h.shape[0]:
        raise ValueError("beam correlation and channel dimensions do not match")
    big_upsilon_t = profile.kappa_t_bs * np.diag(np.diagonal(beam_corr).real)
    received = (h.T @ beam_corr @ h.conj()).real
    upsilon_r = profile.kappa_r_ue * float(received)
    return big_upsilon_t, upsilon_r


@dataclass(frozen=True)
class ImpairmentScaling:
    """Antenna-scaling law kappa(n) = base_kappa * (n / reference_n)^exponent.

    Separate exponents for the transmitter and receiver chains of the
    scaled (BS) side.  ``exponent = 0`` freezes hardware quality; positive
    exponents model cheaper hardware as the array grows.
    """

    exponent_t: float
    exponent_r: float
    base_kappa: float
    reference_n: int = 1

    def __post_init__(self):
        _check_kappa("base_kappa", self.base_kappa)
        if self.exponent_t < 0 or self.exponent_r < 0:
            raise ValueError("scaling exponents must be non-negative")
        if int(self.reference_n) < 1:
            raise ValueError(f"reference_n must be >= 1, got {self.reference_n}")


def scaled_kappa(scaling: ImpairmentScaling, n_antennas: int, max_kappa: float | None = 1.0):
    """Evaluate the scaling law at ``n_antennas``.

    Returns the pair ``(kappa_t, kappa_r)``.  Results above ``max_kappa``
    (default 1, the edge of the practical range) raise; pass
    ``max_kappa=None`` for the deliberately-degrading sweeps that push far
    beyond it.
    """
    if int(n_antennas) < 1:
        raise ValueError(f"n_antennas must be >= 1, got {n_antennas}")
    ratio = n_antennas / scaling.reference_n
    kappa_t = scaling.base_kappa * ratio**scaling.exponent_t
    kappa_r = scaling.base_kappa * ratio**scaling.exponent_r
    if max_kappa is not None and max(kappa_t, kappa_r) > max_kappa:
        raise ValueError(
            f"scaled kappa ({kappa_t:g}, {kappa_r:g}) exceeds {max_kappa:g} at "
            f"n={n_antennas}; pass max_kappa=None to allow"
        )
    return kappa_t, kappa_r


@dataclass(frozen=True)
class PhaseNoiseConfig:
    """Free-running oscillator phase-noise model.

    ``delta_bs``/``delta_ue`` are the per-channel-use phase-increment
    variances of the BS and UE oscillators.  ``oscillator`` selects whether
    the BS antennas share one oscillator ("common") or run independent
    ones ("separate"); with separate oscillators the BS contribution loses
    array gain coherence.
    """

    delta_bs: float = 0.0
    delta_ue: float = 0.0
    oscillator: str = "common"

    def __post_init__(self):
        if self.delta_bs < 0 or self.delta_ue < 0:
            raise ValueError("phase-increment variances must be non-negative")
        if self.oscillator not in ("common", "separate"):
            raise ValueError(f"oscillator must be 'common' or 'separate', got {self.oscillator!r}")


def phase_noise_variance(
    t: float,
    cfg: PhaseNoiseConfig,
    p_ue: float,
    m2_full: float,
    m2_diag: float,
) -> float:
    """Accumulated phase-noise distortion variance ``t`` uses after estimation.

    ``m2_full`` is E{|v^H h|^2} of the combined link and ``m2_diag`` the
    per-antenna sum E{sum_i |h_i|^2 |v_i|^2}; a common BS oscillator
    drifts coherently across the array (full moment), separate oscillators
    decohere antenna by antenna (diagonal moment).
    """
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")
    if not p_ue >= 0.0:
        raise ValueError(f"p_ue must be non-negative, got {p_ue}")
    bs_moment = m2_full if cfg.oscillator == "common" else m2_diag
    return p_ue * t * (cfg.delta_ue * m2_full + cfg.delta_bs * bs_moment)
