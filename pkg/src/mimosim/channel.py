"""Antenna-array covariance models for the base-station channel.

Three families are supported: uncorrelated (scaled identity), exponential
correlation along a uniform linear array, and the one-ring scattering
model parameterized by mean angle of arrival and angular spread.  All
models share the same per-antenna average gain, so the trace of an
``n``-antenna covariance is exactly ``n * gain``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.linalg import toeplitz

_MODELS = ("uncorrelated", "exponential", "one-ring")

# Absolute tolerance for the one-ring angular integrals (adaptive quadrature).
ONE_RING_QUAD_TOL = 1e-10


@dataclass(frozen=True)
class CovarianceSpec:
    """Declarative description of a covariance model.

    Parameters beyond ``model`` and ``n_antennas`` are model-specific:
    ``coeff`` is the (possibly complex) neighbour correlation of the
    exponential model; ``mean_angle_deg``/``spread_deg``/``spacing``
    parameterize the one-ring model (angles in degrees, spacing in
    wavelengths).  ``gain`` is the common per-antenna average channel gain.
    """

    model: str
    n_antennas: int
    gain: float = 1.0
    coeff: complex = 0.0
    mean_angle_deg: float = 30.0
    spread_deg: float = 10.0
    spacing: float = 0.5

    def __post_init__(self):
        if self.model not in _MODELS:
            raise ValueError(f"unknown covariance model {self.model!r}; expected one of {_MODELS}")
        if int(self.n_antennas) < 1:
            raise ValueError(f"n_antennas must be >= 1, got {self.n_antennas}")
        if not (self.gain > 0.0 and math.isfinite(self.gain)):
            raise ValueError(f"gain must be positive and finite, got {self.gain}")
        if self.model == "exponential" and abs(self.coeff) > 1.0:
            raise ValueError(f"|coeff| must be <= 1, got {abs(self.coeff):g}")
        if self.model == "one-ring":
            if not 0.0 < self.spread_deg <= 90.0:
                raise ValueError(f"spread_deg must lie in (0, 90], got {self.spread_deg}")
            if not self.spacing > 0.0:
                raise ValueError(f"spacing must be positive, got {self.spacing}")

    def build(self) -> np.ndarray:
        if self.model == "uncorrelated":
            return self.gain * np.eye(self.n_antennas, dtype=np.complex128)
        if self.model == "exponential":
            return covariance_exponential(self)
        return covariance_one_ring(self)


def covariance_exponential(spec: CovarianceSpec) -> np.ndarray:
    """Exponential-correlation covariance for a uniform linear array.

    Entry (i, j) is ``gain * coeff^(j-i)`` above the diagonal and the
    conjugate mirror below it, i.e. correlation decays geometrically with
    antenna separation and the phase of ``coeff`` steers the correlation.
    The eigenvalue spectrum depends only on ``|coeff|``.
    """
    if spec.model != "exponential":
        raise ValueError(f"spec.model is {spec.model!r}, not 'exponential'")
    n = spec.n_antennas
    idx = np.arange(n)
    lag = idx[None, :] - idx[:, None]  # j - i
    mag = np.abs(spec.coeff) ** np.abs(lag)
    # coeff^(j-i) for j >= i, conjugate symmetric below: one phase formula
    # e^{1j*angle*lag} covers both signs of the lag.
    phase = np.exp(1j * np.angle(spec.coeff) * lag)
    return spec.gain * mag * phase


def _one_ring_lag(k: int, mean_rad: float, spread_rad: float, spacing: float) -> complex:
    # (1/(2*Delta)) * integral over [mean-Delta, mean+Delta] of
    # exp(-1j*2*pi*spacing*k*sin(theta)) d(theta); k indexes the first
    # Toeplitz column (lower triangle), so the upper triangle carries the
    # conjugate phase +2*pi*spacing*(n-m)*sin(theta).
    z = -2.0 * math.pi * spacing * k

    def re_part(theta):
        return math.cos(z * math.sin(theta))

    def im_part(theta):
        return math.sin(z * math.sin(theta))

    lo, hi = mean_rad - spread_rad, mean_rad + spread_rad
    total = 0.0 + 0.0j
    for fn, unit in ((re_part, 1.0), (im_part, 1.0j)):
        out = quad(fn, lo, hi, epsabs=ONE_RING_QUAD_TOL, epsrel=0.0, limit=200, full_output=1)
        if len(out) > 3:  # quadpack appended a warning message
            raise RuntimeError(f"one-ring quadrature did not converge at lag {k}: {out[3]}")
        val, abserr = out[0], out[1]
        if abserr > 1e-8:
            raise RuntimeError(
                f"one-ring quadrature error {abserr:g} above tolerance at lag {k}"
            )
        total += unit * val
    return total / (2.0 * spread_rad)


def covariance_one_ring(spec: CovarianceSpec) -> np.ndarray:
    """One-ring scattering covariance for a uniform linear array.

    Models a ring of scatterers around the user seen from the array under
    angles uniform on [mean - spread, mean + spread]; entry (m, n) is the
    angular average of the plane-wave phasor exp(j*2*pi*spacing*(n-m)*
    sin(theta)).  Narrow spreads
    give strongly rank-deficient covariances.  Integrals are evaluated by
    adaptive quadrature to absolute tolerance 1e-10; non-convergence is
    raised, never silently accepted.
    """
    if spec.model != "one-ring":
        raise ValueError(f"spec.model is {spec.model!r}, not 'one-ring'")
    mean = math.radians(spec.mean_angle_deg)
    spread = math.radians(spec.spread_deg)
    col = np.array(
        [_one_ring_lag(k, mean, spread, spec.spacing) for k in range(spec.n_antennas)]
    )
    # Hermitian Toeplitz: first column holds lags m-n = 0..n-1.
    return spec.gain * toeplitz(col, col.conj())


def average_snr(power: float, cov: np.ndarray, noise_var: float) -> float:
    """Average per-antenna SNR ``power * tr(cov) / (n * noise_var)``."""
    if not power >= 0.0:
        raise ValueError(f"power must be non-negative, got {power}")
    if not noise_var > 0.0:
        raise ValueError(f"noise_var must be positive, got {noise_var}")
    cov = np.asarray(cov)
    n = cov.shape[0]
    return power * float(np.trace(cov).real) / (n * noise_var)
