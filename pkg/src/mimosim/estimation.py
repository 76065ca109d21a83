"""Linear MMSE channel estimation under transceiver distortion.

The uplink pilot observation during one channel use is

    z = h * (d + eta_t) + eta_r + w + nu

with pilot symbol d, UE transmit distortion eta_t ~ CN(0, kappa_t_ue * p),
BS receive distortion eta_r with conditional covariance
kappa_r_bs * p * diag(|h_i|^2), co-channel pilot interference w with
long-term covariance S, and thermal noise nu ~ CN(0, noise_bs * I).  The
distortion terms depend on the channel itself, so the LMMSE filter is
optimal only within the linear class and the estimation error never
vanishes with pilot power (the error floor).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve

from .impairments import HardwareProfile
from .numerics import RngStream, cn_factor, is_diagonal

_CORRELATION_MODES = ("uncorrelated", "fully-correlated")


@dataclass(frozen=True)
class PilotConfig:
    """Pilot signaling configuration.

    ``symbol`` is the (complex) pilot symbol d with |d|^2 the pilot power;
    ``length`` is the number of pilot channel uses B; and
    ``distortion_correlation`` states whether the transceiver distortion is
    redrawn each use ("uncorrelated") or frozen across the pilot block
    ("fully-correlated").  The correlation mode only matters for B > 1.
    """

    symbol: complex
    length: int = 1
    distortion_correlation: str = "uncorrelated"

    def __post_init__(self):
        if not abs(self.symbol) > 0.0:
            raise ValueError("pilot symbol must be non-zero (|d|^2 is the pilot power)")
        if int(self.length) < 1:
            raise ValueError(f"pilot length must be >= 1, got {self.length}")
        if self.distortion_correlation not in _CORRELATION_MODES:
            raise ValueError(
                f"distortion_correlation must be one of {_CORRELATION_MODES}, "
                f"got {self.distortion_correlation!r}"
            )

    @property
    def power(self) -> float:
        return abs(self.symbol) ** 2


@dataclass(frozen=True)
class LmmseOperator:
    """LMMSE estimator ĥ = matrix @ z and its second-order statistics.

    ``observation_cov`` is the pilot-observation covariance, ``error_cov``
    the estimation-error covariance, ``mse`` its trace.  The build inputs
    are retained because the downstream Monte-Carlo helpers (multi-pilot
    MSE, capacity moments) need to redraw consistent realizations.
    """

    matrix: np.ndarray
    observation_cov: np.ndarray
    error_cov: np.ndarray
    mse: float
    cov: np.ndarray = field(repr=False)
    pilot_interference: np.ndarray = field(repr=False)
    pilot: PilotConfig = field(repr=False)
    profile: HardwareProfile = field(repr=False)


def observation_covariance(
    cov: np.ndarray,
    pilot_interference: np.ndarray | None,
    pilot: PilotConfig,
    profile: HardwareProfile,
) -> np.ndarray:
    """Covariance of the single-use pilot observation z.

    Thermal noise and interference add directly; the channel-dependent
    distortion contributes p*(1+kappa_t_ue)*R on the full matrix plus the
    receiver term p*kappa_r_bs on the diagonal of R only.
    """
    cov = np.asarray(cov, dtype=np.complex128)
    n = cov.shape[0]
    p = pilot.power
    zbar = p * (1.0 + profile.kappa_t_ue) * cov
    zbar = zbar + p * profile.kappa_r_bs * np.diag(np.diagonal(cov))
    if pilot_interference is not None:
        zbar = zbar + np.asarray(pilot_interference, dtype=np.complex128)
    zbar = zbar + profile.noise_bs * np.eye(n)
    return zbar


def build_lmmse(
    cov: np.ndarray,
    pilot_interference: np.ndarray | None,
    pilot: PilotConfig,
    profile: HardwareProfile,
) -> LmmseOperator:
    """Build the LMMSE channel estimator for one pilot channel use.

    Parameters
    ----------
    cov : array_like, shape (n, n)
        Channel covariance R (Hermitian PSD).
    pilot_interference : array_like or None
        Long-term covariance S of co-channel transmissions received during
        the pilot use; ``None`` means interference-free.
    pilot : PilotConfig
        Pilot symbol (only the single-use statistics enter here).
    profile : HardwareProfile
        Distortion coefficients and BS noise variance.

    Returns
    -------
    LmmseOperator
        With estimator ``A = conj(d) * R * Zbar^{-1}``, error covariance
        ``C = R - p * R * Zbar^{-1} * R`` and ``mse = tr(C)``.
    """
    cov = np.asarray(cov, dtype=np.complex128)
    n = cov.shape[0]
    if cov.shape != (n, n):
        raise ValueError(f"covariance must be square, got shape {cov.shape}")
    s_mat = (
        np.zeros((n, n), dtype=np.complex128)
        if pilot_interference is None
        else np.asarray(pilot_interference, dtype=np.complex128)
    )
    p = pilot.power
    zbar = observation_covariance(cov, s_mat, pilot, profile)
    if is_diagonal(cov) and is_diagonal(s_mat):
        # Everything decouples per antenna; skip the dense solve.
        r = np.diagonal(cov).real
        z = np.diagonal(zbar).real
        a = np.conj(pilot.symbol) * r / z
        c = r - p * r * r / z
        a_mat = np.diag(a.astype(np.complex128))
        c_mat = np.diag(c.astype(np.complex128))
        mse = float(np.sum(c))
    else:
        x = solve(zbar, cov, assume_a="pos")  # Zbar^{-1} R
        a_mat = np.conj(pilot.symbol) * x.conj().T
        c_mat = cov - p * (x.conj().T @ cov)
        c_mat = 0.5 * (c_mat + c_mat.conj().T)
        mse = float(np.trace(c_mat).real)
    return LmmseOperator(
        matrix=a_mat,
        observation_cov=zbar,
        error_cov=c_mat,
        mse=mse,
        cov=cov,
        pilot_interference=s_mat,
        pilot=pilot,
        profile=profile,
    )


def estimate(op: LmmseOperator, z: np.ndarray) -> np.ndarray:
    """Apply the estimator to one observation vector or a batch of rows."""
    z = np.asarray(z, dtype=np.complex128)
    if z.ndim == 1:
        return op.matrix @ z
    return z @ op.matrix.T


def mse_of_linear_estimator(
    matrix: np.ndarray,
    cov: np.ndarray,
    pilot_interference: np.ndarray | None,
    pilot: PilotConfig,
    profile: HardwareProfile,
) -> float:
    """MSE of an arbitrary linear estimator ĥ = matrix @ z.

    Evaluates tr(R - d*A*R - conj(d)*R*A^H + A*Zbar*A^H) against the true
    observation statistics, so mismatched estimators (built under wrong
    assumptions) are scored fairly.  For the LMMSE matrix this reproduces
    tr(C).
    """
    a = np.asarray(matrix, dtype=np.complex128)
    cov = np.asarray(cov, dtype=np.complex128)
    zbar = observation_covariance(cov, pilot_interference, pilot, profile)
    d = pilot.symbol
    ar = a @ cov
    cross = d * np.trace(ar) + np.conj(d) * np.trace(ar).conj()
    quad = np.einsum("ij,ij->", a @ zbar, a.conj())
    return float((np.trace(cov) - cross + quad).real)


def conventional_lmmse(
    cov: np.ndarray,
    pilot_interference: np.ndarray | None,
    pilot: PilotConfig,
    noise_bs: float,
) -> np.ndarray:
    """Distortion-unaware LMMSE matrix conj(d) * R * (p*R + S + noise*I)^{-1}.

    This is the textbook estimator of an ideal-hardware link; feeding it to
    :func:`mse_of_linear_estimator` under a distorted profile quantifies
    the cost of ignoring the impairments.
    """
    cov = np.asarray(cov, dtype=np.complex128)
    n = cov.shape[0]
    m = pilot.power * cov + noise_bs * np.eye(n)
    if pilot_interference is not None:
        m = m + np.asarray(pilot_interference, dtype=np.complex128)
    x = solve(m, cov, assume_a="pos")
    return np.conj(pilot.symbol) * x.conj().T


def multi_pilot_mse(
    op: LmmseOperator,
    pilot: PilotConfig,
    mc_trials: int = 0,
    rng: RngStream | None = None,
) -> float:
    """Estimation MSE after averaging a block of B identical pilot uses.

    With temporally uncorrelated distortion the averaged-observation MSE is
    exactly ``tr(C)/B``.  With fully-correlated distortion (same distortion
    realization all B uses, receiver noise still independent) only the
    thermal-noise part averages down; that case has no closed form and is
    simulated: the single-use estimator is applied to the B-use average
    observation and the empirical error power is returned.

    ``mc_trials``/``rng`` are only consulted in the fully-correlated mode.
    """
    b = pilot.length
    if b == 1:
        return op.mse
    if pilot.distortion_correlation == "uncorrelated":
        return op.mse / b
    if mc_trials < 1 or rng is None:
        raise ValueError("fully-correlated mode needs mc_trials >= 1 and an rng")
    profile = op.profile
    p = pilot.power
    d = pilot.symbol
    factor = cn_factor(op.cov)
    s_factor = None
    if np.count_nonzero(op.pilot_interference):
        s_factor = cn_factor(op.pilot_interference)
    gen = rng.generator()
    n = op.cov.shape[0]
    total = 0.0
    done = 0
    chunk = max(1, min(int(mc_trials), 2_000_000 // max(n, 1)))
    root_half = math.sqrt(0.5)
    while done < mc_trials:
        m = min(chunk, mc_trials - done)
        g = (gen.standard_normal((m, n)) + 1j * gen.standard_normal((m, n))) * root_half
        h = g @ factor.T
        eta = (gen.standard_normal((m, 1)) + 1j * gen.standard_normal((m, 1))) * (
            root_half * math.sqrt(profile.kappa_t_ue * p)
        )
        xi = (gen.standard_normal((m, n)) + 1j * gen.standard_normal((m, n))) * (
            root_half * math.sqrt(profile.kappa_r_bs * p)
        )
        z = h * (d + eta) + h * xi
        if s_factor is not None:
            w = (gen.standard_normal((m, n)) + 1j * gen.standard_normal((m, n))) * (
                root_half / math.sqrt(b)
            )
            z = z + w @ s_factor.T
        nu = (gen.standard_normal((m, n)) + 1j * gen.standard_normal((m, n))) * (
            root_half * math.sqrt(profile.noise_bs / b)
        )
        z = z + nu
        err = h - z @ op.matrix.T
        total += float(np.sum(np.abs(err) ** 2))
        done += m
    return total / mc_trials


def relative_mse(mse: float, cov: np.ndarray) -> float:
    """MSE normalized by tr(R): the error power per unit channel power."""
    tr = float(np.trace(np.asarray(cov)).real)
    if not tr > 0.0:
        raise ValueError(f"tr(R) must be positive, got {tr}")
    return mse / tr
