"""Ergodic capacity bounds for a single massive-MIMO link with hardware
distortion.

Upper bounds come in closed form (Jensen over a per-antenna expectation
involving the exponential integral) and as a perfect-CSI Monte Carlo;
lower bounds are achievable-rate Monte Carlo evaluations with maximum
ratio transmission/combining on the LMMSE channel estimate, where the
receiver uses only channel statistics for decoding.  The asymptotic
machinery tracks the scalar random variable phi that captures how the
UE transmit distortion survives infinite arrays.

Direction convention: channel estimation always happens at the BS from
uplink pilots; "dl" and "ul" select which data phase (and therefore which
hardware chain, noise floor, power, and frame fraction) is evaluated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .estimation import LmmseOperator, PilotConfig, build_lmmse
from .impairments import HardwareProfile
from .numerics import RngStream, cn_factor, expint_e1_scaled, is_diagonal

DIRECTIONS = ("dl", "ul")
REGIMES = ("high-power", "large-n")

_N_SE_BATCHES = 20  # batch-means blocks behind every reported standard error
_ROOT_HALF = math.sqrt(0.5)


class MonteCarloError(RuntimeError):
    """Raised when a Monte-Carlo run misses its requested standard error."""


@dataclass(frozen=True)
class TddFrame:
    """Coherence-frame split into UL/DL pilot and data phases (channel uses)."""

    t_coher: int
    t_ul_pilot: int
    t_ul_data: int
    t_dl_pilot: int
    t_dl_data: int

    def __post_init__(self):
        parts = (self.t_ul_pilot, self.t_ul_data, self.t_dl_pilot, self.t_dl_data)
        if any(int(p) != p or p < 0 for p in parts + (self.t_coher,)):
            raise ValueError("frame parts must be non-negative integers")
        if sum(parts) != self.t_coher:
            raise ValueError(
                f"frame parts {parts} sum to {sum(parts)}, not t_coher={self.t_coher}"
            )

    @classmethod
    def symmetric(cls, t_coher: int = 1000, pilot_fraction: float = 0.05) -> "TddFrame":
        """Equal UL/DL split with the given pilot fraction per direction."""
        t_pilot = round(pilot_fraction * t_coher)
        data_total = t_coher - 2 * t_pilot
        if data_total < 0:
            raise ValueError("pilot fraction too large for the frame")
        t_ul = data_total // 2
        return cls(t_coher, t_pilot, t_ul, t_pilot, data_total - t_ul)

    @property
    def ul_data_fraction(self) -> float:
        return self.t_ul_data / self.t_coher

    @property
    def dl_data_fraction(self) -> float:
        return self.t_dl_data / self.t_coher


@dataclass(frozen=True)
class PowerConfig:
    """Transmit power per channel use at each end of the link."""

    p_bs: float
    p_ue: float

    def __post_init__(self):
        for name in ("p_bs", "p_ue"):
            v = getattr(self, name)
            if not (v >= 0.0 and math.isfinite(v)):
                raise ValueError(f"{name} must be finite and non-negative, got {v}")

    @classmethod
    def symmetric(cls, p: float) -> "PowerConfig":
        return cls(p, p)


@dataclass(frozen=True)
class PhiMoments:
    """Moments of the distortion scalar phi: |E{phi}|^2 and E{|phi|^2}."""

    mean_abs_sq: float
    second_moment: float
    trials: int

    def __post_init__(self):
        if self.mean_abs_sq < 0.0:
            raise ValueError("mean_abs_sq must be non-negative")
        if self.second_moment < self.mean_abs_sq * (1.0 - 1e-12):
            raise ValueError(
                f"E{{|phi|^2}}={self.second_moment} below |E{{phi}}|^2="
                f"{self.mean_abs_sq}; moments are inconsistent"
            )


@dataclass(frozen=True)
class MonteCarloConfig:
    """Trial count, randomness source, and optional precision target."""

    trials: int
    rng: RngStream
    rel_se_target: float | None = None

    def __post_init__(self):
        if int(self.trials) < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.rel_se_target is not None and not self.rel_se_target > 0.0:
            raise ValueError("rel_se_target must be positive when given")


@dataclass(frozen=True)
class RateEstimate:
    """A Monte-Carlo rate with its batch-means standard error.

    ``sinr`` is the effective SINR of the deterministic-SINR lower bounds
    (None for bounds averaging log terms per realization).
    """

    rate: float
    std_error: float
    trials: int
    sinr: float | None = None


def _check_direction(direction: str) -> None:
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}, got {direction!r}")


def _data_phase(direction: str, power: PowerConfig, profile: HardwareProfile, frame: TddFrame):
    """(kappa on E|x|^2, kappa on the diagonal moment, data noise, data power, frame fraction)."""
    if direction == "ul":
        return (
            profile.kappa_t_ue,
            profile.kappa_r_bs,
            profile.noise_bs,
            power.p_ue,
            frame.ul_data_fraction,
        )
    return (
        profile.kappa_r_ue,
        profile.kappa_t_bs,
        profile.noise_ue,
        power.p_bs,
        frame.dl_data_fraction,
    )


def _csi_phase(direction: str, power: PowerConfig, profile: HardwareProfile, frame: TddFrame):
    """Perfect-CSI bound parameters: (kappa inside the quadratic form,
    kappa of the receiving UE/BS chain, noise, power, frame fraction)."""
    if direction == "ul":
        return (
            profile.kappa_r_bs,
            profile.kappa_t_ue,
            profile.noise_bs,
            power.p_ue,
            frame.ul_data_fraction,
        )
    return (
        profile.kappa_t_bs,
        profile.kappa_r_ue,
        profile.noise_ue,
        power.p_bs,
        frame.dl_data_fraction,
    )


def upper_bound_closed_form(
    direction: str,
    cov: np.ndarray,
    power: PowerConfig,
    profile: HardwareProfile,
    frame: TddFrame,
) -> float:
    """Closed-form ergodic capacity upper bound in bits/channel use.

    Per antenna the bound needs E{|h_i|^2/(kappa*|h_i|^2 + noise/p)},
    which for Rayleigh fading evaluates through the scaled exponential
    integral; Jensen's inequality then moves the expectation inside the
    logarithm.  The distortion of the link end that holds the CSI enters
    through that expectation, the far end caps the SINR via its own kappa.
    """
    _check_direction(direction)
    kappa_inner, kappa_outer, noise, p, fraction = _csi_phase(direction, power, profile, frame)
    diag = np.diagonal(np.asarray(cov)).real
    if p == 0.0 or not np.any(diag > 0.0):
        return 0.0
    positive = diag[diag > 0.0]
    if kappa_inner == 0.0:
        g = p * float(positive.sum()) / noise
    else:
        x = noise / (p * kappa_inner * positive)
        values, counts = np.unique(x, return_counts=True)
        scaled = np.array([expint_e1_scaled(v) for v in values])
        g = float(np.sum(counts * (1.0 - values * scaled))) / kappa_inner
    arg = g / (1.0 + kappa_outer * g)
    return fraction * math.log2(1.0 + arg)


def upper_bound_asymptotic(
    direction: str,
    regime: str,
    profile: HardwareProfile,
    frame: TddFrame,
    n_antennas: int,
) -> float:
    """Asymptotic capacity ceilings: infinite power at fixed N, or infinite N.

    Returns ``math.inf`` (a sentinel, not an overflow) when every relevant
    distortion coefficient is zero and the regime is genuinely unbounded.
    """
    _check_direction(direction)
    if regime not in REGIMES:
        raise ValueError(f"regime must be one of {REGIMES}, got {regime!r}")
    if int(n_antennas) < 1:
        raise ValueError(f"n_antennas must be >= 1, got {n_antennas}")
    if direction == "dl":
        kappa_bs, kappa_ue = profile.kappa_t_bs, profile.kappa_r_ue
        fraction = frame.dl_data_fraction
    else:
        kappa_bs, kappa_ue = profile.kappa_r_bs, profile.kappa_t_ue
        fraction = frame.ul_data_fraction
    if regime == "high-power":
        denom = kappa_bs + kappa_ue * n_antennas
        if denom == 0.0:
            return math.inf
        arg = n_antennas / denom
    else:
        if kappa_ue == 0.0:
            return math.inf
        arg = 1.0 / kappa_ue
    return fraction * math.log2(1.0 + arg)


def upper_bound_perfect_csi_mc(
    direction: str,
    cov: np.ndarray,
    power: PowerConfig,
    profile: HardwareProfile,
    frame: TddFrame,
    mc: MonteCarloConfig,
) -> RateEstimate:
    """Monte-Carlo capacity upper bound with perfect CSI at both ends.

    Averages log2(1 + SINR(h)) where the optimal receive/transmit vector
    reduces the quadratic form to a scalar sum by the matrix-inversion
    lemma; this sits between the achievable lower bounds and the analytic
    Jensen bound.
    """
    _check_direction(direction)
    kappa_inner, kappa_outer, noise, p, fraction = _csi_phase(direction, power, profile, frame)
    cov = np.asarray(cov, dtype=np.complex128)
    n = cov.shape[0]
    if p == 0.0:
        return RateEstimate(0.0, 0.0, int(mc.trials), None)
    diagonal = is_diagonal(cov)
    root_r = np.sqrt(np.diagonal(cov).real.clip(min=0.0)) if diagonal else None
    factor = None if diagonal else cn_factor(cov)
    gen = mc.rng.generator()
    per_batch = max(1, int(mc.trials) // _N_SE_BATCHES)
    n_batches = min(_N_SE_BATCHES, int(mc.trials))
    chunk = max(32, min(per_batch, 2_000_000 // max(n, 1)))
    batch_rates = np.empty(n_batches)
    for b in range(n_batches):
        done = 0
        acc = 0.0
        while done < per_batch:
            m = min(chunk, per_batch - done)
            g = (gen.standard_normal((m, n)) + 1j * gen.standard_normal((m, n))) * _ROOT_HALF
            h = g * root_r if diagonal else g @ factor.T
            ah2 = np.abs(h) ** 2
            psi = np.sum(ah2 / (kappa_inner * ah2 + noise / p), axis=1)
            sinr = psi / (1.0 + kappa_outer * psi)
            acc += float(np.sum(np.log2(1.0 + sinr)))
            done += m
        batch_rates[b] = fraction * acc / per_batch
    rate = float(batch_rates.mean())
    se = float(batch_rates.std(ddof=1) / math.sqrt(n_batches)) if n_batches > 1 else 0.0
    return RateEstimate(rate, se, per_batch * n_batches, None)


def phi_moments(
    lmmse: LmmseOperator,
    cov: np.ndarray,
    pilot_interference: np.ndarray | None,
    pilot: PilotConfig,
    profile: HardwareProfile,
    mc: MonteCarloConfig,
) -> PhiMoments:
    """Moments of the distortion scalar phi by Monte Carlo over eta_t.

    phi = (1 + eta/d) * sqrt(tr(R-C)) / sqrt(tr(A(|d+eta|^2 R + Psi)A^H))
    with Psi the channel-independent part of the observation covariance.
    Only the scalar UE transmit distortion is random here, so the
    integration is one-dimensional and cheap.  With kappa_t_ue = 0 the
    moments are exactly (1, 1) and no sampling happens.
    """
    kappa_t = profile.kappa_t_ue
    p = pilot.power
    d = pilot.symbol
    if kappa_t == 0.0:
        return PhiMoments(1.0, 1.0, 0)
    cov = np.asarray(cov, dtype=np.complex128)
    n = cov.shape[0]
    a = lmmse.matrix
    s_mat = (
        np.zeros((n, n), dtype=np.complex128)
        if pilot_interference is None
        else np.asarray(pilot_interference, dtype=np.complex128)
    )
    t_rc = float(np.trace(cov).real) - lmmse.mse
    if is_diagonal(a) and is_diagonal(cov) and is_diagonal(s_mat):
        ad = np.diagonal(a)
        rd = np.diagonal(cov).real
        psi_d = p * profile.kappa_r_bs * rd + np.diagonal(s_mat).real + profile.noise_bs
        t1 = float(np.sum(np.abs(ad) ** 2 * rd))
        t0 = float(np.sum(np.abs(ad) ** 2 * psi_d))
    else:
        psi = p * profile.kappa_r_bs * np.diag(np.diagonal(cov)) + s_mat
        psi = psi + profile.noise_bs * np.eye(n)
        t1 = float(np.einsum("ij,ij->", a @ cov, a.conj()).real)
        t0 = float(np.einsum("ij,ij->", a @ psi, a.conj()).real)
    # tr(R - C) = p*(1+kappa_t)*t1 + t0 is an identity of the LMMSE build;
    # a large mismatch means the operator belongs to different statistics.
    recon = p * (1.0 + kappa_t) * t1 + t0
    if abs(recon - t_rc) > 1e-6 * max(abs(t_rc), 1e-300):
        raise ValueError(
            "operator inconsistent with the supplied covariance/pilot/profile "
            f"(trace identity off by {abs(recon - t_rc):g})"
        )
    gen = mc.rng.generator()
    trials = int(mc.trials)
    scale = _ROOT_HALF * math.sqrt(kappa_t * p)
    sum_phi = 0.0 + 0.0j
    sum_abs2 = 0.0
    done = 0
    while done < trials:
        m = min(1_000_000, trials - done)
        eta = (gen.standard_normal(m) + 1j * gen.standard_normal(m)) * scale
        w = np.abs(d + eta) ** 2
        phi = (1.0 + eta / d) * math.sqrt(t_rc) / np.sqrt(w * t1 + t0)
        sum_phi += complex(phi.sum())
        sum_abs2 += float(np.sum(np.abs(phi) ** 2))
        done += m
    mean = sum_phi / trials
    return PhiMoments(abs(mean) ** 2, sum_abs2 / trials, trials)


def lower_bound_asymptotic(
    direction: str,
    lmmse: LmmseOperator,
    phi: PhiMoments,
    profile: HardwareProfile,
    frame: TddFrame,
) -> float:
    """Large-array limit of the achievable rate, in bits/channel use.

    The vanishing O(1/sqrt(N)) terms are dropped; what survives is the far
    end's distortion and the phi penalty of the UE transmit chain.  The
    operator argument documents which estimation setting the moments were
    produced under; only the moments and kappa enter the formula.
    Returns the +inf sentinel for ideal hardware (zero denominator).
    """
    _check_direction(direction)
    del lmmse  # statistics already folded into the phi moments
    if direction == "dl":
        kappa = profile.kappa_r_ue
        fraction = frame.dl_data_fraction
    else:
        kappa = profile.kappa_t_ue
        fraction = frame.ul_data_fraction
    denom = (1.0 + kappa) * phi.second_moment - phi.mean_abs_sq
    if denom <= 0.0:
        return math.inf
    return fraction * math.log2(1.0 + phi.mean_abs_sq / denom)


def lower_bound_mc(
    direction: str,
    cov: np.ndarray,
    pilot_interference: np.ndarray | None,
    interference,
    power: PowerConfig,
    profile: HardwareProfile,
    pilot: PilotConfig,
    frame: TddFrame,
    mc: MonteCarloConfig,
) -> RateEstimate:
    """Achievable-rate lower bound with MRT/MRC on the LMMSE estimate.

    Each trial draws the channel and the full pilot phase (transmit
    distortion, receive distortion, interference, noise), forms the
    estimate and the unit-norm combining/precoding vector, and accumulates
    the exact moments of the deterministic-SINR bound; the data-phase
    distortion enters through its analytic (1 + kappa) and diagonal-moment
    terms, which is the average over per-use redraws.  The SINR denominator
    is assembled from the accumulated moments in one pass, so the bound is
    smooth across parameter sweeps that share random numbers.

    ``interference`` is the long-term data-phase interference: a covariance
    matrix (or per-antenna variance vector) at the BS for "ul", a scalar
    received power at the UE for "dl", or None.

    Draw shapes and order are independent of every kappa, so runs that
    share (seed, substream) see identical channel/noise realizations
    across impairment sweeps (common random numbers).
    """
    _check_direction(direction)
    trials = int(mc.trials)
    if trials < 1000:
        raise ValueError(f"lower_bound_mc needs at least 1e3 trials, got {trials}")
    kappa_a, kappa_b, data_noise, p_data, fraction = _data_phase(direction, power, profile, frame)
    if p_data == 0.0:
        return RateEstimate(0.0, 0.0, trials, 0.0)

    cov = np.asarray(cov, dtype=np.complex128)
    n = cov.shape[0]
    p_pilot = pilot.power
    d = pilot.symbol
    s_mat = None if pilot_interference is None else np.asarray(pilot_interference, np.complex128)
    have_s = s_mat is not None and np.count_nonzero(s_mat) > 0

    # Data-phase interference normal form: scalar constant and/or quadratic form.
    q_const = 0.0
    q_diag = None
    q_full = None
    if interference is not None:
        q_arr = np.asarray(interference, dtype=np.complex128)
        if q_arr.ndim == 0:
            if direction == "dl":
                q_const = float(q_arr.real)  # received power at the UE, v-independent
            else:
                q_diag = np.full(n, float(q_arr.real))
        elif q_arr.ndim == 1:
            q_diag = q_arr.real.copy()
        elif is_diagonal(q_arr):
            q_diag = np.diagonal(q_arr).real.copy()
        else:
            q_full = q_arr

    diagonal = is_diagonal(cov) and (not have_s or is_diagonal(s_mat)) and q_full is None
    if diagonal:
        r_d = np.diagonal(cov).real
        s_d = np.diagonal(s_mat).real if have_s else np.zeros(n)
        zbar_d = (
            p_pilot * (1.0 + profile.kappa_t_ue) * r_d
            + p_pilot * profile.kappa_r_bs * r_d
            + s_d
            + profile.noise_bs
        )
        a_d = np.conj(d) * r_d / zbar_d
        root_r = np.sqrt(r_d.clip(min=0.0))
        root_s = np.sqrt(s_d.clip(min=0.0))
        a_mat = l_factor = s_factor = None
    else:
        op = build_lmmse(cov, s_mat, pilot, profile)
        a_mat = op.matrix
        l_factor = cn_factor(cov)
        s_factor = cn_factor(s_mat) if have_s else None
        a_d = root_r = root_s = None

    eta_scale = _ROOT_HALF * math.sqrt(profile.kappa_t_ue * p_pilot)
    xi_scale = _ROOT_HALF * math.sqrt(profile.kappa_r_bs * p_pilot)
    nu_scale = _ROOT_HALF * math.sqrt(profile.noise_bs)

    gen = mc.rng.generator()
    per_batch = max(1, trials // _N_SE_BATCHES)
    n_batches = min(_N_SE_BATCHES, trials)
    chunk = max(32, min(per_batch, 2_000_000 // max(n, 1)))

    def run_chunk(m: int):
        g = (gen.standard_normal((m, n)) + 1j * gen.standard_normal((m, n))) * _ROOT_HALF
        h = g * root_r if diagonal else g @ l_factor.T
        eta = (gen.standard_normal((m, 1)) + 1j * gen.standard_normal((m, 1))) * eta_scale
        xi = (gen.standard_normal((m, n)) + 1j * gen.standard_normal((m, n))) * xi_scale
        z = h * (d + eta) + h * xi
        if have_s:
            w = (gen.standard_normal((m, n)) + 1j * gen.standard_normal((m, n))) * _ROOT_HALF
            z += w * root_s if diagonal else w @ s_factor.T
        z += (gen.standard_normal((m, n)) + 1j * gen.standard_normal((m, n))) * nu_scale
        hhat = a_d * z if diagonal else z @ a_mat.T
        norm = np.linalg.norm(hhat, axis=1, keepdims=True)
        np.copyto(norm, 1.0, where=norm == 0.0)
        v = hhat / norm
        x = np.einsum("ij,ij->i", h.conj(), v)
        av2 = np.abs(v) ** 2
        s_term = np.sum(np.abs(h) ** 2 * av2, axis=1)
        if q_diag is not None:
            q_term = av2 @ q_diag
        elif q_full is not None:
            q_term = np.einsum("ij,jk,ik->i", v.conj(), q_full, v).real
        else:
            q_term = None
        return (
            complex(x.sum()),
            float(np.sum(np.abs(x) ** 2)),
            float(s_term.sum()),
            0.0 if q_term is None else float(q_term.sum()),
        )

    def sinr_of(m1, m2, s_mean, q_mean):
        denom = (
            (1.0 + kappa_a) * m2
            - abs(m1) ** 2
            + kappa_b * s_mean
            + (q_mean + q_const + data_noise) / p_data
        )
        return abs(m1) ** 2 / denom

    batch_rates = np.empty(n_batches)
    tot = [0.0 + 0.0j, 0.0, 0.0, 0.0]
    for b in range(n_batches):
        acc = [0.0 + 0.0j, 0.0, 0.0, 0.0]
        done = 0
        while done < per_batch:
            m = min(chunk, per_batch - done)
            part = run_chunk(m)
            for i in range(4):
                acc[i] += part[i]
            done += m
        for i in range(4):
            tot[i] += acc[i]
        sinr_b = sinr_of(acc[0] / per_batch, acc[1] / per_batch, acc[2] / per_batch, acc[3] / per_batch)
        batch_rates[b] = fraction * math.log2(1.0 + sinr_b)
    used = per_batch * n_batches
    sinr = sinr_of(tot[0] / used, tot[1] / used, tot[2] / used, tot[3] / used)
    rate = fraction * math.log2(1.0 + sinr)
    se = float(batch_rates.std(ddof=1) / math.sqrt(n_batches)) if n_batches > 1 else 0.0
    if mc.rel_se_target is not None and rate > 0.0 and se > mc.rel_se_target * rate:
        raise MonteCarloError(
            f"standard error {se:g} exceeds target {mc.rel_se_target:g} x rate {rate:g}; "
            "increase trials"
        )
    return RateEstimate(rate, se, used, sinr)
