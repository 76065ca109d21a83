"""Multi-cell uplink on a wrap-around square grid with pilot reuse.

Cells form a torus (no boundary effects); each cell serves a fixed ring
of users.  Per-link covariances are distance-based path loss times the
identity, which keeps every estimator scalar and makes the role of pilot
contamination transparent: users sharing a pilot channel use leak into
each other's channel estimates, so their interference survives maximum
ratio combining at any array size, while orthogonally-piloted users are
averaged out by the array.

Unit convention: the default noise variance is tied to the UE transmit
power through a fixed power-to-noise ratio (see
``DEFAULT_POWER_NOISE_RATIO_DB``) chosen so that the standard
100 m serving link comes out at 32 dB SNR under the default path-loss
model; supplying ``noise_var`` explicitly overrides this.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .capacity import MonteCarloConfig, MonteCarloError, RateEstimate, TddFrame, _N_SE_BATCHES
from .estimation import LmmseOperator
from .impairments import HardwareProfile

PILOT_POLICIES = ("reused", "unique")
COMBINERS = ("mrc", "mmse")

# p_ue / noise_var in dB when noise_var is not given explicitly.  With the
# default path loss 10^-1.53 / D^3.76 the 100 m link then sits at
# 122.464 - 90.5 = 31.96 ~= 32 dB.
DEFAULT_POWER_NOISE_RATIO_DB = 122.464

_ROOT_HALF = math.sqrt(0.5)


def wrap_distance(a, b, world: float) -> float:
    """Minimum Euclidean distance between two points on the square torus."""
    if not world > 0.0:
        raise ValueError(f"world side must be positive, got {world}")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    delta = np.abs(a - b)
    delta = np.minimum(delta, world - delta)
    return float(np.hypot(delta[0], delta[1]))


@dataclass(frozen=True)
class CellScenario:
    """Static description of the cellular deployment.

    ``ues_per_cell`` users sit equally spaced on a ring of
    ``ring_radius`` around their serving BS, first user due east.  The
    pilot policy decides whether the per-cell orthogonal pilots are
    reused across cells ("reused", the contaminated case) or every user
    gets a private pilot channel use ("unique").
    """

    n_antennas: int
    cells_per_side: int = 4
    cell_edge: float = 400.0
    ues_per_cell: int = 6
    ring_radius: float = 100.0
    pathloss_coeff: float = 10.0**-1.53
    pathloss_exp: float = 3.76
    power_ue: float = 0.0222
    noise_var: float | None = None
    profile: HardwareProfile = HardwareProfile()
    pilot_policy: str = "reused"

    def __post_init__(self):
        if int(self.n_antennas) < 1:
            raise ValueError(f"n_antennas must be >= 1, got {self.n_antennas}")
        if int(self.cells_per_side) < 1 or int(self.ues_per_cell) < 1:
            raise ValueError("grid must contain at least one cell and one UE per cell")
        if not 0.0 < self.ring_radius < self.cell_edge:
            raise ValueError("ring radius must be positive and below the cell edge")
        if self.pilot_policy not in PILOT_POLICIES:
            raise ValueError(f"pilot_policy must be one of {PILOT_POLICIES}")
        if not (self.power_ue > 0.0 and self.pathloss_coeff > 0.0 and self.pathloss_exp > 0.0):
            raise ValueError("power and path-loss parameters must be positive")
        if self.noise_var is not None and not self.noise_var > 0.0:
            raise ValueError("noise_var must be positive when given")

    @property
    def world(self) -> float:
        return self.cells_per_side * self.cell_edge

    def pathloss(self, distance: float) -> float:
        return self.pathloss_coeff * distance**-self.pathloss_exp

    def resolved_noise(self) -> float:
        if self.noise_var is not None:
            return self.noise_var
        return self.power_ue * 10.0 ** (-DEFAULT_POWER_NOISE_RATIO_DB / 10.0)


@dataclass(eq=False)
class PilotAllocation:
    """Per-user pilot channel-use indices with the derived co-user sets."""

    pilot_index: np.ndarray

    def parallel(self, u: int) -> np.ndarray:
        """Users sharing u's pilot channel use (u excluded)."""
        same = np.flatnonzero(self.pilot_index == self.pilot_index[u])
        return same[same != u]

    def orthogonal(self, u: int) -> np.ndarray:
        """All other users: present in the data phase, absent from u's pilot use."""
        return np.flatnonzero(self.pilot_index != self.pilot_index[u])


@dataclass(eq=False)
class BuiltScenario:
    """Geometry resolved into per-link gains plus the pilot allocation."""

    cfg: CellScenario
    bs_positions: np.ndarray  # (n_cells, 2)
    ue_positions: np.ndarray  # (n_users, 2)
    serving: np.ndarray  # (n_users,) serving-cell index
    gains: np.ndarray  # (n_users, n_cells) path-loss channel gains
    allocation: PilotAllocation
    noise_var: float = field(default=0.0)

    @property
    def n_users(self) -> int:
        return self.ue_positions.shape[0]

    def covariance(self, u: int, cell: int) -> np.ndarray:
        """Per-link covariance R = gain * I at the given BS."""
        return self.gains[u, cell] * np.eye(self.cfg.n_antennas, dtype=np.complex128)


def build_scenario(cfg: CellScenario, rng=None) -> BuiltScenario:
    """Lay out the torus grid and evaluate every UE-to-BS link gain.

    The geometry is deterministic (fixed ring positions); ``rng`` is
    accepted for interface uniformity with randomized-drop extensions and
    is not consumed here.
    """
    del rng
    side = cfg.cells_per_side
    world = cfg.world
    centers = (np.arange(side) + 0.5) * cfg.cell_edge
    bs_positions = np.array([(x, y) for y in centers for x in centers])
    n_cells = side * side
    angles = 2.0 * math.pi * np.arange(cfg.ues_per_cell) / cfg.ues_per_cell
    offsets = cfg.ring_radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    ue_positions = (bs_positions[:, None, :] + offsets[None, :, :]).reshape(-1, 2) % world
    n_users = n_cells * cfg.ues_per_cell
    serving = np.repeat(np.arange(n_cells), cfg.ues_per_cell)
    gains = np.empty((n_users, n_cells))
    for u in range(n_users):
        for c in range(n_cells):
            gains[u, c] = cfg.pathloss(wrap_distance(ue_positions[u], bs_positions[c], world))
    if cfg.pilot_policy == "reused":
        pilot_index = np.tile(np.arange(cfg.ues_per_cell), n_cells)
    else:
        pilot_index = np.arange(n_users)
    return BuiltScenario(
        cfg=cfg,
        bs_positions=bs_positions,
        ue_positions=ue_positions,
        serving=serving,
        gains=gains,
        allocation=PilotAllocation(pilot_index),
        noise_var=cfg.resolved_noise(),
    )


def pilot_interference_cov(u: int, alloc: PilotAllocation, scenario: BuiltScenario) -> np.ndarray:
    """Long-term covariance of co-pilot transmissions at u's serving BS."""
    cell = int(scenario.serving[u])
    total = sum(scenario.gains[l, cell] for l in alloc.parallel(u))
    n = scenario.cfg.n_antennas
    return scenario.cfg.power_ue * total * np.eye(n, dtype=np.complex128)


def data_interference_cov(u: int, scenario: BuiltScenario, realizations: np.ndarray) -> np.ndarray:
    """Conditional data-phase interference covariance p * sum h_l h_l^H.

    ``realizations`` holds one channel row per user (at u's serving BS);
    the desired user's own row is skipped.
    """
    h = np.asarray(realizations, dtype=np.complex128)
    if h.shape[0] != scenario.n_users:
        raise ValueError(f"expected {scenario.n_users} channel rows, got {h.shape[0]}")
    others = np.delete(np.arange(scenario.n_users), u)
    sub = h[others]
    return scenario.cfg.power_ue * (sub.T @ sub.conj())


class ContaminationCheck(NamedTuple):
    lhs: float
    rhs: float
    negligible: bool


def contamination_negligibility(
    u: int,
    alloc: PilotAllocation,
    scenario: BuiltScenario,
    lmmse: LmmseOperator,
    margin_db: float = 10.0,
) -> ContaminationCheck:
    """Test whether distortion noise dominates pilot contamination for u.

    Compares the UE transmit distortion coefficient (lhs) against the sum
    of squared estimator-weighted trace ratios of the contaminating links
    (rhs); verdict is true when the lhs exceeds the rhs by ``margin_db``.
    When it does, improving pilot allocation cannot pay: the estimate is
    already distortion-limited.
    """
    cell = int(scenario.serving[u])
    a = lmmse.matrix
    denom = float(np.trace(a).real) * scenario.gains[u, cell]
    if denom == 0.0:
        raise ValueError("estimator trace is zero; operator does not match the link")
    rhs = 0.0
    for l in alloc.parallel(u):
        ratio = float(np.trace(a).real) * scenario.gains[l, cell] / denom
        rhs += ratio * ratio
    lhs = scenario.cfg.profile.kappa_t_ue
    return ContaminationCheck(lhs, rhs, lhs > rhs * 10.0 ** (margin_db / 10.0))


def _uplink_rate_engine(
    n: int,
    gains: np.ndarray,
    est_members: list,
    own_slot: int,
    u: int,
    power: float,
    noise: float,
    profile: HardwareProfile,
    frame: TddFrame,
    mc: MonteCarloConfig,
    combiner: str,
    extra_regularization: float = 0.0,
) -> RateEstimate:
    """Shared Monte-Carlo core for scalar-covariance uplink scenarios.

    ``gains`` are all users' channel gains at the serving BS, ``est_members``
    lists, per estimated pilot slot, the users transmitting in that slot
    (slot owner first), ``own_slot`` indexes the desired user's slot.  Every
    user's channel is drawn once per trial and reused between the pilot
    and data phases, so estimate/interference correlations (the substance
    of pilot contamination) are preserved exactly.
    """
    if combiner not in COMBINERS:
        raise ValueError(f"combiner must be one of {COMBINERS}, got {combiner!r}")
    trials = int(mc.trials)
    if trials < 1000:
        raise ValueError(f"per-user rate needs at least 1e3 trials, got {trials}")
    gains = np.asarray(gains, dtype=float)
    n_users = gains.size
    kappa_t = profile.kappa_t_ue
    kappa_r = profile.kappa_r_bs
    p = power
    d = math.sqrt(p)  # pilot symbol: same energy as a data use

    # Scalar LMMSE per estimated slot: a_k = conj(d) g_k / zbar_k.
    estimated = [np.asarray(members, dtype=int) for members in est_members]
    a_slot = np.empty(len(estimated))
    for k, members in enumerate(estimated):
        g_k = gains[members[0]]
        s_k = p * gains[members[1:]].sum()
        zbar = p * (1.0 + kappa_t) * g_k + p * kappa_r * g_k + s_k + noise
        a_slot[k] = d * g_k / zbar
    in_estimated = np.zeros(n_users, dtype=bool)
    for members in estimated:
        in_estimated[members] = True
    # Long-term covariance of everything the BS does not estimate, as the
    # MMSE regularizer (configuration choice; scalar because R ~ I).
    unestimated = p * (1.0 + kappa_t) * gains[~in_estimated].sum()
    reg = noise + unestimated + extra_regularization

    root_gain = np.sqrt(gains)
    eta_scale = _ROOT_HALF * math.sqrt(kappa_t * p)
    gen = mc.rng.generator()
    per_batch = max(1, trials // _N_SE_BATCHES)
    n_batches = min(_N_SE_BATCHES, trials)
    chunk = max(8, min(per_batch, 3_000_000 // max(n_users * n, 1)))
    others = np.flatnonzero(np.arange(n_users) != u)

    def run_chunk(m: int):
        g = gen.standard_normal((m, n_users, n)) + 1j * gen.standard_normal((m, n_users, n))
        h = g * (_ROOT_HALF * root_gain[None, :, None])
        eta = (gen.standard_normal((m, n_users)) + 1j * gen.standard_normal((m, n_users))) * eta_scale
        hhat = np.empty((m, len(estimated), n), dtype=np.complex128)
        for k, members in enumerate(estimated):
            hs = h[:, members, :]
            z = np.einsum("mli,ml->mi", hs, d + eta[:, members])
            # BS receive distortion: per-antenna variance proportional to the
            # total impinging pilot power in this slot.
            slot_power = np.sum(np.abs(hs) ** 2, axis=1)
            zeta = gen.standard_normal((m, n)) + 1j * gen.standard_normal((m, n))
            z = z + zeta * (_ROOT_HALF * np.sqrt(kappa_r * p * slot_power))
            nu = gen.standard_normal((m, n)) + 1j * gen.standard_normal((m, n))
            z = z + nu * (_ROOT_HALF * math.sqrt(noise))
            hhat[:, k, :] = a_slot[k] * z
        if combiner == "mrc":
            w = hhat[:, own_slot, :]
        else:
            # v = (reg*I + p * sum_k hhat_k hhat_k^H)^{-1} hhat_u, via the
            # rank-K Woodbury identity solved per trial.
            k_dim = len(estimated)
            gram = np.einsum("mki,mli->mkl", hhat.conj(), hhat)
            gram[:, np.arange(k_dim), np.arange(k_dim)] += reg / p
            rhs = hhat.conj() @ hhat[:, own_slot, :, None]
            alpha = np.linalg.solve(gram, rhs)[..., 0]
            w = hhat[:, own_slot, :] - np.einsum("mk,mki->mi", alpha, hhat)
        norm = np.linalg.norm(w, axis=1, keepdims=True)
        np.copyto(norm, 1.0, where=norm == 0.0)
        v = w / norm
        h_u = h[:, u, :]
        x = np.einsum("ij,ij->i", h_u.conj(), v)
        av2 = np.abs(v) ** 2
        s_own = np.sum(np.abs(h_u) ** 2 * av2, axis=1)
        y = np.einsum("mli,mi->ml", h[:, others, :].conj(), v)
        q_sum = np.sum(np.abs(y) ** 2, axis=1)
        other_power = np.sum(np.abs(h[:, others, :]) ** 2, axis=1)
        s_other = np.sum(other_power * av2, axis=1)
        return (
            complex(x.sum()),
            float(np.sum(np.abs(x) ** 2)),
            float(s_own.sum()),
            float(q_sum.sum()),
            float(s_other.sum()),
        )

    def sinr_of(m1, m2, s_own, q_mean, s_other):
        denom = (
            (1.0 + kappa_t) * m2
            - abs(m1) ** 2
            + kappa_r * (s_own + s_other)
            + (1.0 + kappa_t) * q_mean
            + noise / p
        )
        return abs(m1) ** 2 / denom

    fraction = frame.ul_data_fraction
    batch_rates = np.empty(n_batches)
    tot = [0.0 + 0.0j, 0.0, 0.0, 0.0, 0.0]
    for b in range(n_batches):
        acc = [0.0 + 0.0j, 0.0, 0.0, 0.0, 0.0]
        done = 0
        while done < per_batch:
            m = min(chunk, per_batch - done)
            part = run_chunk(m)
            for i in range(5):
                acc[i] += part[i]
            done += m
        for i in range(5):
            tot[i] += acc[i]
        vals = [a / per_batch for a in acc]
        batch_rates[b] = fraction * math.log2(1.0 + sinr_of(*vals))
    used = per_batch * n_batches
    vals = [a / used for a in tot]
    sinr = sinr_of(*vals)
    rate = fraction * math.log2(1.0 + sinr)
    se = float(batch_rates.std(ddof=1) / math.sqrt(n_batches)) if n_batches > 1 else 0.0
    if mc.rel_se_target is not None and rate > 0.0 and se > mc.rel_se_target * rate:
        raise MonteCarloError(
            f"standard error {se:g} exceeds target {mc.rel_se_target:g} x rate {rate:g}"
        )
    return RateEstimate(rate, se, used, sinr)


def per_user_rate(
    u: int,
    combiner: str,
    scenario: BuiltScenario,
    frame: TddFrame,
    mc: MonteCarloConfig,
    extra_regularization: float = 0.0,
) -> RateEstimate:
    """Achievable uplink rate of user ``u`` with interference treated as noise.

    The serving BS estimates all its own users' channels (LMMSE with the
    pilot-contamination covariance as colored interference) and combines
    with MRC on the desired estimate or regularized MMSE over the
    estimated intra-cell channels.  All co-users' channels participate in
    both phases of each trial, so contaminated estimates point partly at
    the contaminators -- the effect the pilot policies differ in.
    """
    cell = int(scenario.serving[u])
    alloc = scenario.allocation
    intra = np.flatnonzero(scenario.serving == cell)
    est_members = []
    own_slot = None
    for k, member in enumerate(intra):
        members = [int(member)] + [int(l) for l in alloc.parallel(int(member))]
        est_members.append(members)
        if member == u:
            own_slot = k
    if own_slot is None:
        raise ValueError(f"user {u} is not served by cell {cell}")
    return _uplink_rate_engine(
        n=scenario.cfg.n_antennas,
        gains=scenario.gains[:, cell],
        est_members=est_members,
        own_slot=own_slot,
        u=int(u),
        power=scenario.cfg.power_ue,
        noise=scenario.noise_var,
        profile=scenario.cfg.profile,
        frame=frame,
        mc=mc,
        combiner=combiner,
        extra_regularization=extra_regularization,
    )


def contaminated_uplink_rate(
    n_antennas: int,
    contaminator_strength: float,
    profile: HardwareProfile,
    frame: TddFrame,
    mc: MonteCarloConfig,
    snr_db: float = 20.0,
    regular_strength: float | None = None,
    combiner: str = "mrc",
) -> RateEstimate:
    """Single-BS rate with one pilot-sharing contaminator of given strength.

    ``contaminator_strength`` is the squared trace ratio of the
    contaminating link relative to the serving link (the quantity the
    negligibility test compares against kappa); the contaminator's channel
    gain is its square root.  ``regular_strength``, when given, adds an
    orthogonally-piloted interferer of that strength (same convention)
    that only disturbs the data phase.  Strength 0 keeps the co-user
    present with zero gain so sweeps sharing a random stream see common
    random numbers.
    """
    if contaminator_strength < 0.0 or (regular_strength is not None and regular_strength < 0.0):
        raise ValueError("interference strengths must be non-negative")
    power = 1.0
    noise = power * 10.0 ** (-snr_db / 10.0)
    gains = [1.0, math.sqrt(contaminator_strength)]
    if regular_strength is not None:
        gains.append(math.sqrt(regular_strength))
    return _uplink_rate_engine(
        n=n_antennas,
        gains=np.asarray(gains),
        est_members=[[0, 1]],
        own_slot=0,
        u=0,
        power=power,
        noise=noise,
        profile=profile,
        frame=frame,
        mc=mc,
        combiner=combiner,
    )
