"""Simulation toolkit for massive MIMO links with non-ideal transceivers.

Core pieces: channel covariance models (`channel`), the additive
distortion-noise hardware model (`impairments`), distortion-aware LMMSE
channel estimation (`estimation`), capacity upper/lower bounds
(`capacity`), energy-efficiency accounting (`energy`), a wrap-around
multi-cell scenario with pilot contamination (`multicell`), and the
figure-producing experiment registry (`experiments`, `cli`).
"""

from .capacity import (
    MonteCarloConfig,
    MonteCarloError,
    PhiMoments,
    PowerConfig,
    RateEstimate,
    TddFrame,
    lower_bound_asymptotic,
    lower_bound_mc,
    phi_moments,
    upper_bound_asymptotic,
    upper_bound_closed_form,
    upper_bound_perfect_csi_mc,
)
from .channel import CovarianceSpec, average_snr, covariance_exponential, covariance_one_ring
from .energy import EeOptimum, EnergyModel, PowerScalingLaw, ee, ee_optimize, scaled_power
from .estimation import (
    LmmseOperator,
    PilotConfig,
    build_lmmse,
    conventional_lmmse,
    estimate,
    mse_of_linear_estimator,
    multi_pilot_mse,
    observation_covariance,
    relative_mse,
)
from .experiments import ExperimentSpec, InvalidConfigError, ResultTable, run, validate
from .impairments import (
    HardwareProfile,
    ImpairmentScaling,
    PhaseNoiseConfig,
    evm,
    kappa_from_evm,
    phase_noise_variance,
    scaled_kappa,
)
from .multicell import (
    CellScenario,
    PilotAllocation,
    build_scenario,
    contaminated_uplink_rate,
    contamination_negligibility,
    per_user_rate,
    wrap_distance,
)
from .numerics import RngStream, expint_e1, expint_e1_scaled, sample_cn

__version__ = "0.1.0"

__all__ = [
    "CellScenario",
    "CovarianceSpec",
    "EeOptimum",
    "EnergyModel",
    "ExperimentSpec",
    "HardwareProfile",
    "ImpairmentScaling",
    "InvalidConfigError",
    "LmmseOperator",
    "MonteCarloConfig",
    "MonteCarloError",
    "PhaseNoiseConfig",
    "PhiMoments",
    "PilotAllocation",
    "PilotConfig",
    "PowerConfig",
    "PowerScalingLaw",
    "RateEstimate",
    "ResultTable",
    "RngStream",
    "TddFrame",
    "average_snr",
    "build_lmmse",
    "build_scenario",
    "contaminated_uplink_rate",
    "contamination_negligibility",
    "conventional_lmmse",
    "covariance_exponential",
    "covariance_one_ring",
    "ee",
    "ee_optimize",
    "estimate",
    "evm",
    "expint_e1",
    "expint_e1_scaled",
    "kappa_from_evm",
    "lower_bound_asymptotic",
    "lower_bound_mc",
    "mse_of_linear_estimator",
    "multi_pilot_mse",
    "observation_covariance",
    "per_user_rate",
    "phase_noise_variance",
    "phi_moments",
    "relative_mse",
    "run",
    "sample_cn",
    "scaled_kappa",
    "scaled_power",
    "upper_bound_asymptotic",
    "upper_bound_closed_form",
    "upper_bound_perfect_csi_mc",
    "validate",
    "wrap_distance",
]
