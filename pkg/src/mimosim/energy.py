"""Energy-efficiency model: rate per unit of radiated-plus-circuit energy.

The energy ledger per channel use charges each amplifier its transmit
power divided by efficiency, a per-antenna circuit term, and a static
term; pilot and circuit energy is split between the two link directions
by their data-time shares.  Optimization is plain grid search over
(transmit power, antenna count) with a user-supplied capacity model, the
same way the underlying tradeoff figures are produced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .capacity import PowerConfig, TddFrame

DIRECTIONS = ("dl", "ul")


@dataclass(frozen=True)
class EnergyModel:
    """Circuit/amplifier energy accounting per channel use.

    ``rho`` is the per-antenna circuit energy, ``zeta`` the static circuit
    energy (both in the same energy unit as the transmit powers, e.g. muJ
    per channel use); ``omega_*`` are amplifier efficiencies; ``alpha_*``
    the DL/UL data-time shares used to split the common costs.  The alphas
    must match the frame's data split.
    """

    rho: float
    zeta: float
    omega_bs: float
    omega_ue: float
    alpha_dl: float
    alpha_ul: float
    frame: TddFrame

    def __post_init__(self):
        if not (self.rho >= 0.0 and math.isfinite(self.rho)):
            raise ValueError(f"rho must be finite and >= 0, got {self.rho}")
        if not self.zeta > 0.0:
            raise ValueError(f"zeta must be positive, got {self.zeta}")
        for name in ("omega_bs", "omega_ue"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1], got {v}")
        data_total = self.frame.t_dl_data + self.frame.t_ul_data
        if data_total <= 0:
            raise ValueError("frame has no data phase")
        expect_dl = self.frame.t_dl_data / data_total
        if abs(self.alpha_dl - expect_dl) > 1e-9 or abs(self.alpha_dl + self.alpha_ul - 1.0) > 1e-9:
            raise ValueError(
                f"alpha_dl/alpha_ul ({self.alpha_dl}, {self.alpha_ul}) inconsistent "
                f"with the frame data split ({expect_dl:.6f})"
            )

    @classmethod
    def from_frame(
        cls,
        frame: TddFrame,
        rho: float,
        zeta: float,
        omega_bs: float = 0.3,
        omega_ue: float = 0.3,
    ) -> "EnergyModel":
        data_total = frame.t_dl_data + frame.t_ul_data
        alpha_dl = frame.t_dl_data / data_total
        return cls(rho, zeta, omega_bs, omega_ue, alpha_dl, 1.0 - alpha_dl, frame)


def ee(
    direction: str,
    spectral_efficiency: float,
    power: PowerConfig,
    model: EnergyModel,
    n_antennas: int,
) -> float:
    """Energy efficiency in bits per unit energy.

    The denominator charges this direction's share (alpha) of the common
    costs -- both pilot phases' amplifier energy plus circuit energy
    ``n*rho + zeta`` -- and the full amplifier energy of its own data
    phase.
    """
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}, got {direction!r}")
    if spectral_efficiency < 0.0:
        raise ValueError("spectral efficiency must be non-negative")
    f = model.frame
    common = (
        f.t_dl_pilot / f.t_coher * power.p_bs / model.omega_bs
        + f.t_ul_pilot / f.t_coher * power.p_ue / model.omega_ue
        + n_antennas * model.rho
        + model.zeta
    )
    if direction == "dl":
        denom = model.alpha_dl * common + f.t_dl_data / f.t_coher * power.p_bs / model.omega_bs
    else:
        denom = model.alpha_ul * common + f.t_ul_data / f.t_coher * power.p_ue / model.omega_ue
    if denom <= 0.0:
        raise ValueError("energy denominator must be positive (check alpha and zeta)")
    return spectral_efficiency / denom


@dataclass(frozen=True)
class PowerScalingLaw:
    """Power reduction schedule p(N) = base * (N / reference_n)^(-t).

    The asymptotic rate limits hold for ``t_ue < 1/2`` (and additionally
    ``t_bs + t_ue < 1`` in the downlink); runs outside that region are
    legal -- the flag below reports whether the limits apply.
    """

    t_bs: float
    t_ue: float
    base: PowerConfig
    reference_n: int = 1

    def __post_init__(self):
        if self.t_bs < 0.0 or self.t_ue < 0.0:
            raise ValueError("scaling exponents must be non-negative")
        if int(self.reference_n) < 1:
            raise ValueError(f"reference_n must be >= 1, got {self.reference_n}")

    @property
    def within_validity_region(self) -> bool:
        return self.t_ue < 0.5 and (self.t_bs + self.t_ue) < 1.0


def scaled_power(law: PowerScalingLaw, n_antennas: int) -> PowerConfig:
    """Evaluate the scaling schedule at ``n_antennas``."""
    if int(n_antennas) < 1:
        raise ValueError(f"n_antennas must be >= 1, got {n_antennas}")
    ratio = n_antennas / law.reference_n
    return PowerConfig(
        p_bs=law.base.p_bs * ratio**-law.t_bs,
        p_ue=law.base.p_ue * ratio**-law.t_ue,
    )


@dataclass(frozen=True)
class EeOptimum:
    """Grid-search result: the maximizer and the whole EE surface.

    ``surface[i, j]`` is the EE at ``n_grid[i]``, ``p_grid[j]``; ``rates``
    holds the spectral efficiencies behind it (same shape).
    """

    power: float
    n_antennas: int
    value: float
    p_grid: np.ndarray
    n_grid: np.ndarray
    surface: np.ndarray
    rates: np.ndarray


def ee_optimize(direction, model, p_grid, n_grid, capacity_fn) -> EeOptimum:
    """Maximize EE over a (power, antenna-count) grid.

    ``capacity_fn(power_config, n_antennas)`` supplies the spectral
    efficiency (a float or an object with a ``rate`` attribute); each grid
    power is applied symmetrically to both ends.  Exhaustive search --
    the surface is cheap per point and unimodality is never assumed.
    Ties resolve to the smallest (N, p) pair for determinism.
    """
    p_grid = np.asarray(list(p_grid), dtype=float)
    n_grid = np.asarray([int(n) for n in n_grid])
    if p_grid.size == 0 or n_grid.size == 0:
        raise ValueError("power and antenna grids must be non-empty")
    surface = np.zeros((n_grid.size, p_grid.size))
    rates = np.zeros_like(surface)
    for i, n in enumerate(n_grid):
        for j, p in enumerate(p_grid):
            power = PowerConfig.symmetric(float(p))
            se = capacity_fn(power, int(n))
            se = getattr(se, "rate", se)
            rates[i, j] = se
            surface[i, j] = ee(direction, se, power, model, int(n))
    flat = int(np.argmax(surface))  # first occurrence wins ties: smallest N, then p
    i, j = divmod(flat, p_grid.size)
    return EeOptimum(
        power=float(p_grid[j]),
        n_antennas=int(n_grid[i]),
        value=float(surface[i, j]),
        p_grid=p_grid,
        n_grid=n_grid,
        surface=surface,
        rates=rates,
    )
