"""Experiment registry with CSV/plot output.

Every experiment is a pure function of (parameters, trials, seed) and
renders to a :class:`ResultTable`; the CSV is the canonical artifact
(stable formatting, units in every header), the PNG a convenience plot.
Grid points get their own deterministic random substream, so results are
independent of worker scheduling, and curves that sweep an impairment
level share substreams (common random numbers) to keep their differences
smooth.
"""

from __future__ import annotations

import functools
import json
import math
import os
import subprocess
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, NamedTuple

import numpy as np

from .capacity import (
    MonteCarloConfig,
    PowerConfig,
    TddFrame,
    lower_bound_mc,
    upper_bound_closed_form,
    upper_bound_perfect_csi_mc,
)
from .channel import CovarianceSpec
from .energy import EnergyModel, ee
from .estimation import (
    PilotConfig,
    build_lmmse,
    conventional_lmmse,
    mse_of_linear_estimator,
    multi_pilot_mse,
)
from .impairments import HardwareProfile, ImpairmentScaling, evm, scaled_kappa
from .multicell import CellScenario, build_scenario, contaminated_uplink_rate, per_user_rate
from .numerics import RngStream


class InvalidConfigError(ValueError):
    """Raised for unknown experiment ids, override keys, or bad values."""


class Column(NamedTuple):
    name: str
    unit: str


@dataclass
class ResultTable:
    """Tabular experiment output plus reproducibility metadata.

    ``metadata`` holds only values determined by (id, overrides, seed,
    trials, build), so the rendered CSV is byte-identical across runs;
    the measured ``wall_time_s`` stays off the CSV for that reason.
    """

    experiment: str
    columns: list
    rows: list
    metadata: dict = field(default_factory=dict)
    wall_time_s: float | None = None

    def column_values(self, name: str) -> np.ndarray:
        for j, col in enumerate(self.columns):
            if col.name == name:
                return np.array([row[j] for row in self.rows], dtype=float)
        raise KeyError(f"no column named {name!r} in {self.experiment}")

    def to_csv(self) -> str:
        lines = [f"# {k} = {v}" for k, v in self.metadata.items()]
        lines.append(",".join(f"{c.name}[{c.unit}]" for c in self.columns))
        for row in self.rows:
            lines.append(",".join(_fmt(v) for v in row))
        return "\n".join(lines) + "\n"

    def write_csv(self, path) -> None:
        Path(path).write_text(self.to_csv(), encoding="utf-8")

    def write_png(self, path) -> None:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        x = self.column_values(self.columns[0].name)
        fig, ax = plt.subplots(figsize=(7.0, 4.5))
        for col in self.columns[1:]:
            if col.name.endswith("_se"):
                continue
            y = self.column_values(col.name)
            ax.plot(x, y, marker="o", markersize=3, label=col.name)
        if np.all(x > 0) and x.size > 1 and x.max() / x.min() >= 16.0:
            ax.set_xscale("log", base=2)
        ax.set_xlabel(f"{self.columns[0].name} [{self.columns[0].unit}]")
        units = {c.unit for c in self.columns[1:] if not c.name.endswith("_se")}
        ax.set_ylabel(f"[{units.pop()}]" if len(units) == 1 else "value")
        ax.set_title(self.experiment)
        ax.grid(True, which="both", alpha=0.3)
        ax.legend(fontsize=7)
        fig.tight_layout()
        fig.savefig(path, dpi=120)
        plt.close(fig)


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".12g")


@dataclass(frozen=True)
class ExperimentSpec:
    """A run request: experiment id plus overrides and output options."""

    id: str
    overrides: dict = field(default_factory=dict)
    trials: int | None = None
    seed: int = 42
    out_dir: str | None = None


@dataclass(frozen=True)
class _Experiment:
    id: str
    summary: str
    defaults: dict
    trials: int
    runner: Callable


def _worker_count() -> int:
    raw = os.environ.get("MIMO_SIM_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        count = int(raw)
    except ValueError as exc:
        raise InvalidConfigError(f"MIMO_SIM_THREADS must be an integer, got {raw!r}") from exc
    if count < 1:
        raise InvalidConfigError(f"MIMO_SIM_THREADS must be >= 1, got {count}")
    return count


def _run_tasks(tasks: list):
    """Evaluate zero-argument tasks, possibly on a worker pool, in order."""
    workers = min(_worker_count(), len(tasks))
    if workers <= 1:
        return [task() for task in tasks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda task: task(), tasks))


@functools.lru_cache(maxsize=1)
def _build_id() -> str:
    try:
        from importlib.metadata import version

        ver = version("mimosim")
    except Exception:
        ver = "unknown"
    describe = ""
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=5,
        )
        if out.returncode == 0:
            describe = out.stdout.strip()
    except Exception:
        pass
    return f"mimosim {ver} ({describe})" if describe else f"mimosim {ver}"


def _evm_label(kappa: float) -> str:
    return format(math.sqrt(kappa), "g")


def _mc(trials: int, stream: RngStream, rel_se_target) -> MonteCarloConfig:
    target = None if not rel_se_target else float(rel_se_target)
    return MonteCarloConfig(trials=trials, rng=stream, rel_se_target=target)


_FRAME = TddFrame.symmetric(1000)


# ---------------------------------------------------------------------------
# estimation figures


def _run_fig3(params, trials, root):
    del trials, root  # analytic evaluation
    n = int(params["n"])
    cov = CovarianceSpec("exponential", n, coeff=float(params["corr"])).build()
    tr = float(np.trace(cov).real)
    snrs = np.linspace(float(params["snr_min_db"]), float(params["snr_max_db"]), int(params["snr_points"]))
    kappas = [float(k) for k in params["kappas"]]
    columns = [Column("snr", "dB")]
    for k in kappas:
        columns.append(Column(f"lmmse_evm{_evm_label(k)}", "1"))
        columns.append(Column(f"conventional_evm{_evm_label(k)}", "1"))
    rows = []
    for snr in snrs:
        p = 10.0 ** (snr / 10.0)
        pilot = PilotConfig(math.sqrt(p))
        row = [float(snr)]
        for k in kappas:
            profile = HardwareProfile(kappa_r_bs=k, kappa_t_ue=k)
            op = build_lmmse(cov, None, pilot, profile)
            conv = conventional_lmmse(cov, None, pilot, profile.noise_bs)
            row.append(op.mse / tr)
            row.append(mse_of_linear_estimator(conv, cov, None, pilot, profile) / tr)
        rows.append(row)
    return ResultTable("fig3", columns, rows)


def _run_fig4(params, trials, root):
    n = int(params["n"])
    cov = CovarianceSpec("exponential", n, coeff=float(params["corr"])).build()
    tr = float(np.trace(cov).real)
    k = float(params["kappa"])
    p = 10.0 ** (float(params["snr_db"]) / 10.0)
    profile = HardwareProfile(kappa_r_bs=k, kappa_t_ue=k)
    op = build_lmmse(cov, None, PilotConfig(math.sqrt(p)), profile)
    lengths = [int(b) for b in params["lengths"]]
    n_rep = 10  # independent repeats behind the standard-error column
    columns = [
        Column("length", "uses"),
        Column("uncorrelated", "1"),
        Column("fully_correlated", "1"),
        Column("fully_correlated_se", "1"),
    ]

    def one_length(idx_b):
        idx, b = idx_b
        uncorr = multi_pilot_mse(op, PilotConfig(math.sqrt(p), b, "uncorrelated"))
        fc_pilot = PilotConfig(math.sqrt(p), b, "fully-correlated")
        if b == 1:
            return [b, uncorr / tr, uncorr / tr, 0.0]
        per = max(1, trials // n_rep)
        vals = [
            multi_pilot_mse(op, fc_pilot, mc_trials=per, rng=root.with_substream(idx * n_rep + r))
            for r in range(n_rep)
        ]
        vals = np.array(vals) / tr
        return [b, uncorr / tr, float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n_rep))]

    rows = _run_tasks([functools.partial(one_length, (i, b)) for i, b in enumerate(lengths)])
    return ResultTable("fig4", columns, rows)


# ---------------------------------------------------------------------------
# capacity figures


def _capacity_profile(kappa_bs: float, kappa_ue: float) -> HardwareProfile:
    return HardwareProfile(
        kappa_t_bs=kappa_bs, kappa_r_bs=kappa_bs, kappa_t_ue=kappa_ue, kappa_r_ue=kappa_ue
    )


def _run_fig5(params, trials, root, experiment_id):
    direction = str(params["direction"])
    p = 10.0 ** (float(params["snr_db"]) / 10.0)
    power = PowerConfig.symmetric(p)
    pilot = PilotConfig(math.sqrt(p))
    kappas = [float(k) for k in params["kappas"]]
    n_grid = [int(n) for n in params["n_grid"]]
    columns = [Column("n", "antennas")]
    for k in kappas:
        label = _evm_label(k)
        columns += [
            Column(f"upper_evm{label}", "bit/use"),
            Column(f"perfect_csi_evm{label}", "bit/use"),
            Column(f"perfect_csi_evm{label}_se", "bit/use"),
            Column(f"lower_evm{label}", "bit/use"),
            Column(f"lower_evm{label}_se", "bit/use"),
        ]

    def one_n(idx, n):
        cov = CovarianceSpec("uncorrelated", n).build()
        row = [n]
        for k in kappas:
            profile = _capacity_profile(k, k)
            mc = _mc(trials, root.with_substream(idx), params["rel_se_target"])
            upper = upper_bound_closed_form(direction, cov, power, profile, _FRAME)
            perfect = upper_bound_perfect_csi_mc(direction, cov, power, profile, _FRAME, mc)
            lower = lower_bound_mc(direction, cov, None, None, power, profile, pilot, _FRAME, mc)
            row += [upper, perfect.rate, perfect.std_error, lower.rate, lower.std_error]
        return row

    rows = _run_tasks([functools.partial(one_n, i, n) for i, n in enumerate(n_grid)])
    return ResultTable(experiment_id, columns, rows)


def _run_fig6(params, trials, root):
    direction = str(params["direction"])
    p = 10.0 ** (float(params["snr_db"]) / 10.0)
    power = PowerConfig.symmetric(p)
    pilot = PilotConfig(math.sqrt(p))
    k_ue = float(params["kappa_ue"])
    kappa_bs_list = [float(k) for k in params["kappa_bs_list"]]
    n_grid = [int(n) for n in params["n_grid"]]
    columns = [Column("n", "antennas")]
    for k in kappa_bs_list:
        label = _evm_label(k)
        columns += [Column(f"rate_bs_evm{label}", "bit/use"), Column(f"rate_bs_evm{label}_se", "bit/use")]

    def one_n(idx, n):
        cov = CovarianceSpec("uncorrelated", n).build()
        row = [n]
        for k_bs in kappa_bs_list:
            profile = _capacity_profile(k_bs, k_ue)
            mc = _mc(trials, root.with_substream(idx), params["rel_se_target"])
            est = lower_bound_mc(direction, cov, None, None, power, profile, pilot, _FRAME, mc)
            row += [est.rate, est.std_error]
        return row

    rows = _run_tasks([functools.partial(one_n, i, n) for i, n in enumerate(n_grid)])
    return ResultTable("fig6", columns, rows)


def _run_fig10(params, trials, root):
    direction = str(params["direction"])
    p = 10.0 ** (float(params["snr_db"]) / 10.0)
    power = PowerConfig.symmetric(p)
    pilot = PilotConfig(math.sqrt(p))
    k_ue = float(params["kappa_ue"])
    base = float(params["base_kappa"])
    exponents = [float(t) for t in params["exponents"]]
    n_grid = [int(n) for n in params["n_grid"]]
    columns = [Column("n", "antennas")]
    for t in exponents:
        label = format(t, "g")
        columns += [Column(f"rate_tau{label}", "bit/use"), Column(f"rate_tau{label}_se", "bit/use")]

    def one_n(idx, n):
        cov = CovarianceSpec("uncorrelated", n).build()
        row = [n]
        for t in exponents:
            k_t_bs, k_r_bs = scaled_kappa(ImpairmentScaling(t, t, base), n, max_kappa=None)
            profile = HardwareProfile(
                kappa_t_bs=k_t_bs, kappa_r_bs=k_r_bs, kappa_t_ue=k_ue, kappa_r_ue=k_ue
            )
            mc = _mc(trials, root.with_substream(idx), params["rel_se_target"])
            est = lower_bound_mc(direction, cov, None, None, power, profile, pilot, _FRAME, mc)
            row += [est.rate, est.std_error]
        return row

    rows = _run_tasks([functools.partial(one_n, i, n) for i, n in enumerate(n_grid)])
    return ResultTable("fig10", columns, rows)


# ---------------------------------------------------------------------------
# energy-efficiency figures


def _ee_configs(params):
    configs = []
    for total in (float(c) for c in params["circuit_totals"]):
        for frac in (float(f) for f in params["rho_fractions"]):
            rho = total * frac
            zeta = total - rho
            configs.append((total, frac, rho, zeta))
    return configs


def _run_fig7(params, trials, root, experiment_id):
    direction = str(params["direction"])
    kappa = float(params["kappa"])
    p_max = float(params["p_max"])
    noise = p_max / 10.0 ** (float(params["snr_at_pmax_db"]) / 10.0)
    profile = HardwareProfile(
        kappa_t_bs=kappa, kappa_r_bs=kappa, kappa_t_ue=kappa, kappa_r_ue=kappa,
        noise_bs=noise, noise_ue=noise,
    )
    n_grid = [int(n) for n in params["n_grid"]]
    p_grid = np.geomspace(p_max * float(params["p_span"]), p_max, int(params["p_points"]))
    corr = float(params["corr"])

    def one_n(idx, n):
        cov = CovarianceSpec("exponential", n, coeff=corr).build()
        out = []
        for j, p in enumerate(p_grid):
            power = PowerConfig.symmetric(float(p))
            mc = _mc(trials, root.with_substream(idx * 1000 + j), params["rel_se_target"])
            est = lower_bound_mc(
                direction, cov, None, None, power, profile, PilotConfig(math.sqrt(p)), _FRAME, mc
            )
            out.append((est.rate, est.std_error))
        return out

    surface = _run_tasks([functools.partial(one_n, i, n) for i, n in enumerate(n_grid)])
    configs = _ee_configs(params)
    columns = [Column("n", "antennas")]
    for total, frac, _, _ in configs:
        label = f"c{format(total, 'g')}_f{format(frac, 'g')}"
        if experiment_id == "fig7":
            columns += [Column(f"ee_{label}", "bit/muJ"), Column(f"ee_{label}_se", "bit/muJ")]
        else:
            columns.append(Column(f"p_opt_{label}", "muJ"))
    rows = []
    for i, n in enumerate(n_grid):
        row = [n]
        for total, frac, rho, zeta in configs:
            model = EnergyModel.from_frame(
                _FRAME, rho, zeta, float(params["omega"]), float(params["omega"])
            )
            ee_vals = np.array(
                [
                    ee(direction, rate, PowerConfig.symmetric(float(p)), model, n)
                    for (rate, _), p in zip(surface[i], p_grid)
                ]
            )
            j = int(np.argmax(ee_vals))
            if experiment_id == "fig7":
                rate, se = surface[i][j]
                ee_se = ee_vals[j] * (se / rate) if rate > 0 else 0.0
                row += [float(ee_vals[j]), float(ee_se)]
            else:
                row.append(float(p_grid[j]))
        rows.append(row)
    return ResultTable(experiment_id, columns, rows)


# ---------------------------------------------------------------------------
# contamination and multi-cell figures


def _run_fig8(params, trials, root):
    n = int(params["n"])
    snr_db = float(params["snr_db"])
    kappas = [float(k) for k in params["kappas"]]
    combiner = str(params["combiner"])
    regular = params["regular_strength_db"]
    regular_strength = None if regular is None else 10.0 ** (float(regular) / 10.0)
    strengths_db = np.linspace(
        float(params["strength_db_min"]), float(params["strength_db_max"]), int(params["points"])
    )
    columns = [Column("strength", "dB")]
    for k in kappas:
        label = _evm_label(k)
        columns += [
            Column(f"rate_evm{label}", "bit/use"),
            Column(f"rate_evm{label}_se", "bit/use"),
            Column(f"sinr_evm{label}", "1"),
        ]

    def one_point(idx, s_db):
        row = [float(s_db)]
        for k in kappas:
            profile = HardwareProfile(kappa_t_ue=k, kappa_r_bs=k)
            mc = _mc(trials, root.with_substream(idx), params["rel_se_target"])
            est = contaminated_uplink_rate(
                n, 10.0 ** (s_db / 10.0), profile, _FRAME, mc,
                snr_db=snr_db, regular_strength=regular_strength, combiner=combiner,
            )
            row += [est.rate, est.std_error, est.sinr]
        return row

    rows = _run_tasks([functools.partial(one_point, i, s) for i, s in enumerate(strengths_db)])
    return ResultTable("fig8", columns, rows)


def _interp_crossing(x_db, values, target):
    """First x (going left to right) where a decreasing curve hits target."""
    values = np.asarray(values, dtype=float)
    for i in range(len(values) - 1):
        lo, hi = values[i], values[i + 1]
        if (lo - target) * (hi - target) <= 0.0 and lo != hi:
            frac = (lo - target) / (lo - hi)
            return float(x_db[i] + frac * (x_db[i + 1] - x_db[i]))
    return math.nan


def _run_contamination_sweep(params, trials, root):
    n = int(params["n"])
    snr_db = float(params["snr_db"])
    combiner = str(params["combiner"])
    strengths_db = np.linspace(
        float(params["strength_db_min"]), float(params["strength_db_max"]), int(params["points"])
    )
    columns = [
        Column("kappa", "1"),
        Column("evm", "1"),
        Column("predicted_breaking_point", "dB"),
        Column("sinr_onset_3db", "dB"),
        Column("rate_midpoint", "dB"),
    ]
    rows = []
    for k in (float(k) for k in params["kappas"]):
        profile = HardwareProfile(kappa_t_ue=k, kappa_r_bs=k)

        def one(idx, strength):
            mc = _mc(trials, root.with_substream(idx), params["rel_se_target"])
            return contaminated_uplink_rate(
                n, strength, profile, _FRAME, mc, snr_db=snr_db, combiner=combiner
            )

        base = one(len(strengths_db), 0.0)
        sweep = _run_tasks(
            [functools.partial(one, i, 10.0 ** (s / 10.0)) for i, s in enumerate(strengths_db)]
        )
        sinrs = [est.sinr for est in sweep]
        rates = [est.rate for est in sweep]
        onset = _interp_crossing(strengths_db, sinrs, base.sinr / 2.0)
        midpoint = _interp_crossing(strengths_db, rates, 0.5 * (base.rate + rates[-1]))
        rows.append([k, math.sqrt(k), 10.0 * math.log10(k), onset, midpoint])
    return ResultTable("contamination-sweep", columns, rows)


def _fig9_scenario(params, n, kappa, policy):
    profile = HardwareProfile(kappa_t_ue=kappa, kappa_r_bs=kappa)
    return build_scenario(CellScenario(n_antennas=n, profile=profile, pilot_policy=policy))


# The 6-user ring has two geometric equivalence classes on the square
# torus: the on-axis pair (weight 1/3) and the four oblique users
# (weight 2/3); averaging the two class representatives gives the
# cell-average rate at a third of the cost.
_RING_CLASSES = ((0, 1.0 / 3.0), (1, 2.0 / 3.0))


def _run_fig9(params, trials, root):
    kappa = float(params["kappa"])
    combiner = str(params["combiner"])
    n_grid = [int(n) for n in params["n_grid"]]
    variants = [("reused", 0.0), ("unique", 0.0), ("reused", kappa), ("unique", kappa)]
    columns = [Column("n", "antennas")]
    for policy, k in variants:
        label = f"{policy}_evm{_evm_label(k)}"
        columns += [Column(f"rate_{label}", "bit/use"), Column(f"rate_{label}_se", "bit/use")]

    def one_case(n_idx, n, policy, k):
        scenario = _fig9_scenario(params, n, k, policy)
        total = 0.0
        var = 0.0
        for class_idx, (user, weight) in enumerate(_RING_CLASSES):
            mc = _mc(trials, root.with_substream(n_idx * 10 + class_idx), params["rel_se_target"])
            est = per_user_rate(user, combiner, scenario, _FRAME, mc)
            total += weight * est.rate
            var += (weight * est.std_error) ** 2
        return total, math.sqrt(var)

    tasks = []
    for i, n in enumerate(n_grid):
        for policy, k in variants:
            tasks.append(functools.partial(one_case, i, n, policy, k))
    flat = _run_tasks(tasks)
    rows = []
    for i, n in enumerate(n_grid):
        row = [n]
        for j in range(len(variants)):
            rate, se = flat[i * len(variants) + j]
            row += [rate, se]
        rows.append(row)
    return ResultTable("fig9", columns, rows)


# ---------------------------------------------------------------------------
# registry


def _register() -> dict:
    exps = [
        _Experiment(
            "fig3",
            "LMMSE vs distortion-unaware estimation MSE over SNR (analytic)",
            {
                "n": 50,
                "corr": 0.7,
                "snr_min_db": -10.0,
                "snr_max_db": 50.0,
                "snr_points": 13,
                "kappas": [0.0, 0.0025, 0.01],
            },
            1,
            _run_fig3,
        ),
        _Experiment(
            "fig4",
            "Estimation MSE over pilot block length for both distortion correlation modes",
            {
                "n": 50,
                "corr": 0.7,
                "snr_db": 30.0,
                "kappa": 0.0025,
                "lengths": [1, 2, 4, 8, 16, 32, 64],
                "rel_se_target": 0.0,
            },
            100_000,
            _run_fig4,
        ),
        _Experiment(
            "fig5a",
            "Capacity bound sandwich over antenna count at high SNR",
            {
                "snr_db": 20.0,
                "n_grid": [1, 4, 16, 64, 256, 512],
                "kappas": [0.0, 0.0025, 0.0225],
                "direction": "ul",
                "rel_se_target": 0.0,
            },
            10_000,
            lambda p, t, r: _run_fig5(p, t, r, "fig5a"),
        ),
        _Experiment(
            "fig5b",
            "Capacity bound sandwich over antenna count at low SNR",
            {
                "snr_db": 0.0,
                "n_grid": [1, 4, 16, 64, 256, 512],
                "kappas": [0.0, 0.0025, 0.0225],
                "direction": "ul",
                "rel_se_target": 0.0,
            },
            10_000,
            lambda p, t, r: _run_fig5(p, t, r, "fig5b"),
        ),
        _Experiment(
            "fig6",
            "Rate sensitivity to BS hardware quality at fixed UE quality",
            {
                "snr_db": 20.0,
                "kappa_ue": 0.0025,
                "kappa_bs_list": [0.0, 0.0025, 0.0225],
                "n_grid": [1, 4, 16, 64, 256, 512],
                "direction": "ul",
                "rel_se_target": 0.0,
            },
            10_000,
            _run_fig6,
        ),
        _Experiment(
            "fig7",
            "Optimized energy efficiency over antenna count for circuit-power splits",
            {
                "direction": "dl",
                "kappa": 0.0025,
                "corr": 0.7,
                "p_max": 0.0222,
                "snr_at_pmax_db": 20.0,
                "p_span": 1e-3,
                "p_points": 16,
                "omega": 0.3,
                "circuit_totals": [2.0, 0.02],
                "rho_fractions": [0.0, 0.01, 0.1],
                "n_grid": [1, 2, 4, 8, 16, 32, 64, 128, 256, 512],
                "rel_se_target": 0.0,
            },
            10_000,
            lambda p, t, r: _run_fig7(p, t, r, "fig7"),
        ),
        _Experiment(
            "fig7power",
            "EE-optimal transmit power behind the fig7 curves",
            {
                "direction": "dl",
                "kappa": 0.0025,
                "corr": 0.7,
                "p_max": 0.0222,
                "snr_at_pmax_db": 20.0,
                "p_span": 1e-3,
                "p_points": 16,
                "omega": 0.3,
                "circuit_totals": [2.0, 0.02],
                "rho_fractions": [0.0, 0.01, 0.1],
                "n_grid": [1, 2, 4, 8, 16, 32, 64, 128, 256, 512],
                "rel_se_target": 0.0,
            },
            10_000,
            lambda p, t, r: _run_fig7(p, t, r, "fig7power"),
        ),
        _Experiment(
            "fig8",
            "Rate under one pilot-sharing contaminator of swept strength",
            {
                "n": 200,
                "snr_db": 20.0,
                "kappas": [0.0025, 0.01],
                "strength_db_min": -40.0,
                "strength_db_max": 0.0,
                "points": 17,
                "combiner": "mrc",
                "regular_strength_db": None,
                "rel_se_target": 0.0,
            },
            10_000,
            _run_fig8,
        ),
        _Experiment(
            "fig9",
            "Multi-cell average rate: unique vs reused pilots, ideal vs impaired",
            {
                "kappa": 0.01,
                "combiner": "mmse",
                "n_grid": [100, 200, 400],
                "rel_se_target": 0.0,
            },
            4_000,
            _run_fig9,
        ),
        _Experiment(
            "fig10",
            "Rate under BS hardware quality degrading with antenna count",
            {
                "snr_db": 20.0,
                "kappa_ue": 0.0025,
                "base_kappa": 0.0025,
                "exponents": [0.0, 0.25, 0.5, 1.0, 2.0],
                "n_grid": [32, 64, 128, 256, 512, 1024, 2048],
                "direction": "ul",
                "rel_se_target": 0.0,
            },
            10_000,
            _run_fig10,
        ),
        _Experiment(
            "contamination-sweep",
            "Breaking-point analysis of the contaminator strength sweep",
            {
                "n": 200,
                "snr_db": 20.0,
                "kappas": [0.0025, 0.01],
                "strength_db_min": -40.0,
                "strength_db_max": 0.0,
                "points": 33,
                "combiner": "mrc",
                "rel_se_target": 0.0,
            },
            10_000,
            _run_contamination_sweep,
        ),
    ]
    return {e.id: e for e in exps}


_REGISTRY = _register()


def experiment_ids() -> list:
    return sorted(_REGISTRY)


def describe(experiment_id: str) -> str:
    return _resolve_id(experiment_id).summary


def _resolve_id(experiment_id: str) -> _Experiment:
    try:
        return _REGISTRY[experiment_id]
    except KeyError:
        known = ", ".join(experiment_ids())
        raise InvalidConfigError(f"unknown experiment {experiment_id!r}; known ids: {known}") from None


def _resolve(spec: ExperimentSpec):
    defn = _resolve_id(spec.id)
    params = dict(defn.defaults)
    unknown = sorted(set(spec.overrides) - set(params))
    if unknown:
        raise InvalidConfigError(
            f"unknown override keys for {spec.id}: {', '.join(unknown)}; "
            f"valid keys: {', '.join(sorted(params))}"
        )
    params.update(spec.overrides)
    trials = defn.trials if spec.trials is None else int(spec.trials)
    if trials < 1:
        raise InvalidConfigError(f"trials must be >= 1, got {trials}")
    return defn, params, trials


def run(spec: ExperimentSpec) -> ResultTable:
    """Execute the experiment and (optionally) write `<out>/<id>.csv` and `.png`."""
    defn, params, trials = _resolve(spec)
    try:
        root = RngStream(int(spec.seed))
    except ValueError as exc:
        raise InvalidConfigError(str(exc)) from exc
    start = time.perf_counter()
    table = defn.runner(params, trials, root)
    table.wall_time_s = time.perf_counter() - start
    table.metadata = {
        "experiment": spec.id,
        "seed": spec.seed,
        "trials": trials,
        "overrides": json.dumps(spec.overrides, sort_keys=True),
        "build": _build_id(),
        **table.metadata,
    }
    if spec.out_dir is not None:
        out = Path(spec.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        table.write_csv(out / f"{spec.id}.csv")
        table.write_png(out / f"{spec.id}.png")
    return table


def validate(spec: ExperimentSpec) -> list:
    """Dry-run: echo resolved parameters plus derived quantities, no sampling."""
    defn, params, trials = _resolve(spec)
    lines = [
        f"experiment = {spec.id}: {defn.summary}",
        f"seed = {spec.seed}",
        f"trials = {trials}",
    ]
    for key in sorted(params):
        lines.append(f"{key} = {params[key]}")
    f = _FRAME
    lines.append(
        "frame fractions: ul_data=%g dl_data=%g ul_pilot=%g dl_pilot=%g (sum=%g)"
        % (
            f.t_ul_data / f.t_coher,
            f.t_dl_data / f.t_coher,
            f.t_ul_pilot / f.t_coher,
            f.t_dl_pilot / f.t_coher,
            (f.t_ul_data + f.t_dl_data + f.t_ul_pilot + f.t_dl_pilot) / f.t_coher,
        )
    )
    for key in sorted(params):
        value = params[key]
        if key.endswith("_db") and isinstance(value, (int, float)) and value is not None:
            lines.append(f"{key}: linear ratio = {10.0 ** (float(value) / 10.0):g}")
        if "kappa" in key and key != "kappa_bs_list" and isinstance(value, (int, float)):
            lines.append(f"{key} = {value:g}: evm = {evm(float(value)):g}")
        if key in ("kappas", "kappa_bs_list"):
            pairs = ", ".join(f"{float(k):g}->{evm(float(k)):g}" for k in value)
            lines.append(f"{key} kappa->evm: {pairs}")
    if spec.id == "fig9":
        cfg = CellScenario(n_antennas=1)
        snr = 10.0 * math.log10(cfg.power_ue * cfg.pathloss(cfg.ring_radius) / cfg.resolved_noise())
        lines.append(f"serving SNR = {snr:.1f} dB")
    return lines
