"""Wrap-around multi-cell uplink: torus geometry, path-loss bookkeeping,
pilot-contamination structure, and the per-user rate engine.

Scenario-level frozen values follow from the default deployment: 4x4
cells of 400 m, users on a 100 m ring, path loss 10^-1.53 / D^3.76, and
a power-to-noise ratio that puts the serving link at 32 dB.
"""

import dataclasses
import math

import numpy as np
import pytest

from mimosim.capacity import (
    MonteCarloConfig,
    MonteCarloError,
    PowerConfig,
    TddFrame,
    lower_bound_mc,
)
from mimosim.estimation import PilotConfig, build_lmmse
from mimosim.impairments import HardwareProfile
from mimosim.multicell import (
    CellScenario,
    PilotAllocation,
    BuiltScenario,
    build_scenario,
    contaminated_uplink_rate,
    contamination_negligibility,
    data_interference_cov,
    per_user_rate,
    pilot_interference_cov,
    wrap_distance,
)

from conftest import stream

FRAME = TddFrame.symmetric(1000, 0.05)


def mcc(trials, substream=0, rel_se_target=None):
    return MonteCarloConfig(trials, stream(21, substream), rel_se_target)


# ---------------------------------------------------------------------------
# torus geometry


def test_wrap_distance_examples():
    assert wrap_distance((0.0, 0.0), (0.0, 0.0), 1600.0) == 0.0
    assert wrap_distance((0.0, 0.0), (1500.0, 0.0), 1600.0) == pytest.approx(100.0)
    assert wrap_distance((0.0, 0.0), (800.0, 800.0), 1600.0) == pytest.approx(800.0 * math.sqrt(2))
    assert wrap_distance((100.0, 50.0), (300.0, 50.0), 1600.0) == pytest.approx(200.0)
    a, b = (123.0, 1403.0), (1580.0, 77.0)
    assert wrap_distance(a, b, 1600.0) == wrap_distance(b, a, 1600.0)
    with pytest.raises(ValueError):
        wrap_distance((0.0, 0.0), (1.0, 1.0), 0.0)


def test_default_layout():
    cfg = CellScenario(n_antennas=16)
    sc = build_scenario(cfg)
    assert cfg.world == 1600.0
    assert sc.bs_positions.shape == (16, 2)
    np.testing.assert_allclose(sc.bs_positions[0], [200.0, 200.0])
    assert sc.n_users == 96
    np.testing.assert_allclose(sc.ue_positions[0], [300.0, 200.0])  # due east
    np.testing.assert_array_equal(sc.serving, np.repeat(np.arange(16), 6))
    ring = np.array(
        [wrap_distance(sc.ue_positions[u], sc.bs_positions[sc.serving[u]], cfg.world)
         for u in range(sc.n_users)]
    )
    np.testing.assert_allclose(ring, 100.0, rtol=1e-12)


def test_pathloss_model():
    cfg = CellScenario(n_antennas=4)
    assert cfg.pathloss(100.0) == pytest.approx(10.0**-9.05, rel=1e-12)
    drop_db = 10.0 * math.log10(cfg.pathloss(100.0) / cfg.pathloss(200.0))
    assert drop_db == pytest.approx(3.76 * 10.0 * math.log10(2.0), rel=1e-12)


def test_serving_and_neighbor_snr():
    cfg = CellScenario(n_antennas=16)
    sc = build_scenario(cfg)
    snr_db = 10.0 * math.log10(cfg.power_ue * sc.gains[0, 0] / sc.noise_var)
    assert snr_db == pytest.approx(32.0, abs=0.05)
    adjacent = [
        c
        for c in range(1, 16)
        if wrap_distance(sc.bs_positions[0], sc.bs_positions[c], cfg.world) < 600.0
    ]
    assert len(adjacent) == 8
    neigh_db = [10.0 * math.log10(cfg.power_ue * sc.gains[0, c] / sc.noise_var) for c in adjacent]
    assert 1.0 < min(neigh_db) < 2.5
    assert 13.5 < max(neigh_db) < 14.5


def test_noise_override_and_validation():
    assert CellScenario(n_antennas=4, noise_var=1e-13).resolved_noise() == 1e-13
    with pytest.raises(ValueError):
        CellScenario(n_antennas=0)
    with pytest.raises(ValueError):
        CellScenario(n_antennas=4, ring_radius=500.0)
    with pytest.raises(ValueError):
        CellScenario(n_antennas=4, pilot_policy="fractional")
    with pytest.raises(ValueError):
        CellScenario(n_antennas=4, noise_var=0.0)


# ---------------------------------------------------------------------------
# pilot allocation and long-term interference


def test_pilot_allocation_sets():
    sc = build_scenario(CellScenario(n_antennas=4))
    par = sc.allocation.parallel(0)
    np.testing.assert_array_equal(par, np.arange(6, 96, 6))  # one co-pilot UE per other cell
    assert sc.allocation.orthogonal(0).size == 80
    uni = build_scenario(CellScenario(n_antennas=4, pilot_policy="unique"))
    assert uni.allocation.parallel(0).size == 0
    assert uni.allocation.orthogonal(0).size == 95


def test_pilot_interference_cov():
    sc = build_scenario(CellScenario(n_antennas=8))
    s = pilot_interference_cov(0, sc.allocation, sc)
    total = sum(sc.gains[l, 0] for l in sc.allocation.parallel(0))
    np.testing.assert_allclose(s, sc.cfg.power_ue * total * np.eye(8), rtol=1e-12)
    uni = build_scenario(CellScenario(n_antennas=8, pilot_policy="unique"))
    np.testing.assert_array_equal(pilot_interference_cov(0, uni.allocation, uni), np.zeros((8, 8)))


def test_data_interference_cov():
    sc = build_scenario(CellScenario(n_antennas=16))
    gen = stream(3).generator()
    h = (gen.standard_normal((96, 16)) + 1j * gen.standard_normal((96, 16))) * math.sqrt(0.5)
    h *= np.sqrt(sc.gains[:, 0])[:, None]
    q = data_interference_cov(0, sc, h)
    manual = sc.cfg.power_ue * sum(np.outer(h[l], h[l].conj()) for l in range(1, 96))
    np.testing.assert_allclose(q, manual, rtol=1e-10)
    np.testing.assert_allclose(q, q.conj().T, atol=1e-18)
    with pytest.raises(ValueError):
        data_interference_cov(0, sc, h[:50])
    # long-term average: E{Q} = p * sum_l gain_l * I
    acc = np.zeros((16, 16), dtype=np.complex128)
    draws = 400
    for _ in range(draws):
        h = (gen.standard_normal((96, 16)) + 1j * gen.standard_normal((96, 16))) * math.sqrt(0.5)
        h *= np.sqrt(sc.gains[:, 0])[:, None]
        acc += data_interference_cov(0, sc, h)
    mean = acc / draws
    target = sc.cfg.power_ue * sc.gains[1:, 0].sum()
    assert np.trace(mean).real / 16 == pytest.approx(target, rel=0.05)
    off = mean - np.diag(np.diagonal(mean))
    assert np.abs(off).max() < 0.05 * target


# ---------------------------------------------------------------------------
# contamination negligibility


def synthetic_two_user_scenario(gain_ratio, kappa, pathloss_exp=3.7):
    cfg = CellScenario(
        n_antennas=4, pathloss_exp=pathloss_exp, profile=HardwareProfile.symmetric(kappa)
    )
    g_u = 1e-9
    gains = np.array([[g_u], [g_u * gain_ratio**-pathloss_exp]])
    sc = BuiltScenario(
        cfg=cfg,
        bs_positions=np.zeros((1, 2)),
        ue_positions=np.zeros((2, 2)),
        serving=np.zeros(2, dtype=int),
        gains=gains,
        allocation=PilotAllocation(np.zeros(2, dtype=int)),
        noise_var=cfg.resolved_noise(),
    )
    op = build_lmmse(
        gains[0, 0] * np.eye(4),
        pilot_interference_cov(0, sc.allocation, sc),
        PilotConfig(symbol=math.sqrt(cfg.power_ue)),
        cfg.profile,
    )
    return sc, op


def test_negligibility_distance_ratios():
    """One contaminator at distance ratio x contributes x^(-2*3.7) to the rhs;
    1.9 lands near -20.6 dB and 2.5 near -29.4 dB."""
    for ratio, rhs_db in [(1.9, -20.6), (2.5, -29.4)]:
        sc, op = synthetic_two_user_scenario(ratio, kappa=0.0025)
        chk = contamination_negligibility(0, sc.allocation, sc, op)
        assert chk.lhs == 0.0025
        assert 10.0 * math.log10(chk.rhs) == pytest.approx(rhs_db, abs=0.05)
    # kappa at -26 dB: not 10 dB above either ratio's rhs...
    sc, op = synthetic_two_user_scenario(1.9, kappa=0.0025)
    assert not contamination_negligibility(0, sc.allocation, sc, op).negligible
    sc, op = synthetic_two_user_scenario(2.5, kappa=0.0025)
    assert not contamination_negligibility(0, sc.allocation, sc, op).negligible
    # ...but clears the 2.5-ratio rhs at a 3 dB margin
    chk = contamination_negligibility(0, sc.allocation, sc, op, margin_db=3.0)
    assert chk.negligible


def test_negligibility_edge_cases():
    sc, op = synthetic_two_user_scenario(1.0, kappa=1.0)
    chk = contamination_negligibility(0, sc.allocation, sc, op)
    assert chk.rhs == pytest.approx(1.0) and not chk.negligible
    uni = build_scenario(CellScenario(n_antennas=4, pilot_policy="unique",
                                      profile=HardwareProfile.symmetric(0.0025)))
    op4 = build_lmmse(uni.gains[0, 0] * np.eye(4), None,
                      PilotConfig(symbol=math.sqrt(uni.cfg.power_ue)), uni.cfg.profile)
    chk = contamination_negligibility(0, uni.allocation, uni, op4)
    assert chk.rhs == 0.0 and chk.negligible
    with pytest.raises(ValueError):
        contamination_negligibility(
            0, sc.allocation, sc, dataclasses.replace(op, matrix=np.zeros_like(op.matrix))
        )


# ---------------------------------------------------------------------------
# rate engine


def test_contamination_saturates_while_clean_sinr_scales():
    """With a pilot-sharing contaminator of strength s the MRC SINR plateaus
    at 1/s for large arrays; without it the SINR keeps growing ~N."""
    ideal = HardwareProfile.ideal()
    con, free = {}, {}
    for n in (32, 128, 512):
        con[n] = contaminated_uplink_rate(n, 0.1, ideal, FRAME, mcc(2000, n)).sinr
        free[n] = contaminated_uplink_rate(n, 0.0, ideal, FRAME, mcc(2000, n)).sinr
    assert con[32] < con[128] < con[512] < 10.0
    assert con[512] > 9.5  # within 5% of the 1/s plateau
    assert free[512] / free[128] == pytest.approx(4.0, rel=0.1)
    assert free[128] / free[32] == pytest.approx(4.0, rel=0.1)


def test_engine_validation():
    ideal = HardwareProfile.ideal()
    with pytest.raises(ValueError):
        contaminated_uplink_rate(8, -0.1, ideal, FRAME, mcc(2000))
    with pytest.raises(ValueError):
        contaminated_uplink_rate(8, 0.1, ideal, FRAME, mcc(500))
    with pytest.raises(ValueError):
        contaminated_uplink_rate(8, 0.1, ideal, FRAME, mcc(2000), combiner="zf")
    with pytest.raises(MonteCarloError):
        contaminated_uplink_rate(8, 0.1, ideal, FRAME, mcc(1000, 0, rel_se_target=1e-7))


def test_mmse_beats_mrc():
    cfg = CellScenario(n_antennas=32, profile=HardwareProfile.symmetric(0.0025))
    sc = build_scenario(cfg)
    mrc = per_user_rate(0, "mrc", sc, FRAME, mcc(2000, 1))
    mmse = per_user_rate(0, "mmse", sc, FRAME, mcc(2000, 1))
    assert mmse.rate > mrc.rate + 3.0 * (mmse.std_error + mrc.std_error)


def test_unique_pilots_beat_reused_under_shared_seed():
    rates = {}
    for policy in ("reused", "unique"):
        cfg = CellScenario(n_antennas=100, pilot_policy=policy)
        sc = build_scenario(cfg)
        rates[policy] = per_user_rate(0, "mrc", sc, FRAME, mcc(2000, 2))
    assert rates["unique"].sinr > rates["reused"].sinr
    assert rates["unique"].rate > rates["reused"].rate


def test_single_cell_reduces_to_link_bound():
    """A 1-cell, 1-user deployment is exactly the single-link MRC bound."""
    p = 0.0222
    g = CellScenario(n_antennas=4).pathloss(100.0)
    noise = p * g / 100.0  # 20 dB
    prof = HardwareProfile.symmetric(0.0025)
    cfg = CellScenario(
        n_antennas=32, cells_per_side=1, ues_per_cell=1, noise_var=noise, profile=prof
    )
    sc = build_scenario(cfg)
    cell = per_user_rate(0, "mrc", sc, FRAME, mcc(20_000, 3))
    link = lower_bound_mc(
        "ul",
        g * np.eye(32),
        None,
        None,
        PowerConfig.symmetric(p),
        dataclasses.replace(prof, noise_bs=noise),  # scenario noise, not the default floor
        PilotConfig(symbol=math.sqrt(p)),
        FRAME,
        mcc(20_000, 4),
    )
    assert abs(cell.rate - link.rate) < 3.0 * (cell.std_error + link.std_error)


def test_rate_reproducible():
    sc = build_scenario(CellScenario(n_antennas=16))
    a = per_user_rate(0, "mrc", sc, FRAME, mcc(1000, 5))
    b = per_user_rate(0, "mrc", sc, FRAME, mcc(1000, 5))
    assert a == b
