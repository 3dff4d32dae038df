import logging
import math

import numpy as np
import pytest

from qfhss.airsim import SymbolConfig
from qfhss.oracle import detection_monte_carlo, ideal_detection_probability
from qfhss.sweep import SweepConfig, SweepError, run_trials, sweep_metric

EVE_GRID = [500, 1000, 2500, 5000, 10000, 20000]


def combined_z(row, ideal_mean, ideal_se):
    return abs(row.mean - ideal_mean) / math.hypot(row.std_error, ideal_se)


def test_detection_at_equal_periods():
    s = sweep_metric(SweepConfig(hop_interval_us=5000), "detection_period_us", [5000], 10_000, seed=1)
    row = s.rows[0]
    p = 1 - 0.5 * (1 - 1 / 128)
    assert abs(row.mean - p) <= 3 * math.sqrt(p * (1 - p) / 10_000)
    assert abs(row.mean - 0.504) <= 0.02
    assert row.metric == "detect_prob" and row.trials == 10_000


def test_long_window_against_oracle():
    s = sweep_metric(SweepConfig(hop_interval_us=1000), "detection_period_us", [10_000], 10_000, seed=2)
    mean, se, _ = detection_monte_carlo(1000, 10_000, 128, 1_000_000, seed=3)
    assert s.rows[0].mean < 0.2
    assert combined_z(s.rows[0], mean, se) <= 3


def test_detection_rows_follow_given_order_and_decrease_up_to_hop():
    vals = [5000, 500, 2500, 1000]
    s = sweep_metric(SweepConfig(hop_interval_us=5000), "detection_period_us", vals, 4000, seed=4)
    assert s.values == vals
    by_value = dict(zip(s.values, s.rows))
    ordered = [by_value[v] for v in sorted(vals)]
    for a, b in zip(ordered, ordered[1:]):
        assert b.mean <= a.mean + 1.96 * math.hypot(a.std_error, b.std_error)


def test_detection_rises_again_past_two_hops():
    # Under the occupancy-argmax detector a window spanning many hops is
    # often won by whichever channel happens to repeat; the hit rate then
    # climbs back toward (k-1)/N. Both routes agree on the upturn.
    s = sweep_metric(SweepConfig(hop_interval_us=1000), "detection_period_us", [2500, 10_000], 10_000, seed=5)
    lo, hi = s.rows
    assert hi.mean - lo.mean > 4 * math.hypot(lo.std_error, hi.std_error)
    o_lo = ideal_detection_probability(1000, 2500, 128, 100_000, seed=6)
    o_hi = ideal_detection_probability(1000, 10_000, 128, 100_000, seed=7)
    assert o_hi.mean - o_lo.mean > 4 * math.hypot(o_lo.std_error, o_hi.std_error)


def test_aligned_jamming_sweep():
    cfg = SweepConfig(hop_interval_us=5000, sym=SymbolConfig(5000), aligned=True, symbols_per_trial=1000)
    row = sweep_metric(cfg, "jamming_period_us", [5000], 100, seed=8).rows[0]
    p = 382 / 16384
    assert abs(row.mean - p) <= 3 * math.sqrt(p * (1 - p) / 100_000)
    assert row.peak_over_phase == row.mean


def test_faster_hopping_never_hurts_at_long_jam_periods():
    grid = [5000, 10000, 20000]
    slow = sweep_metric(SweepConfig(hop_interval_us=5000), "jamming_period_us", grid, 1000, seed=9)
    fast = sweep_metric(SweepConfig(hop_interval_us=1000), "jamming_period_us", grid, 1000, seed=10)
    for f, s in zip(fast, slow):
        assert f.mean <= s.mean + 1.96 * math.hypot(f.std_error, s.std_error)


def test_jamming_grid_monotone():
    hops, periods = [1000, 2500, 5000], [1000, 500, 250]
    table = {
        th: sweep_metric(SweepConfig(hop_interval_us=th), "jamming_period_us", periods, 400, seed=11)
        for th in hops
    }
    for th in hops:
        rows = table[th].rows
        for a, b in zip(rows, rows[1:]):  # T_j decreasing
            assert b.mean >= a.mean - 1.96 * math.hypot(a.std_error, b.std_error)
    for i in range(len(periods)):
        col = [table[th].rows[i] for th in hops]
        for a, b in zip(col, col[1:]):  # T_h increasing
            assert b.mean <= a.mean + 1.96 * math.hypot(a.std_error, b.std_error)


def test_single_trial_collapses_ci(caplog):
    with caplog.at_level(logging.WARNING, logger="qfhss.sweep"):
        row = sweep_metric(SweepConfig(), "detection_period_us", [2500], 1, seed=0).rows[0]
    assert row.ci95_low == row.mean == row.ci95_high
    assert row.degenerate_ci
    assert "trials=1" in caplog.text


def test_parallel_matches_serial():
    cfg = SweepConfig(hop_interval_us=1000)
    for param, value in (("detection_period_us", 2500), ("jamming_period_us", 700)):
        serial = run_trials(cfg, param, value, 300, seed=12)
        parallel = run_trials(cfg, param, value, 300, seed=12, workers=2)
        assert np.array_equal(serial, parallel)


def test_chunking_does_not_change_results():
    cfg = SweepConfig(hop_interval_us=1000)
    full = run_trials(cfg, "detection_period_us", 5000, 2100, seed=13)
    head = run_trials(cfg, "detection_period_us", 5000, 50, seed=13)
    assert np.array_equal(full[:50], head)


def test_sweep_errors_carry_value():
    with pytest.raises(SweepError) as info:
        sweep_metric(SweepConfig(), "jamming_period_us", [1000, -5], 10, seed=0)
    assert info.value.value == -5 and info.value.param == "jamming_period_us"
    bad_sym = SweepConfig(hop_interval_us=1000, sym=SymbolConfig(300))
    with pytest.raises(SweepError) as info:
        sweep_metric(bad_sym, "jamming_period_us", [1000], 10, seed=0)
    assert "does not divide" in str(info.value)


@pytest.mark.parametrize("kw", [dict(param="hop_interval_us"), dict(values=[]), dict(trials=0)])
def test_sweep_preconditions(kw):
    args = dict(param="detection_period_us", values=[1000], trials=10)
    args.update(kw)
    with pytest.raises(ValueError):
        sweep_metric(SweepConfig(), args["param"], args["values"], args["trials"], seed=0)


def test_sweep_deterministic():
    cfg = SweepConfig(hop_interval_us=1000, noise_power=0.01)
    a = sweep_metric(cfg, "detection_period_us", EVE_GRID[:3], 200, seed=14)
    b = sweep_metric(cfg, "detection_period_us", EVE_GRID[:3], 200, seed=14)
    assert a.to_csv() == b.to_csv()
