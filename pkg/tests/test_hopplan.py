import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from qfhss.hopplan import (
    BiasWarning,
    EmptyScheduleError,
    build_channel_table,
    derive_hop_schedule,
    index_uniformity,
    load_channel_table,
    mapping_bias,
    verify_sync,
)

PLAN128 = build_channel_table(2.400e9, 1.0e6, 128)


def test_channel_table_arithmetic():
    assert PLAN128.table[0] == 2.400e9
    assert PLAN128.table[127] == 2.527e9
    assert len(build_channel_table(n_channels=256).table) == 256


@pytest.mark.parametrize("n", [0, 257, 300])
def test_channel_table_domain(n):
    with pytest.raises(ValueError):
        build_channel_table(n_channels=n)


def test_channel_table_csv_round_trip(tmp_path):
    path = tmp_path / "table.csv"
    PLAN128.to_csv(path)
    assert path.read_text().splitlines()[0] == "index,freq_hz"
    assert load_channel_table(path) == PLAN128


def test_nonuniform_table_file(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("index,freq_hz\n0,100.0\n1,150.0\n2,400.0\n")
    plan = load_channel_table(path)
    assert plan.n_channels == 3 and plan.spacing_hz == 50.0
    assert plan.nearest_index(390.0) == 2
    path.write_text("index,freq_hz\n0,100.0\n2,150.0\n")
    with pytest.raises(ValueError):
        load_channel_table(path)
    path.write_text("index,freq_hz\n0,100.0\n1,90.0\n")
    with pytest.raises(ValueError):
        load_channel_table(path)


def test_indices_by_modulo():
    sched = derive_hop_schedule(bytes([0x00, 0x01, 0x7F, 0x80]), PLAN128, 5000)
    assert list(sched.indices) == [0, 1, 127, 0]
    assert list(sched.entries()) == [(0, 5000, 0), (5000, 5000, 1), (10000, 5000, 127), (15000, 5000, 0)]


def test_empty_key():
    with pytest.raises(EmptyScheduleError):
        derive_hop_schedule(b"", PLAN128, 1000)
    with pytest.raises(ValueError):
        derive_hop_schedule(b"\x01", PLAN128, 0)


def test_bias_warning_only_when_n_does_not_divide_256():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        derive_hop_schedule(b"\x05" * 10, PLAN128, 1000)
    with pytest.warns(BiasWarning, match="1.500"):
        derive_hop_schedule(b"\x05" * 10, build_channel_table(n_channels=100), 1000)
    assert mapping_bias(128) == 1.0
    assert mapping_bias(100) == 1.5


def _chi2_by_hand(indices, n):
    counts = np.bincount(indices, minlength=n)
    expected = len(indices) / n
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    return chi2, float(stats.chi2.sf(chi2, n - 1))


@pytest.mark.parametrize("n", [2, 64, 128, 256])
def test_uniformity_chi_square(n):
    data = np.random.default_rng(n).integers(0, 256, 100_000, dtype=np.uint8).tobytes()
    sched = derive_hop_schedule(data, build_channel_table(n_channels=n), 1000)
    chi2, p = index_uniformity(sched.indices, n)
    assert (chi2, p) == pytest.approx(_chi2_by_hand(sched.indices.astype(int), n))
    assert p > 0.001


def test_exact_uniformity_when_n_divides_256():
    every_byte = bytes(range(256))
    for n in (2, 64, 128, 256):
        counts = np.bincount(derive_hop_schedule(every_byte, build_channel_table(n_channels=n), 1).indices)
        assert len(set(counts)) == 1


def test_coverage_all_indices_present():
    data = np.random.default_rng(99).integers(0, 256, 10_000, dtype=np.uint8).tobytes()
    assert set(derive_hop_schedule(data, PLAN128, 1000).indices) == set(range(128))


@given(st.binary(min_size=1, max_size=200), st.integers(1, 10_000), st.integers(0, 10**6))
def test_schedule_invariants(key, interval, start):
    sched = derive_hop_schedule(key, PLAN128, interval, start)
    again = derive_hop_schedule(key, PLAN128, interval, start)
    assert sched == again
    entries = list(sched.entries())
    assert len(entries) == len(key)
    for (s0, d0, i0), (s1, _, _) in zip(entries, entries[1:]):
        assert s1 == s0 + d0 and d0 == interval
    assert all(i < 128 for _, _, i in entries)
    assert verify_sync(sched, again).full_match


@given(st.integers(0, 127), st.floats(-0.49, 0.49))
def test_nearest_channel_round_trip(index, frac):
    assert PLAN128.nearest_index(PLAN128.table[index] + frac * PLAN128.spacing_hz) == index


def test_verify_sync_divergences():
    key = bytes(range(40))
    tx = derive_hop_schedule(key, PLAN128, 5000)
    other = bytearray(key)
    other[7] ^= 0x01
    report = verify_sync(tx, derive_hop_schedule(bytes(other), PLAN128, 5000))
    assert (report.full_match, report.entry, report.field) == (False, 7, "index")
    report = verify_sync(tx, derive_hop_schedule(key, PLAN128, 1000))
    assert not report.full_match and report.field == "hop_interval_us"
    assert verify_sync(tx, derive_hop_schedule(key[:30], PLAN128, 5000)).field == "length"
    assert verify_sync(tx, derive_hop_schedule(key, PLAN128, 5000, 10)).field == "start_us"


def test_schedule_csv_dump(tmp_path):
    sched = derive_hop_schedule(b"\x00\x81", PLAN128, 1000, 500)
    path = tmp_path / "s.csv"
    sched.to_csv(path, PLAN128)
    assert path.read_text() == (
        "start_us,duration_us,index,freq_hz\n500,1000,0,2400000000.0\n1500,1000,1,2401000000.0\n")
