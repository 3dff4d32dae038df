"""Channel tables and key-derived hop schedules.

Times are integer microseconds throughout.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np
from scipy import stats

MAX_CHANNELS = 256


class BiasWarning(UserWarning):
    """Byte-to-index mapping is not exactly uniform for this channel count."""


class EmptyScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class ChannelPlan:
    base_freq_hz: float
    spacing_hz: float
    n_channels: int
    table: tuple[float, ...]

    def __post_init__(self):
        if not 1 <= self.n_channels <= MAX_CHANNELS:
            raise ValueError(f"n_channels={self.n_channels} outside [1, {MAX_CHANNELS}]")
        if len(self.table) != self.n_channels:
            raise ValueError("table length must equal n_channels")
        if self.n_channels > 1 and not np.all(np.diff(self.table) > 0):
            raise ValueError("channel table must be strictly increasing")
        if self.spacing_hz <= 0:
            raise ValueError("spacing_hz must be > 0")

    def frequency(self, index: int) -> float:
        return self.table[index]

    def nearest_index(self, freq_hz: float) -> int:
        """Quantize a frequency to the closest channel (ties go low)."""
        return int(np.argmin(np.abs(np.asarray(self.table) - freq_hz)))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["index", "freq_hz"])
            for i, f in enumerate(self.table):
                w.writerow([i, repr(float(f))])


def build_channel_table(base_freq_hz: float = 2.400e9, spacing_hz: float = 1.0e6, n_channels: int = 128) -> ChannelPlan:
    if not 1 <= n_channels <= MAX_CHANNELS:
        raise ValueError(f"n_channels={n_channels} outside [1, {MAX_CHANNELS}]")
    if spacing_hz <= 0:
        raise ValueError("spacing_hz must be > 0")
    table = tuple(float(base_freq_hz + i * spacing_hz) for i in range(n_channels))
    return ChannelPlan(float(base_freq_hz), float(spacing_hz), n_channels, table)


def load_channel_table(path: str | Path) -> ChannelPlan:
    """Read an ``index,freq_hz`` CSV; indices must run 0..N-1 in order."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["index", "freq_hz"]:
            raise ValueError(f"{path}: header must be 'index,freq_hz'")
        rows = [(int(r["index"]), float(r["freq_hz"])) for r in reader]
    if [i for i, _ in rows] != list(range(len(rows))):
        raise ValueError(f"{path}: indices must be contiguous from 0")
    table = tuple(f for _, f in rows)
    spacing = float(np.min(np.diff(table))) if len(table) > 1 else 1.0
    return ChannelPlan(table[0] if table else 0.0, spacing, len(table), table)


@dataclass(frozen=True, eq=False)
class HopSchedule:
    """Contiguous hops of equal length: hop k starts at ``start_us + k*hop_interval_us``."""

    indices: np.ndarray
    hop_interval_us: int
    start_us: int = 0

    def __len__(self) -> int:
        return len(self.indices)

    def __eq__(self, other) -> bool:
        if not isinstance(other, HopSchedule):
            return NotImplemented
        return (
            self.hop_interval_us == other.hop_interval_us
            and self.start_us == other.start_us
            and np.array_equal(self.indices, other.indices)
        )

    @property
    def end_us(self) -> int:
        return self.start_us + len(self.indices) * self.hop_interval_us

    @property
    def span_us(self) -> int:
        return self.end_us - self.start_us

    def entries(self) -> Iterator[tuple[int, int, int]]:
        for k, idx in enumerate(self.indices):
            yield self.start_us + k * self.hop_interval_us, self.hop_interval_us, int(idx)

    def index_at(self, t_us) -> np.ndarray:
        hop = (np.asarray(t_us) - self.start_us) // self.hop_interval_us
        return self.indices[hop]

    def to_csv(self, path, plan: ChannelPlan) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["start_us", "duration_us", "index", "freq_hz"])
            for start, dur, idx in self.entries():
                w.writerow([start, dur, idx, repr(plan.table[idx])])


def mapping_bias(n_channels: int) -> float:
    """Max/min bin probability ratio of ``byte mod n_channels`` over uniform bytes."""
    counts = np.bincount(np.arange(256) % n_channels, minlength=n_channels)
    return float(counts.max() / counts.min())


def derive_hop_schedule(key_octets: bytes, plan: ChannelPlan, hop_interval_us: int, start_us: int = 0) -> HopSchedule:
    """One hop per key byte, channel index = byte mod N."""
    data = np.frombuffer(bytes(key_octets), dtype=np.uint8)
    if data.size == 0:
        raise EmptyScheduleError("no key bytes to derive a schedule from")
    if int(hop_interval_us) != hop_interval_us or hop_interval_us <= 0:
        raise ValueError("hop_interval_us must be a positive integer")
    n = plan.n_channels
    if 256 % n:
        warnings.warn(f"byte mod {n} is biased: max/min bin ratio {mapping_bias(n):.3f}", BiasWarning, stacklevel=2)
    indices = data.astype(np.uint16) % n
    indices.setflags(write=False)
    return HopSchedule(indices, int(hop_interval_us), int(start_us))


@dataclass(frozen=True)
class SyncReport:
    full_match: bool
    entry: int | None = None
    field: str | None = None


def verify_sync(tx: HopSchedule, rx: HopSchedule) -> SyncReport:
    """Locate the first point where two schedules disagree."""
    if tx.hop_interval_us != rx.hop_interval_us:
        return SyncReport(False, 0, "hop_interval_us")
    if tx.start_us != rx.start_us:
        return SyncReport(False, 0, "start_us")
    common = min(len(tx), len(rx))
    diff = np.flatnonzero(tx.indices[:common] != rx.indices[:common])
    if diff.size:
        return SyncReport(False, int(diff[0]), "index")
    if len(tx) != len(rx):
        return SyncReport(False, common, "length")
    return SyncReport(True)


def index_uniformity(indices: np.ndarray, n_channels: int) -> tuple[float, float]:
    """Chi-square statistic and p-value of index counts against uniform."""
    counts = np.bincount(np.asarray(indices, dtype=np.int64), minlength=n_channels)
    res = stats.chisquare(counts)
    return float(res.statistic), float(res.pvalue)
