"""Discrete-time FHSS link, eavesdropper and jammer simulation.

The modeled eavesdropper integrates per-channel occupancy over windows of
length T_d and reports the strongest channel; a window counts as an
interception when that peak is the channel on air at the window's last
microsecond. The jammer dwells on one channel per period T_j; a symbol is lost
when at any instant the jammer sits on the signal's channel or an immediate
neighbour (clamped at the band edges). No FEC is applied.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from qfhss.hopplan import ChannelPlan, HopSchedule
from qfhss.seeds import rng

STRATEGIES = ("uniform_random", "sweep", "genie")


@dataclass(frozen=True)
class SymbolConfig:
    symbol_duration_us: int = 500

    def __post_init__(self):
        if self.symbol_duration_us <= 0:
            raise ValueError("symbol_duration_us must be > 0")

    def symbols_per_hop(self, hop_interval_us: int) -> int:
        if hop_interval_us % self.symbol_duration_us:
            raise ValueError(
                f"symbol duration {self.symbol_duration_us} us does not divide hop interval {hop_interval_us} us"
            )
        return hop_interval_us // self.symbol_duration_us


@dataclass(frozen=True)
class EveConfig:
    """Eavesdropper windows start at ``start_us + phase_us`` (``start_us``
    defaults to the schedule start); ``n_windows`` defaults to all that fit.
    Noise is Gaussian with standard deviation ``noise_power * T_d`` per channel."""

    detection_period_us: int
    phase_us: int = 0
    noise_power: float = 0.0
    start_us: int | None = None
    n_windows: int | None = None

    def __post_init__(self):
        if self.detection_period_us <= 0:
            raise ValueError("detection_period_us must be > 0")
        if not 0 <= self.phase_us < self.detection_period_us:
            raise ValueError("phase_us must lie in [0, detection_period_us)")
        if self.noise_power < 0:
            raise ValueError("noise_power must be >= 0")


@dataclass(frozen=True)
class JamConfig:
    jamming_period_us: int
    phase_us: int = 0
    strategy: str = "uniform_random"
    sir_db: float = -20.0  # jammer ~20 dB above the signal; metadata only

    def __post_init__(self):
        if self.jamming_period_us <= 0:
            raise ValueError("jamming_period_us must be > 0")
        if not 0 <= self.phase_us < self.jamming_period_us:
            raise ValueError("phase_us must lie in [0, jamming_period_us)")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown jammer strategy {self.strategy!r}")


@dataclass(frozen=True)
class LinkReport:
    symbols: int
    errors: int

    @property
    def ser(self) -> float:
        return self.errors / self.symbols if self.symbols else 0.0


@dataclass(frozen=True)
class DetectionReport:
    windows: int
    successes: int

    @property
    def probability(self) -> float:
        return self.successes / self.windows if self.windows else 0.0


@dataclass(frozen=True)
class JamReport:
    symbols: int
    errors: int

    @property
    def ser(self) -> float:
        return self.errors / self.symbols if self.symbols else 0.0


# --- vectorized cores; each row is one independent run -------------------


def detect_core(
    indices: np.ndarray,
    hop_us: int,
    tx_start: np.ndarray,
    win_start: np.ndarray,
    period_us: int,
    n_windows: int,
    n_channels: int,
    noise: np.ndarray | None = None,
) -> np.ndarray:
    """Window-level interception outcomes, shape (runs, n_windows).

    ``indices`` is (runs, hops); ``tx_start``/``win_start`` are per-run
    absolute times. ``noise``, if given, is (runs, n_windows, n_channels).
    """
    runs = indices.shape[0]
    rel = (win_start - tx_start)[:, None] + np.arange(n_windows) * period_us
    rel = rel.reshape(-1)
    row = np.repeat(np.arange(runs), n_windows)
    end = rel + period_us
    first = rel // hop_us
    last = (end - 1) // hop_us
    out = np.empty(rel.size, dtype=bool)
    span = (period_us - 1) // hop_us + 2
    chunk = max(1, 4_000_000 // (n_channels * span))
    for lo in range(0, rel.size, chunk):
        sl = slice(lo, lo + chunk)
        m = rel[sl].size
        energy = np.zeros((m, n_channels))
        flat = np.arange(m)
        for j in range(span):
            hop = first[sl] + j
            valid = hop <= last[sl]
            seg = np.minimum(end[sl], (hop + 1) * hop_us) - np.maximum(rel[sl], hop * hop_us)
            ch = indices[row[sl], np.minimum(hop, last[sl])]
            energy[flat, ch] += np.where(valid, seg, 0)
        if noise is not None:
            energy += noise.reshape(-1, n_channels)[sl]
        peak = np.argmax(energy, axis=1)
        out[sl] = peak == indices[row[sl], last[sl]]
    return out.reshape(runs, n_windows)


def symbol_hits(
    sym_start: np.ndarray,
    sym_us: int,
    sig: np.ndarray,
    other: np.ndarray,
    other_start: np.ndarray,
    other_period: int,
    radius: int,
) -> np.ndarray:
    """True where, at some instant of a symbol, |other - sig| <= radius.

    ``sym_start`` and ``sig`` are (runs, symbols): symbol start times and the
    signal channel held for each symbol. ``other`` is (runs, slots), a step
    function with slot k covering ``[other_start + k*other_period, ...)``.
    """
    rows = np.arange(sym_start.shape[0])[:, None]
    first = (sym_start - other_start[:, None]) // other_period
    last = (sym_start + sym_us - 1 - other_start[:, None]) // other_period
    hit = np.zeros(sym_start.shape, dtype=bool)
    for j in range((sym_us - 1) // other_period + 2):
        slot = first + j
        valid = slot <= last
        val = other[rows, np.minimum(slot, last)]
        hit |= valid & (np.abs(val.astype(np.int64) - sig) <= radius)
    return hit


def _symbol_grid(tx: HopSchedule, sym: SymbolConfig) -> tuple[np.ndarray, np.ndarray]:
    per_hop = sym.symbols_per_hop(tx.hop_interval_us)
    starts = tx.start_us + np.arange(len(tx) * per_hop, dtype=np.int64) * sym.symbol_duration_us
    sig = np.repeat(tx.indices.astype(np.int64), per_hop)
    return starts, sig


# --- public single-run API -------------------------------------------------


def run_link(tx: HopSchedule, rx: HopSchedule, sym: SymbolConfig) -> LinkReport:
    """Count symbols whose receiver channel differs from the transmitter's at any instant."""
    if tx.start_us != rx.start_us or tx.end_us != rx.end_us:
        raise ValueError(
            f"schedules cover different spans: tx [{tx.start_us}, {tx.end_us}) rx [{rx.start_us}, {rx.end_us})"
        )
    starts, sig = _symbol_grid(tx, sym)
    miss = _mismatch(starts[None], sym.symbol_duration_us, sig[None], rx)
    return LinkReport(symbols=len(starts), errors=int(miss.sum()))


def _mismatch(sym_start, sym_us, sig, rx: HopSchedule) -> np.ndarray:
    rx_idx = rx.indices.astype(np.int64)[None]
    # a symbol survives only if every overlapping rx hop equals sig
    rows = np.arange(sym_start.shape[0])[:, None]
    first = (sym_start - rx.start_us) // rx.hop_interval_us
    last = (sym_start + sym_us - 1 - rx.start_us) // rx.hop_interval_us
    bad = np.zeros(sym_start.shape, dtype=bool)
    for j in range((sym_us - 1) // rx.hop_interval_us + 2):
        hop = first + j
        bad |= (hop <= last) & (rx_idx[rows, np.minimum(hop, last)] != sig)
    return bad


def run_eavesdropper(tx: HopSchedule, plan: ChannelPlan, eve: EveConfig, seed: int = 0) -> DetectionReport:
    """Spectral-peak interception over consecutive windows of length T_d."""
    t_d = eve.detection_period_us
    origin = tx.start_us if eve.start_us is None else eve.start_us
    first = origin + eve.phase_us
    if first < tx.start_us:
        raise ValueError("eavesdropper windows start before the schedule")
    fit = (tx.end_us - first) // t_d
    n_windows = fit if eve.n_windows is None else eve.n_windows
    if n_windows < 1 or n_windows > fit:
        raise ValueError(f"{n_windows} windows of {t_d} us do not fit the schedule span")
    noise = None
    if eve.noise_power > 0:
        noise = rng(seed).normal(size=(1, n_windows, plan.n_channels)) * (eve.noise_power * t_d)
    ok = detect_core(
        tx.indices.astype(np.int64)[None],
        tx.hop_interval_us,
        np.array([tx.start_us]),
        np.array([first]),
        t_d,
        n_windows,
        plan.n_channels,
        noise,
    )
    return DetectionReport(windows=n_windows, successes=int(ok.sum()))


def jammer_track(n_dwells: int, n_channels: int, strategy: str, g: np.random.Generator) -> np.ndarray:
    if strategy == "uniform_random":
        return g.integers(0, n_channels, size=n_dwells)
    if strategy == "sweep":
        return (int(g.integers(0, n_channels)) + np.arange(n_dwells)) % n_channels
    raise ValueError(f"strategy {strategy!r} has no independent jammer track")


def run_jammer(tx: HopSchedule, plan: ChannelPlan, jam: JamConfig, sym: SymbolConfig, seed: int = 0) -> JamReport:
    """Symbol errors caused by an overlapping-or-adjacent jammer."""
    starts, sig = _symbol_grid(tx, sym)
    if jam.strategy == "genie":
        track, track_start, period = tx.indices.astype(np.int64), tx.start_us, tx.hop_interval_us
    else:
        period = jam.jamming_period_us
        track_start = tx.start_us + jam.phase_us - period
        n_dwells = (tx.end_us - 1 - track_start) // period + 1
        track = jammer_track(n_dwells, plan.n_channels, jam.strategy, rng(seed))
    hit = symbol_hits(starts[None], sym.symbol_duration_us, sig[None], track[None], np.array([track_start]), period, 1)
    return JamReport(symbols=len(starts), errors=int(hit.sum()))
