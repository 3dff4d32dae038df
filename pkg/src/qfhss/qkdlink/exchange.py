"""COW exchange simulation, sifting and QBER estimation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from qfhss.seeds import rng


class QkdError(Exception):
    """Base class for failures in the QKD chain."""


class EmptyExchangeError(QkdError):
    pass


class EstimationError(QkdError):
    pass


def binary_entropy(q: float) -> float:
    """Binary Shannon entropy h2(q) in bits, with 0*log2(0) = 0."""
    q = float(q)
    if not 0.0 <= q <= 1.0 or math.isnan(q):
        raise ValueError(f"binary_entropy: q={q} outside [0, 1]")
    if q == 0.0 or q == 1.0:
        return 0.0
    return -q * math.log2(q) - (1.0 - q) * math.log2(1.0 - q)


@dataclass(frozen=True)
class QkdLinkConfig:
    n_pulses: int = 1_000_000
    fiber_km: float = 25.0
    loss_db_per_km: float = 0.2
    detector_efficiency: float = 1.0
    flip_prob: float = 0.035
    decoy_fraction: float = 0.1
    seed: int = 0
    target_key_rate_bps: float = 2000.0

    def __post_init__(self):
        if int(self.n_pulses) < 1:
            raise ValueError("n_pulses must be >= 1")
        if self.fiber_km < 0:
            raise ValueError("fiber_km must be >= 0")
        if self.loss_db_per_km < 0:
            raise ValueError("loss_db_per_km must be >= 0")
        for name in ("detector_efficiency", "flip_prob", "decoy_fraction"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name}={p} outside [0, 1]")
        if self.target_key_rate_bps <= 0:
            raise ValueError("target_key_rate_bps must be > 0")

    @property
    def transmittance(self) -> float:
        return 10.0 ** (-self.fiber_km * self.loss_db_per_km / 10.0)

    @property
    def detection_prob(self) -> float:
        return self.transmittance * self.detector_efficiency


@dataclass
class RawExchange:
    """Per-pulse record of one exchange.

    Each slot carries one trit: a 0-bit, a 1-bit, or a decoy. ``bob_bits`` is
    zero wherever ``bob_detected`` is false or the slot is a decoy.
    """

    alice_bits: np.ndarray
    alice_is_decoy: np.ndarray
    bob_detected: np.ndarray
    bob_bits: np.ndarray

    def __post_init__(self):
        n = len(self.alice_bits)
        if not (len(self.alice_is_decoy) == len(self.bob_detected) == len(self.bob_bits) == n):
            raise ValueError("RawExchange sequences must share one length")

    @property
    def n_pulses(self) -> int:
        return len(self.alice_bits)


@dataclass
class SiftedKeyPair:
    alice_key: np.ndarray
    bob_key: np.ndarray
    qber_estimate: float
    disclosed_count: int
    kept_count: int = field(default=0)

    def __post_init__(self):
        if len(self.alice_key) != len(self.bob_key):
            raise ValueError("sifted keys differ in length")


def simulate_exchange(config: QkdLinkConfig) -> RawExchange:
    """Simulate one COW exchange; a pure function of ``config``."""
    g = rng(config.seed)
    n = int(config.n_pulses)
    alice_bits = g.integers(0, 2, size=n, dtype=np.uint8)
    is_decoy = g.random(n) < config.decoy_fraction
    detected = g.random(n) < config.detection_prob
    flips = (g.random(n) < config.flip_prob).astype(np.uint8)
    bob_bits = np.where(detected & ~is_decoy, alice_bits ^ flips, 0).astype(np.uint8)
    return RawExchange(alice_bits, is_decoy, detected, bob_bits)


def sift_and_estimate(exchange: RawExchange, estimation_fraction: float = 0.1, seed: int = 0) -> SiftedKeyPair:
    """Keep detected non-decoy slots, disclose a random sample to estimate QBER."""
    if not 0.0 < estimation_fraction < 1.0:
        raise ValueError("estimation_fraction must be in (0, 1)")
    keep = exchange.bob_detected & ~exchange.alice_is_decoy
    alice = exchange.alice_bits[keep]
    bob = exchange.bob_bits[keep]
    kept = len(alice)
    if kept == 0:
        raise EmptyExchangeError("no detected non-decoy positions to sift")
    n_disclose = int(round(kept * estimation_fraction))
    if n_disclose == 0:
        raise EstimationError(f"estimation sample is empty ({kept} kept positions)")
    g = rng(seed)
    disclosed = np.zeros(kept, dtype=bool)
    disclosed[g.choice(kept, size=n_disclose, replace=False)] = True
    errors = int(np.count_nonzero(alice[disclosed] != bob[disclosed]))
    return SiftedKeyPair(
        alice_key=alice[~disclosed].copy(),
        bob_key=bob[~disclosed].copy(),
        qber_estimate=errors / n_disclose,
        disclosed_count=n_disclose,
        kept_count=kept,
    )
