"""Small randomness battery: monobit, runs and lag-1 serial correlation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats


class InsufficientDataError(ValueError):
    pass


@dataclass(frozen=True)
class RandomnessRecord:
    n: int
    monobit_z: float
    runs_z: float
    serial_corr: float

    @property
    def serial_z(self) -> float:
        return self.serial_corr * math.sqrt(self.n)

    def passes(self, alpha: float = 0.01) -> dict[str, bool]:
        """Two-sided normal tests at level ``alpha``; NaN statistics fail."""
        crit = stats.norm.isf(alpha / 2)
        return {
            "monobit": bool(abs(self.monobit_z) < crit),
            "runs": bool(abs(self.runs_z) < crit),
            "serial": bool(abs(self.serial_z) < crit),
        }


def randomness_suite(bits) -> RandomnessRecord:
    x = np.asarray(bits, dtype=np.int64)
    n = len(x)
    if n < 100:
        raise InsufficientDataError(f"need at least 100 bits, got {n}")
    ones = int(x.sum())
    zeros = n - ones
    monobit = (ones - zeros) / math.sqrt(n)

    runs = 1 + int(np.count_nonzero(x[1:] != x[:-1]))
    mu = 2.0 * ones * zeros / n + 1.0
    var = (mu - 1.0) * (mu - 2.0) / (n - 1.0)
    runs_z = (runs - mu) / math.sqrt(var) if var > 0 else math.nan

    a, b = x[:-1] - x[:-1].mean(), x[1:] - x[1:].mean()
    denom = math.sqrt(float((a * a).sum()) * float((b * b).sum()))
    serial = float((a * b).sum()) / denom if denom > 0 else math.nan
    return RandomnessRecord(n, float(monobit), float(runs_z), serial)
