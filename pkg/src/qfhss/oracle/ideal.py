"""Ideal interception and jamming curves for the modeled adversaries.

Written independently of :mod:`qfhss.airsim`: continuous time, i.i.d.
uniform channels, and closed forms or exhaustive enumeration where they
exist. Monte Carlo estimators stratify the adversary phase into ``strata``
equal slices and report the largest slice mean as the phase peak.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from qfhss.metrics import MetricSeries, make_row

CLOSED_FORM = "closed_form"
MONTE_CARLO = "monte_carlo"
ENUMERATION = "enumeration"


@dataclass(frozen=True)
class IdealPoint:
    params: dict
    mean: float
    std_error: float
    method: str
    peak_over_phase: float
    exact: Fraction | None = None

    def __post_init__(self):
        if (self.std_error != 0) != (self.method == MONTE_CARLO):
            raise ValueError("std_error must be nonzero exactly for Monte Carlo points")


def _adjacent(f: int, n: int) -> range:
    return range(max(f - 1, 0), min(f + 1, n - 1) + 1)


# --- detection -------------------------------------------------------------


def detection_closed_form(t_h: float, t_d: float, n: int) -> float:
    """P = 1 - (T_d / 2T_h)(1 - 1/N), valid for T_d <= T_h."""
    if t_d > t_h:
        raise ValueError("closed form holds only for T_d <= T_h")
    return 1.0 - (t_d / (2.0 * t_h)) * (1.0 - 1.0 / n)


def _detection_closed_form_peak(t_h: float, t_d: float, n: int, strata: int) -> float:
    # window start u within a hop; the window loses only for u in (T_h - T_d, T_h - T_d/2)
    bad_lo, bad_hi = t_h - t_d, t_h - t_d / 2.0
    best = 0.0
    for s in range(strata):
        lo, hi = s * t_h / strata, (s + 1) * t_h / strata
        overlap = max(0.0, min(hi, bad_hi) - max(lo, bad_lo))
        best = max(best, 1.0 - (1.0 - 1.0 / n) * overlap / (hi - lo))
    return best


def detection_monte_carlo(t_h: float, t_d: float, n: int, trials: int, seed: int, strata: int = 8):
    """Monte Carlo of the occupancy-argmax detector; returns (mean, std_error, peak)."""
    g = np.random.default_rng(seed)
    stratum = np.arange(trials) % strata
    u = (stratum + g.random(trials)) * (t_h / strata)
    n_hops = int(math.floor((t_h + t_d) / t_h)) + 1
    tol = 1e-9 * max(t_h, t_d)
    success = np.empty(trials, dtype=bool)
    for lo in range(0, trials, 1 << 14):
        uu = u[lo : lo + (1 << 14)]
        m = len(uu)
        k_end = np.floor((uu + t_d) / t_h).astype(np.int64)
        k = np.arange(n_hops)[None, :]
        seg_lo = np.maximum(k * t_h, uu[:, None])
        seg_hi = np.minimum((k + 1) * t_h, (uu + t_d)[:, None])
        occ = np.where(k <= k_end[:, None], np.clip(seg_hi - seg_lo, 0.0, None), 0.0)
        ch = g.integers(0, n, size=(m, n_hops))
        same = ch[:, :, None] == ch[:, None, :]
        energy = (same * occ[:, None, :]).sum(axis=2)  # energy of each hop's channel
        rows = np.arange(m)
        e_end = energy[rows, k_end][:, None]
        c_end = ch[rows, k_end][:, None]
        present = occ > 0
        beats = (energy > e_end + tol) | ((np.abs(energy - e_end) <= tol) & (ch < c_end))
        success[lo : lo + m] = ~np.any(present & (ch != c_end) & beats, axis=1)
    p = float(success.mean())
    se = math.sqrt(max(p * (1 - p), 1.0 / trials) / trials)
    peak = max(float(success[stratum == s].mean()) for s in range(strata))
    return p, se, peak


def ideal_detection_probability(
    t_h: int, t_d: int, n: int, trials: int = 100_000, seed: int = 0, strata: int = 8
) -> IdealPoint:
    if min(t_h, t_d, n) <= 0:
        raise ValueError("T_h, T_d and N must be positive")
    params = {"hop_interval_us": t_h, "detection_period_us": t_d, "n_channels": n}
    if t_d <= t_h:
        return IdealPoint(
            params,
            detection_closed_form(t_h, t_d, n),
            0.0,
            CLOSED_FORM,
            _detection_closed_form_peak(t_h, t_d, n, strata),
        )
    if trials < 10_000:
        raise ValueError("Monte Carlo needs at least 10^4 trials")
    mean, se, peak = detection_monte_carlo(t_h, t_d, n, trials, seed, strata)
    return IdealPoint(params, mean, se, MONTE_CARLO, peak)


# --- jamming ---------------------------------------------------------------


def jamming_enumeration(n: int, dwells: int, strategy: str = "uniform_random") -> Fraction:
    """Exact per-symbol error rate when every symbol sees exactly ``dwells`` jammer dwells."""
    if strategy == "genie":
        return Fraction(1)
    total = Fraction(0)
    for f in range(n):
        adj = set(_adjacent(f, n))
        if strategy == "uniform_random":
            total += 1 - (1 - Fraction(len(adj), n)) ** dwells
        elif strategy == "sweep":
            hits = sum(1 for j0 in range(n) if any((j0 + k) % n in adj for k in range(dwells)))
            total += Fraction(hits, n)
        else:
            raise ValueError(f"unknown strategy {strategy!r}")
    return total / n


def jamming_monte_carlo(
    t_j: int, symbol_us: int, n: int, strategy: str, trials: int, seed: int, strata: int = 8, aligned: bool = False
):
    """Monte Carlo over the jammer phase; (mean, se, peak).

    The phase is the jammer dwell grid's offset against the symbol grid. A
    trial draws the phase and then one symbol uniformly from the pattern of
    ``t_j / gcd(t_j, symbol_us)`` symbols after which the offsets repeat.
    ``aligned`` pins the phase to 0.
    """
    g = np.random.default_rng(seed)
    stratum = np.arange(trials) % strata
    phase = np.zeros(trials) if aligned else (stratum + g.random(trials)) * (t_j / strata)
    cycle = int(t_j) // math.gcd(int(t_j), int(symbol_us))
    u = np.mod(g.integers(0, cycle, size=trials) * float(symbol_us) - phase, t_j)
    dwells = np.ceil((u + symbol_us) / t_j).astype(np.int64)
    width = int(dwells.max())
    f = g.integers(0, n, size=trials)
    if strategy == "uniform_random":
        jam = g.integers(0, n, size=(trials, width))
    elif strategy == "sweep":
        jam = (g.integers(0, n, size=trials)[:, None] + np.arange(width)) % n
    elif strategy == "genie":
        jam = np.broadcast_to(f[:, None], (trials, width))
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    live = np.arange(width)[None, :] < dwells[:, None]
    hit = np.any(live & (np.abs(jam - f[:, None]) <= 1), axis=1)
    p = float(hit.mean())
    se = math.sqrt(max(p * (1 - p), 1.0 / trials) / trials)
    peak = p if aligned else max(float(hit[stratum == s].mean()) for s in range(strata))
    return p, se, peak


def ideal_jamming_ser(
    t_h: int,
    t_j: int,
    symbol_us: int,
    n: int,
    strategy: str = "uniform_random",
    trials: int = 100_000,
    seed: int = 0,
    aligned: bool = False,
    strata: int = 8,
) -> IdealPoint:
    """Ideal SER; exact when the dwell grid is aligned with the symbol grid."""
    if min(t_h, t_j, symbol_us, n) <= 0:
        raise ValueError("all parameters must be positive")
    params = {"hop_interval_us": t_h, "jamming_period_us": t_j, "symbol_us": symbol_us,
              "n_channels": n, "strategy": strategy, "aligned": aligned}
    if strategy == "genie":
        return IdealPoint(params, 1.0, 0.0, CLOSED_FORM, 1.0, Fraction(1))
    if aligned and (t_j % symbol_us == 0 or symbol_us % t_j == 0):
        exact = jamming_enumeration(n, max(1, symbol_us // t_j), strategy)
        return IdealPoint(params, float(exact), 0.0, ENUMERATION, float(exact), exact)
    if trials < 10_000:
        raise ValueError("Monte Carlo needs at least 10^4 trials")
    mean, se, peak = jamming_monte_carlo(t_j, symbol_us, n, strategy, trials, seed, strata)
    return IdealPoint(params, mean, se, MONTE_CARLO, peak)


def ideal_series(
    param: str,
    values: list[int],
    hop_interval_us: int,
    n_channels: int,
    *,
    symbol_us: int = 500,
    strategy: str = "uniform_random",
    trials: int = 100_000,
    seed: int = 0,
    aligned: bool = False,
) -> MetricSeries:
    """Ideal counterpart of a simulator sweep; rows carry a ``method``."""
    rows = []
    for i, v in enumerate(values):
        if param == "detection_period_us":
            pt = ideal_detection_probability(hop_interval_us, v, n_channels, trials, seed + i)
            metric = "detect_prob"
        elif param == "jamming_period_us":
            pt = ideal_jamming_ser(hop_interval_us, v, symbol_us, n_channels, strategy, trials, seed + i, aligned)
            metric = "ser"
        else:
            raise ValueError(f"unknown swept parameter {param!r}")
        rows.append(make_row(param, v, hop_interval_us, metric, pt.mean, pt.std_error,
                             pt.peak_over_phase, trials, seed + i, method=pt.method))
    return MetricSeries(rows)
