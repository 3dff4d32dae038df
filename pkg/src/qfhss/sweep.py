"""Parameter sweeps over the eavesdropper and jammer simulations.

Trial ``t`` of a sweep draws everything it needs (key bytes, phases, noise,
jammer channels) from ``default_rng(seed + t)``, so results do not depend on
how trials are split across workers. Each trial also lands in phase stratum
``t % phase_strata``; ``peak_over_phase`` is the largest stratum mean.

Phase means the offset between the adversary's time grid and the signal's:
for detection, the window start measured from the last hop boundary; for
jamming, the jammer's dwell phase against the symbol grid.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from qfhss.airsim import EveConfig, JamConfig, SymbolConfig, detect_core, jammer_track, symbol_hits
from qfhss.hopplan import ChannelPlan, build_channel_table, derive_hop_schedule
from qfhss.metrics import MetricSeries, make_row, summarize

log = logging.getLogger(__name__)

KeySource = Callable[[np.random.Generator, int], bytes]

PARAMS = {"detection_period_us": "detect_prob", "jamming_period_us": "ser"}


class SweepError(RuntimeError):
    def __init__(self, param: str, value, cause: Exception):
        super().__init__(f"{param}={value}: {cause}")
        self.param = param
        self.value = value
        self.__cause__ = cause


def random_key_bytes(g: np.random.Generator, n: int) -> bytes:
    return g.integers(0, 256, size=n, dtype=np.uint8).tobytes()


@dataclass(frozen=True)
class SweepConfig:
    hop_interval_us: int = 5000
    plan: ChannelPlan = field(default_factory=lambda: build_channel_table(n_channels=128))
    sym: SymbolConfig = field(default_factory=SymbolConfig)
    noise_power: float = 0.0
    strategy: str = "uniform_random"
    sir_db: float = -20.0
    windows_per_trial: int = 1
    symbols_per_trial: int = 1000
    phase_strata: int = 8
    # True pins every adversary phase to 0 (aligned grids) instead of drawing it
    aligned: bool = False
    key_source: KeySource = random_key_bytes


def _stratum_draw(g: np.random.Generator, stratum: int, strata: int, period: int) -> int:
    lo = stratum * period // strata
    hi = (stratum + 1) * period // strata
    return lo + int(g.integers(0, max(hi - lo, 1)))


def detection_trials(cfg: SweepConfig, period_us: int, trial_ids: np.ndarray, seed: int) -> np.ndarray:
    """Per-trial interception probability for ``trial_ids``."""
    t_h, n_ch, w = cfg.hop_interval_us, cfg.plan.n_channels, cfg.windows_per_trial
    keys, tx_start, win_start, noise = [], [], [], []
    for t in trial_ids:
        g = np.random.default_rng(seed + int(t))
        offset = 0 if cfg.aligned else _stratum_draw(g, int(t) % cfg.phase_strata, cfg.phase_strata, t_h)
        phase = 0 if cfg.aligned else int(g.integers(0, period_us))
        first = t_h + phase
        start = (first - offset) % t_h
        n_hops = (first + w * period_us - 1 - start) // t_h + 1
        sched = derive_hop_schedule(cfg.key_source(g, n_hops), cfg.plan, t_h, start)
        keys.append(sched.indices)
        tx_start.append(start)
        win_start.append(first)
        if cfg.noise_power > 0:
            noise.append(g.normal(size=(w, n_ch)) * (cfg.noise_power * period_us))
    width = max(len(k) for k in keys)
    indices = np.zeros((len(keys), width), dtype=np.int64)
    for i, k in enumerate(keys):
        indices[i, : len(k)] = k
    ok = detect_core(
        indices, t_h, np.array(tx_start), np.array(win_start), period_us, w, n_ch,
        np.stack(noise) if noise else None,
    )
    return ok.mean(axis=1)


def jamming_trials(cfg: SweepConfig, period_us: int, trial_ids: np.ndarray, seed: int) -> np.ndarray:
    """Per-trial symbol error rate for ``trial_ids``."""
    t_h, ts = cfg.hop_interval_us, cfg.sym.symbol_duration_us
    per_hop = cfg.sym.symbols_per_hop(t_h)
    n_hops = -(-cfg.symbols_per_trial // per_hop)
    n_sym = n_hops * per_hop
    span = n_hops * t_h
    sig = np.empty((len(trial_ids), n_sym), dtype=np.int64)
    tracks, track_start = [], []
    for i, t in enumerate(trial_ids):
        g = np.random.default_rng(seed + int(t))
        sched = derive_hop_schedule(cfg.key_source(g, n_hops), cfg.plan, t_h)
        sig[i] = np.repeat(sched.indices.astype(np.int64), per_hop)
        if cfg.strategy == "genie":
            tracks.append(sched.indices.astype(np.int64))
            track_start.append(0)
            continue
        phase = 0 if cfg.aligned else _stratum_draw(g, int(t) % cfg.phase_strata, cfg.phase_strata, period_us)
        begin = phase - period_us
        tracks.append(jammer_track((span - 1 - begin) // period_us + 1, cfg.plan.n_channels, cfg.strategy, g))
        track_start.append(begin)
    track_period = t_h if cfg.strategy == "genie" else period_us
    track = np.zeros((len(tracks), max(len(tr) for tr in tracks)), dtype=np.int64)
    for i, tr in enumerate(tracks):
        track[i, : len(tr)] = tr
    starts = np.broadcast_to(np.arange(n_sym, dtype=np.int64) * ts, sig.shape)
    hit = symbol_hits(starts, ts, sig, track, np.array(track_start), track_period, 1)
    return hit.mean(axis=1)


_RUNNERS = {"detection_period_us": detection_trials, "jamming_period_us": jamming_trials}


def _run_chunk(args):
    param, cfg, value, ids, seed = args
    return _RUNNERS[param](cfg, value, ids, seed)


def run_trials(cfg: SweepConfig, param: str, value: int, trials: int, seed: int, workers: int = 1) -> np.ndarray:
    ids = np.arange(trials)
    if workers <= 1:
        chunks = [ids[i : i + 2048] for i in range(0, trials, 2048)]
        return np.concatenate([_RUNNERS[param](cfg, value, c, seed) for c in chunks])
    parts = np.array_split(ids, workers)
    with ProcessPoolExecutor(workers) as pool:
        res = pool.map(_run_chunk, [(param, cfg, value, p, seed) for p in parts if len(p)])
        return np.concatenate(list(res))


def sweep_metric(
    base: SweepConfig,
    param: str,
    values: list[int],
    trials: int,
    seed: int,
    workers: int = 1,
) -> MetricSeries:
    """Mean and normal-approximation 95% CI of the swept metric, one row per value."""
    if param not in PARAMS:
        raise ValueError(f"cannot sweep {param!r}; choose one of {sorted(PARAMS)}")
    if not values:
        raise ValueError("values must be nonempty")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if trials == 1:
        log.warning("trials=1: confidence intervals collapse to the point estimate")
    rows = []
    for value in values:
        try:
            if int(value) <= 0:
                raise ValueError("period must be > 0")
            samples = run_trials(base, param, int(value), trials, seed, workers)
        except Exception as exc:
            raise SweepError(param, value, exc) from exc
        strata = None if base.aligned else np.arange(trials) % base.phase_strata
        mean, se, peak = summarize(samples, strata)
        rows.append(make_row(param, value, base.hop_interval_us, PARAMS[param], mean, se, peak, trials, seed))
    return MetricSeries(rows)


def with_hop_interval(cfg: SweepConfig, hop_interval_us: int) -> SweepConfig:
    return replace(cfg, hop_interval_us=hop_interval_us)


def eve_config_for(cfg: SweepConfig, period_us: int) -> EveConfig:
    return EveConfig(period_us, noise_power=cfg.noise_power)


def jam_config_for(cfg: SweepConfig, period_us: int) -> JamConfig:
    return JamConfig(period_us, strategy=cfg.strategy, sir_db=cfg.sir_db)
