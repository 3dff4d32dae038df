"""Swept-parameter result rows and their CSV form."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, fields

import numpy as np

HEADER = [
    "swept_param",
    "value_us",
    "hop_interval_us",
    "metric",
    "mean",
    "ci95_low",
    "ci95_high",
    "peak_over_phase",
    "trials",
    "seed",
]
Z95 = 1.959963984540054


@dataclass
class MetricRow:
    swept_param: str
    value_us: int
    hop_interval_us: int
    metric: str
    mean: float
    ci95_low: float
    ci95_high: float
    peak_over_phase: float
    trials: int
    seed: int
    method: str | None = None
    std_error: float = 0.0
    degenerate_ci: bool = field(default=False)

    @property
    def ci_half_width(self) -> float:
        return self.ci95_high - self.mean


def summarize(samples: np.ndarray, strata: np.ndarray | None = None) -> tuple[float, float, float]:
    """Mean, standard error and phase-peak (max stratum mean) of per-trial values."""
    samples = np.asarray(samples, dtype=np.float64)
    mean = float(samples.mean())
    se = float(samples.std(ddof=1) / math.sqrt(len(samples))) if len(samples) > 1 else 0.0
    if strata is None:
        peak = mean
    else:
        peak = max(float(samples[strata == s].mean()) for s in np.unique(strata))
    return mean, se, peak


def make_row(swept_param, value_us, hop_interval_us, metric, mean, se, peak, trials, seed, method=None) -> MetricRow:
    return MetricRow(
        swept_param=swept_param,
        value_us=int(value_us),
        hop_interval_us=int(hop_interval_us),
        metric=metric,
        mean=float(mean),
        ci95_low=float(mean - Z95 * se),
        ci95_high=float(mean + Z95 * se),
        peak_over_phase=float(peak),
        trials=int(trials),
        seed=int(seed),
        method=method,
        std_error=float(se),
        degenerate_ci=trials <= 1,
    )


@dataclass
class MetricSeries:
    rows: list[MetricRow]

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    @property
    def means(self) -> np.ndarray:
        return np.array([r.mean for r in self.rows])

    @property
    def std_errors(self) -> np.ndarray:
        return np.array([r.std_error for r in self.rows])

    @property
    def values(self) -> list[int]:
        return [r.value_us for r in self.rows]

    def to_csv(self, path=None, with_method: bool = False) -> str:
        header = HEADER + (["method"] if with_method else [])
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in self.rows:
            w.writerow([_fmt(getattr(r, name)) for name in header])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, path) -> "MetricSeries":
        types = {f.name: f.type for f in fields(MetricRow)}
        rows = []
        with open(path, newline="") as fh:
            for rec in csv.DictReader(fh):
                kw = {}
                for k, v in rec.items():
                    t = types[k]
                    kw[k] = int(v) if t == "int" else float(v) if t == "float" else v
                kw["std_error"] = (kw["ci95_high"] - kw["mean"]) / Z95
                kw["degenerate_ci"] = kw["trials"] <= 1
                rows.append(MetricRow(**kw))
        return cls(rows)


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, float) else str(v)
