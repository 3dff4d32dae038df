"""End-to-end experiment: QKD link -> KMS -> hop schedules -> air sim -> ideal overlays.

Configuration is JSON. Every section is optional; omitted fields take the
defaults below::

    {
      "qkd":     {"n_pulses": 1000000, "fiber_km": 25, "loss_db_per_km": 0.2,
                  "detector_efficiency": 1.0, "flip_prob": 0.035,
                  "decoy_fraction": 0.1, "target_key_rate_bps": 2000},
      "kms":     {"record_size_bits": 256, "endpoint": null},
      "channel": {"base_freq_hz": 2.4e9, "spacing_hz": 1e6, "n_channels": 128,
                  "table_file": null},
      "hop":     {"hop_interval_us": [5000, 1000]},
      "eve":     {"detection_period_us": [500, 1000, 2500, 5000, 10000, 20000],
                  "noise_power": 0.0},
      "jam":     {"jamming_period_us": [500, 1000, 2500, 5000, 10000, 20000],
                  "strategy": "uniform_random", "sir_db": -20.0,
                  "symbols_per_trial": 100},
      "sym":     {"symbol_duration_us": 500},
      "trials": 10000, "oracle_trials": 100000,
      "master_seed": 0, "output_dir": "out", "parallel": 1
    }

``kms.endpoint`` set to a base URL routes key delivery through a running
``qfhss kms serve``; null keeps the store in process. The QKD seed is not
configurable on its own: it is fanned out from ``master_seed`` like every
other stage (see :mod:`qfhss.seeds`).
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from qfhss.airsim import STRATEGIES, SymbolConfig, run_link
from qfhss.hopplan import ChannelPlan, build_channel_table, derive_hop_schedule, load_channel_table, verify_sync
from qfhss.kms import KeyStore, KmsClient
from qfhss.metrics import MetricSeries
from qfhss.oracle import ideal_series
from qfhss.qkdlink import QkdError, QkdLinkConfig, ReconciliationFailed, run_qkd
from qfhss.seeds import MASK64, stage_seed
from qfhss.sweep import SweepConfig, sweep_metric

log = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_STAGE = 0, 2, 3
MANIFEST = "manifest.json"
TX_SAE, RX_SAE = "sae-tx", "sae-rx"


class ConfigError(ValueError):
    pass


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: Exception | str):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class KmsSettings:
    record_size_bits: int = 256
    endpoint: str | None = None


@dataclass(frozen=True)
class ChannelSettings:
    base_freq_hz: float = 2.400e9
    spacing_hz: float = 1.0e6
    n_channels: int = 128
    table_file: str | None = None

    def plan(self) -> ChannelPlan:
        if self.table_file:
            return load_channel_table(self.table_file)
        return build_channel_table(self.base_freq_hz, self.spacing_hz, self.n_channels)


@dataclass(frozen=True)
class HopSettings:
    hop_interval_us: tuple[int, ...] = (5000, 1000)


@dataclass(frozen=True)
class EveSettings:
    detection_period_us: tuple[int, ...] = (500, 1000, 2500, 5000, 10000, 20000)
    noise_power: float = 0.0


@dataclass(frozen=True)
class JamSettings:
    jamming_period_us: tuple[int, ...] = (500, 1000, 2500, 5000, 10000, 20000)
    strategy: str = "uniform_random"
    sir_db: float = -20.0
    symbols_per_trial: int = 100


_SECTIONS = {
    "qkd": QkdLinkConfig,
    "kms": KmsSettings,
    "channel": ChannelSettings,
    "hop": HopSettings,
    "eve": EveSettings,
    "jam": JamSettings,
    "sym": SymbolConfig,
}
_SCALARS = {"trials": int, "oracle_trials": int, "master_seed": int, "output_dir": str, "parallel": int}


@dataclass(frozen=True)
class ExperimentConfig:
    qkd: QkdLinkConfig = field(default_factory=QkdLinkConfig)
    kms: KmsSettings = field(default_factory=KmsSettings)
    channel: ChannelSettings = field(default_factory=ChannelSettings)
    hop: HopSettings = field(default_factory=HopSettings)
    eve: EveSettings = field(default_factory=EveSettings)
    jam: JamSettings = field(default_factory=JamSettings)
    sym: SymbolConfig = field(default_factory=SymbolConfig)
    trials: int = 10_000
    oracle_trials: int = 100_000
    master_seed: int = 0
    output_dir: str = "out"
    parallel: int = 1

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(data) - set(_SECTIONS) - set(_SCALARS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kw = {}
        for name, typ in _SECTIONS.items():
            if name in data:
                kw[name] = _section(name, typ, data[name])
        for name, typ in _SCALARS.items():
            if name in data:
                value = data[name]
                if typ is int and (isinstance(value, bool) or not isinstance(value, int)):
                    raise ConfigError(f"{name} must be an integer")
                if typ is str and not isinstance(value, str):
                    raise ConfigError(f"{name} must be a string")
                kw[name] = value
        cfg = cls(**kw)
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        out = {}
        for name in _SECTIONS:
            sec = asdict(getattr(self, name))
            if name == "qkd":
                sec.pop("seed")
            out[name] = {k: list(v) if isinstance(v, tuple) else v for k, v in sec.items()}
        for name in _SCALARS:
            out[name] = getattr(self, name)
        return out

    def validate(self) -> None:
        for name in ("trials", "oracle_trials", "parallel"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.oracle_trials < 10_000:
            raise ConfigError("oracle_trials must be >= 10000")
        if not 0 <= self.master_seed <= MASK64:
            raise ConfigError("master_seed must be an unsigned 64-bit integer")
        if self.kms.record_size_bits <= 0 or self.kms.record_size_bits % 8:
            raise ConfigError("kms.record_size_bits must be a positive multiple of 8")
        try:
            self.channel.plan()
        except (OSError, ValueError) as exc:
            raise ConfigError(f"channel: {exc}") from exc
        for key, values in (("hop.hop_interval_us", self.hop.hop_interval_us),
                            ("eve.detection_period_us", self.eve.detection_period_us),
                            ("jam.jamming_period_us", self.jam.jamming_period_us)):
            if not values or any(isinstance(v, bool) or not isinstance(v, int) or v <= 0 for v in values):
                raise ConfigError(f"{key} must be a nonempty list of positive integers")
        if len(set(self.hop.hop_interval_us)) != len(self.hop.hop_interval_us):
            raise ConfigError("hop.hop_interval_us has duplicates")
        for t_h in self.hop.hop_interval_us:
            if t_h % self.sym.symbol_duration_us:
                raise ConfigError(
                    f"symbol_duration_us={self.sym.symbol_duration_us} does not divide hop_interval_us={t_h}"
                )
        if self.jam.strategy not in STRATEGIES:
            raise ConfigError(f"jam.strategy must be one of {STRATEGIES}")
        if self.jam.symbols_per_trial < 1:
            raise ConfigError("jam.symbols_per_trial must be >= 1")
        if self.eve.noise_power < 0:
            raise ConfigError("eve.noise_power must be >= 0")


def _section(name: str, typ, data):
    if not isinstance(data, dict):
        raise ConfigError(f"{name} must be an object")
    allowed = {f.name for f in fields(typ)} - ({"seed"} if typ is QkdLinkConfig else set())
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {name}: {sorted(unknown)}")
    data = {k: tuple(v) if isinstance(v, list) else v for k, v in data.items()}
    try:
        return typ(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: {exc}") from exc


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _key_exchange(cfg: ExperimentConfig, secret) -> tuple[bytes, bytes, int]:
    """Push the secret through the KMS; returns (tx octets, rx octets, records)."""
    material = secret.octets[: secret.n_bits // 8]
    if cfg.kms.endpoint:
        kms = KmsClient(cfg.kms.endpoint)
        ids = kms.store([material])
        enc = kms.enc_keys(RX_SAE, number=len(ids))
        dec = kms.dec_keys(TX_SAE, enc.key_ids())
    else:
        kms = KeyStore(cfg.kms.record_size_bits, id_seed=stage_seed(cfg.master_seed, "kms"))
        ids = kms.store_keys([secret])
        enc = kms.get_enc_keys(RX_SAE, number=len(ids))
        dec = kms.get_dec_keys(TX_SAE, enc.key_ids())
    if not ids:
        raise ValueError(f"secret key of {secret.n_bits} bits fills no {cfg.kms.record_size_bits}-bit record")
    return b"".join(enc.octets()), b"".join(dec.octets()), len(ids)


def run_experiment(cfg: ExperimentConfig, output_dir: str | os.PathLike | None = None) -> dict:
    """Run every stage in order and write the artifacts plus ``manifest.json``.

    Raises :class:`StageError` naming the failed stage.
    """
    out = Path(output_dir if output_dir is not None else cfg.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise StageError("output", exc) from exc
    master = cfg.master_seed
    plan = cfg.channel.plan()
    written: list[str] = []

    log.info("stage qkd: %d pulses, flip_prob %.4f", cfg.qkd.n_pulses, cfg.qkd.flip_prob)
    try:
        run = run_qkd(replace(cfg.qkd, seed=stage_seed(master, "qkd_exchange")))
    except ReconciliationFailed as exc:
        raise StageError("qkd.reconcile", exc) from exc
    except QkdError as exc:
        raise StageError("qkd", exc) from exc
    if run.alice.octets != run.bob.octets:
        raise StageError("qkd", "secret keys differ between the two ends")

    log.info("stage kms: %d secret bits", run.alice.n_bits)
    try:
        tx_key, rx_key, records = _key_exchange(cfg, run.alice)
    except Exception as exc:
        raise StageError("kms", exc) from exc

    baseline = {}
    for t_h in cfg.hop.hop_interval_us:
        try:
            tx = derive_hop_schedule(tx_key, plan, t_h)
            rx = derive_hop_schedule(rx_key, plan, t_h)
        except ValueError as exc:
            raise StageError("hopplan", exc) from exc
        sync = verify_sync(tx, rx)
        if not sync.full_match:
            raise StageError("sync", f"T_h={t_h}: schedules diverge at entry {sync.entry} ({sync.field})")
        link = run_link(tx, rx, cfg.sym)
        baseline[str(t_h)] = {"hops": len(tx), "symbols": link.symbols, "errors": link.errors, "ser": link.ser}

    summary = {
        "qkd": run.summary(),
        "kms": {"records": records, "record_size_bits": cfg.kms.record_size_bits,
                "mode": "http" if cfg.kms.endpoint else "in_process"},
        "sync": {"full_match": True},
        "link_baseline": baseline,
    }
    _write_json(out / "qkd_summary.json", summary)
    written.append("qkd_summary.json")

    for t_h in cfg.hop.hop_interval_us:
        base = SweepConfig(
            hop_interval_us=t_h, plan=plan, sym=cfg.sym, noise_power=cfg.eve.noise_power,
            strategy=cfg.jam.strategy, sir_db=cfg.jam.sir_db, symbols_per_trial=cfg.jam.symbols_per_trial,
        )
        for stage, param, values, name in (
            ("eve", "detection_period_us", cfg.eve.detection_period_us, "detection"),
            ("jam", "jamming_period_us", cfg.jam.jamming_period_us, "jamming"),
        ):
            log.info("stage %s: T_h=%d us, %d points x %d trials", stage, t_h, len(values), cfg.trials)
            try:
                series = sweep_metric(base, param, list(values), cfg.trials, stage_seed(master, stage), cfg.parallel)
            except Exception as exc:
                raise StageError(f"sweep.{stage}", exc) from exc
            fname = f"{name}_Th{t_h}.csv"
            series.to_csv(out / fname)
            written.append(fname)

        log.info("stage oracle: T_h=%d us", t_h)
        try:
            det = ideal_series("detection_period_us", list(cfg.eve.detection_period_us), t_h, plan.n_channels,
                               trials=cfg.oracle_trials, seed=stage_seed(master, "oracle_eve"))
            jam = ideal_series("jamming_period_us", list(cfg.jam.jamming_period_us), t_h, plan.n_channels,
                               symbol_us=cfg.sym.symbol_duration_us, strategy=cfg.jam.strategy,
                               trials=cfg.oracle_trials, seed=stage_seed(master, "oracle_jam"))
        except Exception as exc:
            raise StageError("oracle", exc) from exc
        fname = f"ideal_Th{t_h}.csv"
        MetricSeries(det.rows + jam.rows).to_csv(out / fname, with_method=True)
        written.append(fname)

    config_record = cfg.to_dict()
    for volatile in ("output_dir", "parallel"):  # neither affects any artifact
        config_record.pop(volatile)
    manifest = {
        "master_seed": master,
        "config": config_record,
        "files": [{"path": f, "sha256": sha256_file(out / f), "bytes": (out / f).stat().st_size}
                  for f in sorted(written)],
    }
    _write_json(out / MANIFEST, manifest)
    log.info("wrote %d artifacts to %s", len(written), out)
    return manifest


def verify_manifest(output_dir) -> list[str]:
    """Problems found comparing ``output_dir`` against its manifest; empty when consistent."""
    out = Path(output_dir)
    manifest = json.loads((out / MANIFEST).read_text())
    listed = {f["path"]: f["sha256"] for f in manifest["files"]}
    problems = []
    for path in sorted(p.name for p in out.iterdir() if p.is_file() and p.name != MANIFEST):
        if path not in listed:
            problems.append(f"unlisted file {path}")
    for path, digest in listed.items():
        if not (out / path).exists():
            problems.append(f"missing file {path}")
        elif sha256_file(out / path) != digest:
            problems.append(f"hash mismatch {path}")
    return problems
