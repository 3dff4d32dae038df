"""Command-line entry point: ``qfhss <subcommand>`` (or ``python -m qfhss``).

Exit codes: 0 success, 2 configuration error, 3 stage failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import signal
import sys
import threading
from dataclasses import replace
from pathlib import Path

import numpy as np

from qfhss.airsim import EveConfig, JamConfig, SymbolConfig, run_eavesdropper, run_jammer, run_link
from qfhss.experiment import (
    EXIT_CONFIG,
    EXIT_OK,
    EXIT_STAGE,
    ConfigError,
    ExperimentConfig,
    StageError,
    run_experiment,
)
from qfhss.hopplan import derive_hop_schedule, index_uniformity
from qfhss.kms import KeyStore, KmsClient, KmsServer
from qfhss.oracle import bytes_to_bits, ideal_series, linear_complexity_predictor, randomness_suite
from qfhss.qkdlink import QkdError, run_qkd
from qfhss.seeds import stage_seed
from qfhss.sweep import PARAMS, SweepConfig, random_key_bytes, sweep_metric

log = logging.getLogger("qfhss")


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_json(args.config) if args.config else ExperimentConfig()
    over = {}
    if args.seed is not None:
        over["master_seed"] = args.seed
    if args.trials is not None:
        over["trials"] = args.trials
    if args.parallel is not None:
        over["parallel"] = args.parallel
    if args.out is not None:
        over["output_dir"] = args.out
    if over:
        cfg = replace(cfg, **over)
        cfg.validate()
    return cfg


def _emit(payload: dict, out: str | None, name: str) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True)
    if out:
        path = Path(out)
        path.mkdir(parents=True, exist_ok=True)
        (path / name).write_text(text + "\n")
    print(text)


def _qkd_key(cfg: ExperimentConfig):
    run = run_qkd(replace(cfg.qkd, seed=stage_seed(cfg.master_seed, "qkd_exchange")))
    return run, run.alice.octets[: run.alice.n_bits // 8]


def _key_bytes(args, cfg: ExperimentConfig) -> bytes:
    if getattr(args, "key_hex", None):
        return bytes.fromhex(args.key_hex)
    if getattr(args, "key_file", None):
        return Path(args.key_file).read_bytes()
    return _qkd_key(cfg)[1]


# --- subcommands ---------------------------------------------------------------


def cmd_qkd_sim(args) -> int:
    cfg = _load_config(args)
    if args.pulses is not None or args.flip_prob is not None:
        qkd = replace(cfg.qkd, **{k: v for k, v in (("n_pulses", args.pulses), ("flip_prob", args.flip_prob))
                                  if v is not None})
        cfg = replace(cfg, qkd=qkd)
    try:
        run, material = _qkd_key(cfg)
    except QkdError as exc:
        raise StageError("qkd", exc) from exc
    summary = run.summary()
    if args.push:
        try:
            ids = KmsClient(args.push).store([material])
        except Exception as exc:
            raise StageError("kms", exc) from exc
        summary["pushed_records"] = len(ids)
    _emit(summary, args.out, "qkd_summary.json")
    return EXIT_OK


def cmd_kms_serve(args) -> int:
    store = KeyStore(args.record_size_bits, id_seed=args.id_seed)
    try:
        server = KmsServer(store, args.host, args.port)
    except OSError as exc:
        raise StageError("kms.bind", exc) from exc
    stop = threading.Event()

    def _shutdown(signum, _frame):
        log.info("signal %d: shutting down", signum)
        stop.set()

    signal.signal(signal.SIGINT, _shutdown)
    signal.signal(signal.SIGTERM, _shutdown)
    server.start()
    print(f"listening on {server.url}", flush=True)
    try:
        while not stop.wait(0.2):
            pass
    finally:
        server.stop()
    log.info("kms stopped")
    return EXIT_OK


def cmd_pattern(args) -> int:
    cfg = _load_config(args)
    plan = cfg.channel.plan()
    data = _key_bytes(args, cfg)
    sched = derive_hop_schedule(data, plan, args.hop_interval_us)
    if args.out:
        sched.to_csv(args.out, plan)
    else:
        print("start_us,duration_us,index,freq_hz")
        for start, dur, idx in sched.entries():
            print(f"{start},{dur},{idx},{plan.frequency(idx)!r}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    plan = cfg.channel.plan()
    g = np.random.default_rng(cfg.master_seed)
    tx = derive_hop_schedule(random_key_bytes(g, args.hops), plan, args.hop_interval_us)
    sym = SymbolConfig(args.symbol_us) if args.symbol_us else cfg.sym
    if args.mode == "link":
        rx = derive_hop_schedule(random_key_bytes(g, args.hops), plan, args.hop_interval_us) if args.desync else tx
        rep = run_link(tx, rx, sym)
        payload = {"symbols": rep.symbols, "errors": rep.errors, "ser": rep.ser}
    elif args.mode == "eve":
        rep = run_eavesdropper(tx, plan, EveConfig(args.period_us, args.phase_us, cfg.eve.noise_power),
                               stage_seed(cfg.master_seed, "eve"))
        payload = {"windows": rep.windows, "successes": rep.successes, "probability": rep.probability}
    else:
        jam = JamConfig(args.period_us, args.phase_us, cfg.jam.strategy, cfg.jam.sir_db)
        rep = run_jammer(tx, plan, jam, sym, stage_seed(cfg.master_seed, "jam"))
        payload = {"symbols": rep.symbols, "errors": rep.errors, "ser": rep.ser}
    payload["mode"] = args.mode
    _emit(payload, args.out, f"simulate_{args.mode}.json")
    return EXIT_OK


def _series_out(series, out: str | None, name: str, with_method: bool = False) -> None:
    if out:
        path = Path(out)
        path.mkdir(parents=True, exist_ok=True)
        series.to_csv(path / name, with_method=with_method)
    else:
        sys.stdout.write(series.to_csv(with_method=with_method))


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    base = SweepConfig(
        hop_interval_us=args.hop_interval_us, plan=cfg.channel.plan(), sym=cfg.sym,
        noise_power=cfg.eve.noise_power, strategy=cfg.jam.strategy, sir_db=cfg.jam.sir_db,
        symbols_per_trial=cfg.jam.symbols_per_trial, aligned=args.aligned,
    )
    values = args.values or list(cfg.eve.detection_period_us if args.param == "detection_period_us"
                                 else cfg.jam.jamming_period_us)
    stage = "eve" if args.param == "detection_period_us" else "jam"
    try:
        series = sweep_metric(base, args.param, values, cfg.trials, stage_seed(cfg.master_seed, stage), cfg.parallel)
    except Exception as exc:
        raise StageError(f"sweep.{stage}", exc) from exc
    _series_out(series, args.out, f"sweep_{stage}_Th{args.hop_interval_us}.csv")
    return EXIT_OK


def cmd_oracle(args) -> int:
    cfg = _load_config(args)
    values = args.values or list(cfg.eve.detection_period_us if args.param == "detection_period_us"
                                 else cfg.jam.jamming_period_us)
    stage = "oracle_eve" if args.param == "detection_period_us" else "oracle_jam"
    series = ideal_series(args.param, values, args.hop_interval_us, cfg.channel.plan().n_channels,
                          symbol_us=cfg.sym.symbol_duration_us, strategy=cfg.jam.strategy,
                          trials=cfg.oracle_trials, seed=stage_seed(cfg.master_seed, stage), aligned=args.aligned)
    _series_out(series, args.out, f"ideal_{args.param}_Th{args.hop_interval_us}.csv", with_method=True)
    return EXIT_OK


def cmd_randomness(args) -> int:
    cfg = _load_config(args)
    data = _key_bytes(args, cfg)
    bits = bytes_to_bits(data)
    rec = randomness_suite(bits)
    plan = cfg.channel.plan()
    indices = derive_hop_schedule(data, plan, 1000).indices
    chi2, p = index_uniformity(indices, plan.n_channels)
    pred = linear_complexity_predictor(bits[: args.predict_bits])
    payload = {
        "bits": rec.n,
        "monobit_z": rec.monobit_z,
        "runs_z": rec.runs_z,
        "serial_corr": rec.serial_corr,
        "passes": rec.passes(args.alpha),
        "hop_chi2": chi2,
        "hop_chi2_p": p,
        "linear_complexity": pred.linear_complexity,
        "next_symbol_accuracy": pred.next_symbol_accuracy,
        "predicted_bits": pred.sequence_length,
    }
    _emit(payload, args.out, "randomness.json")
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = _load_config(args)
    print(json.dumps(cfg.to_dict(), indent=2, sort_keys=True))
    print("config ok", file=sys.stderr)
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _load_config(args)
    manifest = run_experiment(cfg)
    print(json.dumps({"output_dir": cfg.output_dir, "files": [f["path"] for f in manifest["files"]]}, indent=2))
    return EXIT_OK


# --- parser ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="experiment config JSON")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--seed", type=int, metavar="U64", help="master seed override")
    common.add_argument("--trials", type=int, metavar="N", help="trials per swept point")
    common.add_argument("--parallel", type=int, metavar="N", help="worker processes for sweeps")
    common.add_argument("-v", "--verbose", action="count", default=0)

    p = argparse.ArgumentParser(prog="qfhss", description="QKD-keyed frequency hopping experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("qkd-sim", parents=[common], help="run the QKD link and print its summary")
    q.add_argument("--pulses", type=int)
    q.add_argument("--flip-prob", type=float)
    q.add_argument("--push", metavar="URL", help="store the secret key in a running KMS")
    q.set_defaults(func=cmd_qkd_sim)

    k = sub.add_parser("kms", help="key management service")
    ksub = k.add_subparsers(dest="kms_command", required=True)
    ks = ksub.add_parser("serve", parents=[common], help="serve the key delivery API")
    ks.add_argument("--host", default="127.0.0.1")
    ks.add_argument("--port", type=int, default=8014)
    ks.add_argument("--record-size-bits", type=int, default=256)
    ks.add_argument("--id-seed", type=int)
    ks.set_defaults(func=cmd_kms_serve)

    def key_args(sp):
        g = sp.add_mutually_exclusive_group()
        g.add_argument("--key-hex", help="key octets as hex")
        g.add_argument("--key-file", help="file of raw key octets")

    pt = sub.add_parser("pattern", parents=[common], help="derive a hop schedule CSV from key bytes")
    key_args(pt)
    pt.add_argument("--hop-interval-us", type=int, default=5000)
    pt.set_defaults(func=cmd_pattern)

    sm = sub.add_parser("simulate", parents=[common], help="single link, eavesdropper or jammer run")
    sm.add_argument("mode", choices=["link", "eve", "jam"])
    sm.add_argument("--hop-interval-us", type=int, default=5000)
    sm.add_argument("--hops", type=int, default=1000)
    sm.add_argument("--period-us", type=int, default=5000, help="T_d or T_j")
    sm.add_argument("--phase-us", type=int, default=0)
    sm.add_argument("--symbol-us", type=int)
    sm.add_argument("--desync", action="store_true", help="link mode: receiver uses an unrelated key")
    sm.set_defaults(func=cmd_simulate)

    for name, func, helptext in (("sweep", cmd_sweep, "simulated sweep to MetricSeries CSV"),
                                 ("oracle", cmd_oracle, "ideal curve to MetricSeries CSV")):
        sp = sub.add_parser(name, parents=[common], help=helptext)
        sp.add_argument("--param", choices=sorted(PARAMS), default="detection_period_us")
        sp.add_argument("--values", type=_int_list, help="comma-separated periods in us")
        sp.add_argument("--hop-interval-us", type=int, default=5000)
        sp.add_argument("--aligned", action="store_true", help="pin adversary phase to 0")
        sp.set_defaults(func=func)

    r = sub.add_parser("randomness", parents=[common], help="randomness and predictability of key bytes")
    key_args(r)
    r.add_argument("--alpha", type=float, default=0.01)
    r.add_argument("--predict-bits", type=int, default=10_000)
    r.set_defaults(func=cmd_randomness)

    v = sub.add_parser("validate", parents=[common], help="check a config file")
    v.set_defaults(func=cmd_validate)
    c = sub.add_parser("config", help="config utilities")
    csub = c.add_subparsers(dest="config_command", required=True)
    cv = csub.add_parser("validate", parents=[common], help="check a config file")
    cv.set_defaults(func=cmd_validate)

    run = sub.add_parser("run", parents=[common], help="full experiment with manifest")
    run.set_defaults(func=cmd_run)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    if args.command == "kms":
        logging.getLogger("qfhss.kms").setLevel(min(level, logging.INFO))  # deliveries are always logged
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE
    except (ValueError, OSError, QkdError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE


if __name__ == "__main__":
    sys.exit(main())
