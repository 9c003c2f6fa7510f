#!/usr/bin/env python3
"""
Oscillator lab command line

Usage:
    python -m app --config data/two_oscillators.json --out out/sim simulate
    python -m app --out out/metrics metrics out/sim/train_0.txt out/sim/train_1.txt
    python -m app --config data/sweep_xor_window.json --out out/sweep --workers 8 sweep --find-xor
    python -m app --config data/two_oscillators.json --out out/patterns sweep --patterns 900 600
    python -m app --config data/calibrated_xor.json --out out/xor xor
    python -m app --out out/train train data/reference_features.csv
"""

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional

from .config import CONFIG
from .errors import ConfigError, InvalidParametersError, OscLabError
from .io_formats import (
    metrics_frame,
    patterns_frame,
    print_xor_table,
    read_dataset,
    read_spike_train,
    write_frame,
    write_map_csv,
    write_map_pgm,
    write_spike_train,
    write_weights,
    xor_frame,
)
from .manifest import RunManifest
from .reservoir import REFERENCE_SHR, injected_features, train_readout, xor_table
from .schemas import RunConfig, load_config
from .simulator import simulate
from .sweep import arnold_sweep, count_sync_states, find_xor_operating_points, pattern_sweep
from .sync_metrics import MetricConfig, pairwise_metrics, print_summary

logger = logging.getLogger("OscLabCLI")


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="osclab",
        description="Simulate coupled relaxation oscillators, measure high-order synchronization, "
        "sweep Arnold tongues and run the XOR reservoir",
    )
    parser.add_argument("--config", help="JSON run configuration")
    parser.add_argument("--out", default="out", help="Output directory (default: out)")
    parser.add_argument("--workers", type=int, default=None, help=f"Sweep worker processes (default: {CONFIG.workers})")
    parser.add_argument("--seed", type=_u64, default=None, help="Override the configured seed (unsigned 64-bit)")
    parser.add_argument("--verbose", action="store_true", help="Enable verbose debug logging")

    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("simulate", help="Simulate the configured network and write one spike file per oscillator")

    metrics = sub.add_parser("metrics", help="SHR / mu for every pair of spike-train files")
    metrics.add_argument("trains", nargs="+", help="Spike-train files (two or more)")
    metrics.add_argument("--epsilon-us", type=float, default=None, help="Coincidence half-window in microseconds")
    metrics.add_argument("--mu-th", type=float, default=None, help=f"Synchronization threshold in %% (default: {CONFIG.mu_th})")
    metrics.add_argument("--min-oscillations", type=int, default=None)
    metrics.add_argument("--max-oscillations", type=int, default=None)

    sweep = sub.add_parser("sweep", help="Arnold-tongue map over the configured sweep axes")
    sweep.add_argument("--find-xor", action="store_true", help="Search the map for an XOR operating point")
    sweep.add_argument(
        "--patterns",
        nargs=2,
        type=float,
        metavar=("I_ON_UA", "I_OFF_UA"),
        help="Instead of the map, run every ON/OFF supply-current pattern of the network (microamps)",
    )

    xor = sub.add_parser("xor", help="Run the four XOR cases through the configured pipeline")
    xor.add_argument("--reference-features", action="store_true", help="Inject the reference SHR features instead of simulating")
    xor.add_argument("--train", action="store_true", help="Retrain the readout on the obtained features")

    train = sub.add_parser("train", help="Train a readout neuron on a feature dataset")
    train.add_argument("dataset", help="CSV with in_* inputs, feat_* features and label")
    train.add_argument("--learning-rate", type=float, default=CONFIG.learning_rate)
    train.add_argument("--max-epochs", type=int, default=CONFIG.max_epochs)
    return parser


def _load(args) -> RunConfig:
    if not args.config:
        raise ConfigError(f"the {args.command} command needs --config")
    run = load_config(args.config)
    return run if args.seed is None else run.with_seed(args.seed)


def cmd_simulate(args, out_dir: Path) -> int:
    run = _load(args)
    manifest = RunManifest("simulate", run.resolved, {"seed": run.network.seed})
    logger.info(f"Simulating {run.network.n} oscillators: warmup={run.warmup_spikes}, record={run.record_spikes}")
    trains = simulate(run.network, run.warmup_spikes, run.record_spikes)
    for train in trains:
        path = write_spike_train(out_dir / f"train_{train.oscillator_index}.txt", train, [f"seed {run.network.seed}"])
        manifest.add_artifact(path, out_dir)
        logger.info(f"oscillator {train.oscillator_index}: {len(train)} spikes, mean period {train.mean_interval():.6g}s")
    manifest.write(out_dir)
    return 0


def cmd_metrics(args, out_dir: Path) -> int:
    if len(args.trains) < 2:
        raise InvalidParametersError("metrics needs at least two spike-train files")
    base = load_config(args.config).metric_cfg if args.config else MetricConfig()
    cfg = MetricConfig(
        epsilon=base.epsilon if args.epsilon_us is None else args.epsilon_us * 1e-6,
        mu_th=base.mu_th if args.mu_th is None else args.mu_th,
        min_oscillations=base.min_oscillations if args.min_oscillations is None else args.min_oscillations,
        max_oscillations=base.max_oscillations if args.max_oscillations is None else args.max_oscillations,
        epsilon_fraction=base.epsilon_fraction,
    )
    trains = [read_spike_train(path, k) for k, path in enumerate(args.trains)]
    labels = [Path(p).name for p in args.trains]
    results = pairwise_metrics(trains, cfg)
    print_summary(results, labels)

    manifest = RunManifest(
        "metrics",
        {"trains": list(args.trains), "epsilon_s": cfg.epsilon, "mu_th": cfg.mu_th,
         "min_oscillations": cfg.min_oscillations, "max_oscillations": cfg.max_oscillations},
        {},
    )
    manifest.add_artifact(write_frame(out_dir / "metrics.csv", metrics_frame(results, labels)), out_dir)
    manifest.write(out_dir)
    return 0


def cmd_patterns(run: RunConfig, args, out_dir: Path) -> int:
    i_on, i_off = (v * 1e-6 for v in args.patterns)
    pair = run.sweep.observed_pair if run.sweep else (0, 1)
    base_seed = run.sweep.base_seed if run.sweep else run.network.seed
    results = pattern_sweep(
        run.network, i_on, i_off, pair, run.metric_cfg, base_seed, run.warmup_spikes, run.record_spikes, args.workers
    )
    frame = patterns_frame(results, pair)

    print("\n" + "=" * 60)
    print(f"ON/OFF PATTERNS (I_on={args.patterns[0]:g} uA, I_off={args.patterns[1]:g} uA, pair {pair})")
    print("=" * 60)
    for row in frame.itertuples(index=False):
        status = row.error_flag or (f"SHR {row.shr}  mu={row.mu_percent:.1f}%" if row.synchronized else "unsynchronized")
        print(f"  {row.pattern}  {status}")
    print("=" * 60)

    resolved = dict(run.resolved, patterns={"i_on_uA": args.patterns[0], "i_off_uA": args.patterns[1]})
    manifest = RunManifest("sweep", resolved, {"base_seed": base_seed})
    manifest.add_artifact(write_frame(out_dir / "patterns.csv", frame), out_dir)
    manifest.write(out_dir)
    return 0


def cmd_sweep(args, out_dir: Path) -> int:
    run = _load(args)
    if args.patterns:
        return cmd_patterns(run, args, out_dir)
    if run.sweep is None:
        raise ConfigError("config has no sweep section", source=args.config)
    amap = arnold_sweep(run.sweep, args.workers)
    manifest = RunManifest("sweep", run.resolved, {"base_seed": run.sweep.base_seed})
    manifest.add_artifact(write_map_csv(out_dir / "map.csv", amap), out_dir)
    manifest.add_artifact(write_map_pgm(out_dir / "map.pgm", amap), out_dir)

    states = count_sync_states(amap)
    print("\n" + "=" * 60)
    print("SYNCHRONOUS STATES")
    print("=" * 60)
    print(f"Cells:        {len(amap)} ({sum(1 for c in amap.cells if not c.ok)} failed)")
    print(f"N_s:          {states.n_s}")
    for (m_i, m_j), count in states.occupancy.items():
        print(f"  SHR {m_j}:{m_i:<6} {count} cells")
    print("=" * 60)

    if args.find_xor:
        point = find_xor_operating_points(amap)
        if point is None:
            print("XOR operating point: not found")
        else:
            enc = point.encoding
            print(f"XOR operating point: offsets={enc.offsets} gains={enc.gains} targets={enc.targets}")
            print(f"  features {point.features()}")
            manifest.add_artifact(write_weights(out_dir / "xor_weights.json", point.neuron), out_dir)
    manifest.write(out_dir)
    return 0


def cmd_xor(args, out_dir: Path) -> int:
    run = _load(args)
    if run.pipeline is None:
        raise ConfigError("config has no pipeline section", source=args.config)
    pipeline = run.pipeline
    if args.train:
        pipeline = replace(pipeline, train_readout=True)
    source = injected_features(REFERENCE_SHR) if args.reference_features else None
    report = xor_table(pipeline, source)

    frame = xor_frame(report, pipeline.encoding.targets, pipeline.feature)
    print_xor_table(frame, report.correct, report.neuron)
    manifest = RunManifest("xor", run.resolved, {"seed": pipeline.template.seed})
    manifest.add_artifact(write_frame(out_dir / "xor_table.csv", frame), out_dir)
    manifest.add_artifact(write_weights(out_dir / "weights.json", report.neuron), out_dir)
    manifest.write(out_dir)
    return 0


def cmd_train(args, out_dir: Path) -> int:
    dataset = read_dataset(args.dataset)
    report = train_readout(dataset, args.learning_rate, args.max_epochs)
    print("\n" + "=" * 60)
    print("READOUT TRAINING")
    print("=" * 60)
    print(f"Samples:      {report.total}")
    print(f"Accuracy:     {report.correct}/{report.total} ({report.accuracy:.0%})")
    print(f"Epochs:       {report.epochs} ({'converged' if report.converged else 'not converged'})")
    print(f"Weights:      {list(report.neuron.weights)}")
    print("=" * 60)
    manifest = RunManifest(
        "train",
        {"dataset": args.dataset, "learning_rate": args.learning_rate, "max_epochs": args.max_epochs},
        {},
    )
    manifest.add_artifact(write_weights(out_dir / "weights.json", report.neuron), out_dir)
    manifest.write(out_dir)
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "metrics": cmd_metrics,
    "sweep": cmd_sweep,
    "xor": cmd_xor,
    "train": cmd_train,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else getattr(logging, CONFIG.log_level.upper(), logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)

    out_dir = Path(args.out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](args, out_dir)
    except OscLabError as exc:
        logger.error(f"{type(exc).__name__}: {exc}")
        return exc.exit_code
    except Exception:
        logger.exception("Unexpected failure")
        return 1


if __name__ == "__main__":
    sys.exit(main())
