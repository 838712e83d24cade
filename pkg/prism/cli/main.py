"""
Command-line entry point: ``prism <command> [options]``.

Commands: generate, aggregate, train, predict, evaluate, ablate, inspect, stats.
Every command that takes ``--out`` writes only below that directory and
leaves a ``run_manifest.json`` there.

Exit codes: 0 success, 2 bad input (config, data, missing file), 1 runtime
failure (divergence, corrupt checkpoint, I/O).
"""

from __future__ import annotations

import argparse
import errno
import sys
from collections.abc import Callable, Sequence
from pathlib import Path

import pandas as pd
from pydantic import ValidationError

from prism.cli.config import RunConfig, load_config, read_json
from prism.cli.manifest import MANIFEST_FILE, RunClock, RunRecord, write_manifest
from prism.errors import (
    ConfigError,
    DegenerateVarianceError,
    DimensionError,
    EmptySeriesError,
    PrismError,
    RecordValidationError,
    SeriesFormatError,
    SizingError,
    UndefinedRatioError,
)
from prism.eval import (
    SWEEP_HORIZONS,
    baselines,
    evaluate_model,
    horizon_sweep,
    interpretability_report,
    per_key_evaluations,
    run_ablation,
    train_scale,
)
from prism.eval.evaluate import TIME_FORMAT
from prism.eval.report import (
    metric_rows,
    write_ablation,
    write_evaluation,
    write_forecast_report,
    write_horizon_sweep,
    write_per_key,
)
from prism.model import PrismModel, load_checkpoint, save_checkpoint
from prism.model.checkpoint import BLOB_FILE
from prism.model.checkpoint import MANIFEST_FILE as CHECKPOINT_MANIFEST
from prism.traces import (
    HOURLY,
    SynthConfig,
    aggregate,
    aggregate_by_key,
    forecast_window,
    make_windows,
    read_series_by_key,
    read_series_csv,
    read_trace_csv,
    records_to_frame,
    stats,
    synthesize,
    synthesize_records,
    write_series_csv,
)
from prism.training import History, TrainState, train
from prism.training.state import STATE_BLOB
from prism.utils.console import horizontal_rule, print_centered, print_dataframe
from prism.utils.io import atomic_to_csv, atomic_write_json
from prism.utils.logger import get_logger, log_safe, set_verbosity

logger = get_logger(__name__)

APP_NAME = "PRISM"

SERIES_FILE = "series.csv"
KEYED_SERIES_FILE = "series_by_key.csv"
TRACE_FILE = "trace.csv"
FORECAST_FILE = "forecast.csv"
STATS_FILE = "stats.json"

# Bad input: the user can fix it and re-run.
USAGE_ERRORS = (
    ConfigError,
    SizingError,
    EmptySeriesError,
    RecordValidationError,
    DimensionError,
    UndefinedRatioError,
    DegenerateVarianceError,
    SeriesFormatError,
    ValidationError,
    FileNotFoundError,
)


def _existing(path: str | Path) -> Path:
    """
    ``path`` as a Path, or FileNotFoundError naming it.
    """
    target = Path(path)
    if not target.exists():
        raise FileNotFoundError(errno.ENOENT, "no such file or directory", str(target))
    return target


def _checkpoint_files(checkpoint: Path) -> list[Path]:
    return [checkpoint / CHECKPOINT_MANIFEST, checkpoint / BLOB_FILE]


def _run_config(args: argparse.Namespace, base: dict | None = None) -> RunConfig:
    """
    Resolve the run config: file (or ``base``) first, then command-line flags.
    """
    overrides = {
        "seed": getattr(args, "seed", None),
        "precision": getattr(args, "precision", None),
        "seeds": getattr(args, "seeds", None),
        "workers": getattr(args, "workers", None),
        "model": {"horizon": getattr(args, "horizon", None)},
        "data": {
            "stride": getattr(args, "stride", None),
            "series_key": getattr(args, "series_key", None),
        },
    }
    epochs = getattr(args, "epochs", None)
    if epochs:
        overrides["train"] = {"max_epochs": epochs}
    config_path = _existing(args.config) if args.config else None
    return load_config(RunConfig, config_path, overrides, base=base)


def run_generate(args: argparse.Namespace) -> RunRecord:
    """
    Synthesize a heterogeneous workload series (and optionally its job trace).
    """
    config_path = _existing(args.config) if args.config else None
    cfg = load_config(SynthConfig, config_path, {"seed": args.seed, "horizon_days": args.days})
    out = Path(args.out)
    series = synthesize(cfg)
    write_series_csv(series, out / SERIES_FILE)
    if args.records or args.by_key:
        records = synthesize_records(cfg)
        if args.records:
            atomic_to_csv(records_to_frame(records), out / TRACE_FILE, index=False)
        if args.by_key:
            write_series_csv(aggregate_by_key(records, cfg.bucket_width), out / KEYED_SERIES_FILE)
    logger.success(
        "Generated %d days (%d buckets) into %s", cfg.horizon_days, len(series), log_safe(out)
    )
    return RunRecord(
        config=cfg.model_dump(mode="json"),
        inputs=[config_path] if config_path else [],
        seed=cfg.seed,
    )


def run_aggregate(args: argparse.Namespace) -> RunRecord:
    """
    Bucket a job trace into a demand series (or one series per key).
    """
    trace = _existing(args.trace)
    records = read_trace_csv(trace)
    width = HOURLY * args.bucket_hours
    out = Path(args.out)
    if args.by_key:
        keyed = aggregate_by_key(records, width)
        write_series_csv(keyed, out / KEYED_SERIES_FILE)
        logger.success("Aggregated %d keyed series into %s", len(keyed), log_safe(out))
    else:
        series = aggregate(records, width, args.filter)
        write_series_csv(series, out / SERIES_FILE)
        logger.success("Aggregated %d buckets into %s", len(series), log_safe(out))
    config = {"bucket_hours": args.bucket_hours, "filter": args.filter, "by_key": args.by_key}
    return RunRecord(config=config, inputs=[trace])


def run_train(args: argparse.Namespace) -> RunRecord:
    """
    Train a forecaster; write best/ and final/ checkpoints, state/ and history.csv.

    ``--epochs 0`` only writes the initialized model. ``--resume DIR`` continues
    the run saved in ``DIR`` (its resolved config is reused unless ``--config``
    is given).
    """
    series_path = _existing(args.series)
    inputs = [series_path]
    state = None
    base = None
    resume_dir = _existing(args.resume) if args.resume else None
    if resume_dir is not None:
        state = TrainState.load(resume_dir / "state")
        inputs.append(resume_dir / "state" / STATE_BLOB)
        manifest_path = resume_dir / MANIFEST_FILE
        if args.config is None and manifest_path.is_file():
            base = read_json(manifest_path)["config"]
    run = _run_config(args, base)
    out = Path(args.out)

    series = read_series_csv(series_path, run.data.series_key)
    cfg = run.model
    model = PrismModel(cfg, seed=run.seed, bits=run.precision)
    logger.info(
        "Model: L=%d H=%d P=%d S=%d D=%d N=%d K=%d, %d parameters",
        cfg.lookback,
        cfg.horizon,
        cfg.patch,
        cfg.stride,
        cfg.d_model,
        cfg.n_layers,
        cfg.n_primitives,
        model.parameter_count(),
    )

    if args.epochs == 0:
        save_checkpoint(model, out / "best", extra={"epoch": 0})
        save_checkpoint(model, out / "final", extra={"epoch": 0})
        History().write_csv(out / "history.csv")
        logger.success("Initialized checkpoint written to %s (no training)", log_safe(out))
        return RunRecord(config=run.model_dump(mode="json"), inputs=inputs, seed=run.seed)

    splits = make_windows(series, cfg.lookback, cfg.horizon, stride=run.data.stride, split=run.data.split)
    logger.info(
        "Windows: %d train, %d val, %d test", len(splits.train), len(splits.val), len(splits.test)
    )
    result = train(model, splits, run.train_config, state=state, output_dir=out)

    final = model.clone()
    final.load_state_arrays(result.state.params)
    save_checkpoint(final, out / "final", extra={"epoch": result.state.epoch})
    # A resumed run into a fresh directory may never improve on the restored best.
    if not (out / "best" / CHECKPOINT_MANIFEST).is_file():
        save_checkpoint(model, out / "best", extra={"epoch": result.state.best_epoch})
    if not result.history.rows:
        result.history.write_csv(out / "history.csv")
    frame = result.history.to_frame()
    if not frame.empty:
        print_dataframe(frame.tail(10), "Training history (last epochs)", floatfmt=".5f")
    logger.success(
        "Training finished: best epoch %d, val loss %.5f",
        result.state.best_epoch,
        result.state.best_val_loss,
    )
    return RunRecord(config=run.model_dump(mode="json"), inputs=inputs, seed=run.seed)


def run_predict(args: argparse.Namespace) -> RunRecord:
    """
    Forecast the H buckets after the end of a series with a saved checkpoint.
    """
    checkpoint = _existing(args.checkpoint)
    series_path = _existing(args.series)
    model = load_checkpoint(checkpoint)
    cfg = model.config
    if args.horizon is not None and args.horizon != cfg.horizon:
        raise ConfigError(
            f"requested horizon H={args.horizon} does not match the checkpoint's H={cfg.horizon}"
        )
    series = read_series_csv(series_path, args.series_key)
    window = forecast_window(series, cfg.lookback, cfg.horizon)
    report = interpretability_report(model, window, score=False)
    out = Path(args.out)
    forecast = pd.DataFrame(
        {"time": window.target_times().strftime(TIME_FORMAT), "predicted": report.predicted[0]}
    )
    atomic_to_csv(forecast, out / FORECAST_FILE, index=False, float_format="%.10g")
    write_forecast_report(report, out)
    print_dataframe(forecast, f"Forecast for the next {cfg.horizon} buckets", floatfmt=".3f")
    return RunRecord(
        config={"checkpoint": str(checkpoint), "horizon": cfg.horizon, "series_key": args.series_key},
        inputs=[*_checkpoint_files(checkpoint), series_path],
        seed=model.seed,
    )


def run_evaluate(args: argparse.Namespace) -> RunRecord:
    """
    Test-split metrics (raw and z-scored) against the baselines, plus plot data.
    """
    checkpoint = _existing(args.checkpoint)
    series_path = _existing(args.series)
    model = load_checkpoint(checkpoint)
    run = _run_config(args).model_copy(update={"model": model.config, "precision": model.bits})
    cfg = model.config
    stride, split = run.data.stride, run.data.split
    out = Path(args.out)

    series = read_series_csv(series_path, run.data.series_key)
    splits = make_windows(series, cfg.lookback, cfg.horizon, stride=stride, split=split)
    evaluation = evaluate_model(
        model, splits.test, train_scale(series, split), series_key=run.data.series_key
    )
    scores = baselines(series, cfg.lookback, cfg.horizon, stride=stride, split=split)
    write_evaluation(evaluation, out, scores)
    print_dataframe(
        metric_rows({"prism": evaluation.raw, **scores}, "forecaster"), "Test metrics (raw scale)"
    )

    if args.by_key:
        keyed = per_key_evaluations(model, read_series_by_key(series_path), stride=stride, split=split)
        write_per_key(keyed, out)
        print_dataframe(metric_rows({k: e.raw for k, e in keyed.items()}, "series_key"), "Per-key metrics")
    if args.sweep:
        sweep = horizon_sweep(
            series,
            cfg,
            run.train_config,
            args.horizons or SWEEP_HORIZONS,
            stride=stride,
            split=split,
            seed=run.seed,
            bits=model.bits,
        )
        write_horizon_sweep(sweep, out)
        print_dataframe(metric_rows({f"H={h}": e.raw for h, e in sweep.items()}, "horizon"), "Horizon sweep")
    return RunRecord(
        config=run.model_dump(mode="json"),
        inputs=[*_checkpoint_files(checkpoint), series_path],
        seed=run.seed,
    )


def run_ablate(args: argparse.Namespace) -> RunRecord:
    """
    Train every ablation variant over the seed list and report deltas vs the full model.
    """
    series_path = _existing(args.series)
    run = _run_config(args)
    series = read_series_csv(series_path, run.data.series_key)
    report = run_ablation(
        series,
        run.model,
        run.train_config,
        run.seeds,
        stride=run.data.stride,
        split=run.data.split,
        bits=run.precision,
        max_workers=run.workers,
    )
    write_ablation(report, Path(args.out))
    frame = report.to_frame()[["variant", "mse", "mae", "rmse", "r2", "mse_delta_pct", "flagged"]]
    print_dataframe(frame, f"Ablation over seeds {', '.join(map(str, run.seeds))}")
    if report.flagged:
        logger.warning("Diverged variants: %s", ", ".join(report.flagged))
    return RunRecord(config=run.model_dump(mode="json"), inputs=[series_path], seed=run.seed)


def run_inspect(args: argparse.Namespace) -> RunRecord:
    """
    Export per-window recipes, primitive signatures and spectral statistics.
    """
    checkpoint = _existing(args.checkpoint)
    series_path = _existing(args.series)
    model = load_checkpoint(checkpoint)
    run = _run_config(args).model_copy(update={"model": model.config, "precision": model.bits})
    cfg = model.config
    series = read_series_csv(series_path, run.data.series_key)
    windows = make_windows(
        series, cfg.lookback, cfg.horizon, stride=run.data.stride, split=run.data.split
    ).test
    report = interpretability_report(model, windows, margin=args.margin)
    write_forecast_report(report, Path(args.out))
    shares = pd.DataFrame(list(report.dominance_shares().items()), columns=["dominant", "share"])
    print_dataframe(shares, f"Dominant primitives over {len(windows)} test windows", floatfmt=".3f")
    return RunRecord(
        config={**run.model_dump(mode="json"), "margin": args.margin},
        inputs=[*_checkpoint_files(checkpoint), series_path],
        seed=model.seed,
    )


def run_stats(args: argparse.Namespace) -> RunRecord | None:
    """
    Peak-to-trough ratio, p97.5/p2.5 ratio and dominant periods of a series.
    """
    series_path = _existing(args.series)
    series = read_series_csv(series_path, args.series_key)
    summary = stats(series).to_dict()
    periods = summary.pop("dominant_periods_hours")
    rows = [*summary.items(), ("dominant_periods_hours", ", ".join(f"{p:.1f}" for p in periods))]
    print_dataframe(pd.DataFrame(rows, columns=["statistic", "value"]), "Workload statistics")
    if args.out is None:
        return None
    atomic_write_json(Path(args.out) / STATS_FILE, {**summary, "dominant_periods_hours": periods})
    return RunRecord(config={"series_key": args.series_key}, inputs=[series_path])


COMMANDS: dict[str, Callable[[argparse.Namespace], RunRecord | None]] = {
    "generate": run_generate,
    "aggregate": run_aggregate,
    "train": run_train,
    "predict": run_predict,
    "evaluate": run_evaluate,
    "ablate": run_ablate,
    "inspect": run_inspect,
    "stats": run_stats,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("--quiet", "-q", action="store_true", help="Only warnings and errors")
    verbosity.add_argument("--verbose", "-v", action="store_true", help="Debug output")

    run_flags = argparse.ArgumentParser(add_help=False)
    run_flags.add_argument("--config", help="Run config JSON (model, train, data, precision, seed)")
    run_flags.add_argument("--seed", type=int, help="Overrides the config seed")
    run_flags.add_argument("--precision", type=int, choices=(32, 64))
    run_flags.add_argument("--stride", type=int, help="Window stride")
    run_flags.add_argument("--series-key", help="Select keys of a multi-series file, e.g. HP/org-a")

    parser = argparse.ArgumentParser(prog="prism", description=__doc__.splitlines()[1].strip())
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common], help="Synthesize a workload series")
    p.add_argument("--config", help="Generator config JSON")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--days", type=int, help="Overrides horizon_days")
    p.add_argument("--records", action="store_true", help="Also write the job-level trace")
    p.add_argument("--by-key", action="store_true", help="Also write one series per (priority, org)")

    p = sub.add_parser("aggregate", parents=[common], help="Bucket a job trace into demand")
    p.add_argument("trace")
    p.add_argument("--out", required=True)
    p.add_argument("--bucket-hours", type=float, default=1.0)
    p.add_argument("--filter", help="Series key, e.g. HP/org-a or Spot/*")
    p.add_argument("--by-key", action="store_true", help="One series per (priority, org)")

    p = sub.add_parser("train", parents=[common, run_flags], help="Train a forecaster")
    p.add_argument("series")
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, help="Overrides max_epochs; 0 writes the untrained model")
    p.add_argument("--horizon", type=int)
    p.add_argument("--resume", help="Output directory of an earlier run to continue")

    p = sub.add_parser("predict", parents=[common], help="Forecast past the end of a series")
    p.add_argument("checkpoint")
    p.add_argument("series")
    p.add_argument("--out", required=True)
    p.add_argument("--horizon", type=int, help="Must equal the checkpoint horizon")
    p.add_argument("--series-key")

    p = sub.add_parser("evaluate", parents=[common, run_flags], help="Score a checkpoint")
    p.add_argument("checkpoint")
    p.add_argument("series")
    p.add_argument("--out", required=True)
    p.add_argument("--by-key", action="store_true", help="Also score every key of a keyed file")
    p.add_argument("--sweep", action="store_true", help="Train and score one model per horizon")
    p.add_argument("--horizons", type=int, nargs="+")

    p = sub.add_parser("ablate", parents=[common, run_flags], help="Run the component ablation")
    p.add_argument("series")
    p.add_argument("--out", required=True)
    p.add_argument("--seeds", type=int, nargs="+")
    p.add_argument("--epochs", type=int)
    p.add_argument("--workers", type=int)

    p = sub.add_parser("inspect", parents=[common, run_flags], help="Export interpretability data")
    p.add_argument("checkpoint")
    p.add_argument("series")
    p.add_argument("--out", required=True)
    p.add_argument("--margin", type=float, default=0.05, help="Dominance margin above 1/K")

    p = sub.add_parser("stats", parents=[common], help="Workload statistics of a series")
    p.add_argument("series")
    p.add_argument("--out")
    p.add_argument("--series-key")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    set_verbosity(args.quiet, args.verbose)
    clock = RunClock()
    if not args.quiet:
        horizontal_rule()
        print_centered(f"{APP_NAME} {args.command}")
        horizontal_rule()
    try:
        record = COMMANDS[args.command](args)
        if record is not None:
            write_manifest(args.command, argv, record, args.out, clock)
    except USAGE_ERRORS as exc:
        logger.error("%s", exc)
        return 2
    except (PrismError, OSError) as exc:
        logger.error("%s", exc)
        logger.debug("Traceback:", exc_info=True)
        return 1
    except KeyboardInterrupt:
        print("\nOperation cancelled by user.")
        return 130
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
