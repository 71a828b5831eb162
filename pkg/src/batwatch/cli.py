"""Command-line pipeline.

Subcommands: simulate, train, calibrate, detect, cluster, sweep.
Exit codes are a stable contract: 0 success, 2 config error, 3 empty
data, 4 artifact mismatch, 5 insufficient anomalies.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from . import calibrate as calibrate_mod
from . import ingest, model_io, simgen
from .cluster import describe_clusters, kmeans_dtw, pca_fit, pca_transform
from .config import PipelineConfig, load_config_file
from .errors import (
    CalibrationError,
    ConfigError,
    EmptyDataError,
    ModelFormatError,
    ProvenanceError,
    ShapeError,
    TrainingError,
)
from .gru import GruAutoencoderConfig, build_gru, sweep_hidden_sizes, train_gru
from .mlp import MlpAutoencoderConfig, build_mlp, train as train_mlp

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_EMPTY = 3
EXIT_MISMATCH = 4
EXIT_TOO_FEW = 5


def _add_config_flags(p):
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--profile", choices=("paper", "test"), help="preset size profile")
    p.add_argument("--window-size", type=int, dest="window_size")
    p.add_argument("--overlap", type=float)
    p.add_argument("--arch", choices=("mlp", "gru"), dest="architecture")
    p.add_argument("--mlp-hidden", type=int, dest="mlp_hidden")
    p.add_argument("--mlp-embedding", type=int, dest="mlp_embedding")
    p.add_argument("--gru-hidden", type=int, dest="gru_hidden")
    p.add_argument("--learning-rate", type=float, dest="learning_rate")
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--epochs", type=int)
    p.add_argument("--optimizer", choices=("adam", "sgd"))
    p.add_argument("--seed", type=int)
    p.add_argument("--boundary-ms", type=int, dest="boundary_ms")
    p.add_argument("--validation-fraction", type=float, dest="validation_fraction")


_CONFIG_KEYS = (
    "window_size",
    "overlap",
    "architecture",
    "mlp_hidden",
    "mlp_embedding",
    "gru_hidden",
    "learning_rate",
    "batch_size",
    "epochs",
    "optimizer",
    "seed",
    "boundary_ms",
    "validation_fraction",
)


def _config_from_args(args, base: PipelineConfig | None = None) -> PipelineConfig:
    if getattr(args, "config", None):
        cfg = load_config_file(args.config)
    elif base is not None:
        cfg = base
    else:
        cfg = PipelineConfig()
    if getattr(args, "profile", None):
        cfg.apply_profile(args.profile)
    cfg.apply_overrides(
        **{key: getattr(args, key, None) for key in _CONFIG_KEYS}
    )
    return cfg


def _read_all(paths):
    records = []
    for path in paths:
        records.extend(ingest.read_samples(path))
    return records


def _ingest_windows(paths, cfg):
    """clean -> segment -> windowize; returns (raw windows, stats dict)."""
    records = _read_all(paths)
    streams, report = ingest.clean(records, cfg.gap_tolerance_ms, cfg.max_interp)
    segments = []
    for stream in streams:
        segments.extend(
            ingest.segment_recharges(
                stream,
                (cfg.soc_start_low, cfg.soc_start_high),
                cfg.soc_end,
                cfg.gap_tolerance_ms,
                min_samples=cfg.window_size,
            )
        )
    windows = []
    for seg in segments:
        windows.extend(ingest.windowize(seg, cfg.window_size, cfg.overlap))
    stats = {
        "records": report.output_records,
        "segments": len(segments),
        "usable_segments": sum(1 for s in segments if s.usable),
        "windows": len(windows),
        "cleaning": report.as_dict(),
    }
    return windows, stats


def _float_str(x) -> str:
    return repr(float(x))


# ----------------------------------------------------------------- simulate


def cmd_simulate(args) -> int:
    scenario = simgen.ScenarioConfig(
        seed=args.seed,
        vehicles=args.vehicles,
        days=args.days,
        recharges_per_day=args.recharges_per_day,
        start_ms=args.start_ms,
        base_temperature_c=args.base_temp,
        charge_rise_slope_c_per_min=args.charge_slope,
        soc_rate_pct_per_min=args.soc_rate,
        noise_std_c=args.noise_std,
        drop_rate=args.drop_rate,
        end_of_charge_rate=args.end_of_charge_rate,
        rise_rate=args.rise_rate,
    )
    stream = simgen.generate(scenario)
    os.makedirs(args.out_dir, exist_ok=True)
    data_path = os.path.join(args.out_dir, f"telemetry.{args.format}")
    truth_path = os.path.join(args.out_dir, "ground_truth.json")
    ingest.write_samples(data_path, stream.records)
    with open(truth_path, "w", encoding="utf-8") as fh:
        fh.write(simgen.intervals_to_json(stream.intervals))
    print(
        f"wrote {len(stream.records)} records to {data_path}; "
        f"{len(stream.intervals)} ground-truth intervals to {truth_path}"
    )
    return EXIT_OK


# -------------------------------------------------------------------- train


def _build_model(cfg: PipelineConfig):
    if cfg.architecture == "mlp":
        return build_mlp(
            MlpAutoencoderConfig(
                input_size=cfg.window_size,
                hidden_size=cfg.mlp_hidden,
                embedding_size=cfg.mlp_embedding,
            ),
            cfg.seed,
        )
    if cfg.architecture == "gru":
        return build_gru(
            GruAutoencoderConfig(hidden_size=cfg.gru_hidden, sequence_length=cfg.window_size),
            cfg.seed,
        )
    raise ConfigError(f"unknown architecture {cfg.architecture!r}")


def _train_split(paths, cfg):
    windows, stats = _ingest_windows(paths, cfg)
    pool = [w for w in windows if w.start_ms < cfg.boundary_ms]
    if not pool:
        raise EmptyDataError(
            f"no training windows before boundary: {stats['segments']} segments "
            f"({stats['usable_segments']} usable), {stats['windows']} windows total"
        )
    split = ingest.split_by_time(windows, cfg.boundary_ms, cfg.validation_fraction)
    norm = ingest.fit_normalizer(split.train)
    return split, norm, stats


def cmd_train(args) -> int:
    cfg = _config_from_args(args)
    split, norm, stats = _train_split(args.data, cfg)
    train_windows = ingest.normalize_windows(split.train, norm)
    model = _build_model(cfg)
    model.norm_mean, model.norm_std = norm.mean, norm.std
    if cfg.architecture == "mlp":
        history = train_mlp(
            model,
            train_windows,
            epochs=cfg.epochs,
            batch_size=cfg.batch_size,
            learning_rate=cfg.learning_rate,
            optimizer=cfg.optimizer,
            seed=cfg.seed,
        )
    else:
        history = train_gru(
            model,
            train_windows,
            epochs=cfg.epochs,
            batch_size=cfg.batch_size,
            learning_rate=cfg.learning_rate,
            optimizer=cfg.optimizer,
            seed=cfg.seed,
            clip_norm=cfg.clip_norm,
        )
    model_io.save_model(model, args.model, pipeline=dataclasses.asdict(cfg))
    with open(args.losses, "w", encoding="utf-8") as fh:
        fh.write("epoch,loss\n")
        for epoch, loss in enumerate(history):
            fh.write(f"{epoch},{_float_str(loss)}\n")
    print(
        f"trained {cfg.architecture} on {len(train_windows)} windows "
        f"({stats['segments']} segments); model -> {args.model}, losses -> {args.losses}"
    )
    if history:
        print(f"first epoch loss {history[0]:.6g}, final epoch loss {history[-1]:.6g}")
    return EXIT_OK


# ---------------------------------------------------------------- calibrate


def _load_model_with_config(path, args):
    model, doc = model_io.load_model(path)
    base = PipelineConfig(**doc["pipeline"]) if "pipeline" in doc else None
    cfg = _config_from_args(args, base)
    if cfg.window_size != model.input_size:
        raise CalibrationError(
            f"window size {cfg.window_size} does not match the model's {model.input_size}"
        )
    return model, doc, cfg


def cmd_calibrate(args) -> int:
    model, doc, cfg = _load_model_with_config(args.model, args)
    windows, _ = _ingest_windows(args.data, cfg)
    if args.split == "validation":
        split = ingest.split_by_time(windows, cfg.boundary_ms, cfg.validation_fraction)
        selected = split.validation
    else:
        selected = windows
    if not selected:
        raise EmptyDataError(f"no {args.split} windows to calibrate on")
    normalized = ingest.normalize_windows(
        selected, ingest.NormStats(model.norm_mean, model.norm_std)
    )
    mses = calibrate_mod.error_distribution(model, normalized)
    k = cfg.threshold_k if args.k is None else args.k
    override = cfg.threshold_override if args.threshold_override is None else args.threshold_override
    calibration = calibrate_mod.calibrate(doc["model_id"], mses, k=k, threshold_override=override)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(calibrate_mod.calibration_to_json(calibration))
    print(f"calibrated on {len(mses)} windows: mean {calibration.mean:.6g}, std {calibration.std:.6g}")
    for row in calibrate_mod.threshold_sweep(mses, [1.0, 2.0, 3.0]):
        print(
            f"  k={row['k']:.0f}: threshold {row['threshold']:.6g}, "
            f"flags {row['fraction']:.2%} of validation"
        )
    print(f"threshold {calibration.threshold:.6g} (k={k}"
          + (", override)" if calibration.override else ")")
          + f" -> {args.out}")
    return EXIT_OK


# ------------------------------------------------------------------- detect


def cmd_detect(args) -> int:
    model, doc, cfg = _load_model_with_config(args.model, args)
    with open(args.calibration, encoding="utf-8") as fh:
        calibration = calibrate_mod.calibration_from_json(fh.read())
    if calibration.model_id != doc["model_id"]:
        raise CalibrationError(
            f"calibration is for model {calibration.model_id}, not {doc['model_id']}"
        )
    windows, _ = _ingest_windows(args.data, cfg)
    if args.split == "test":
        windows = [w for w in windows if w.start_ms >= cfg.boundary_ms]
    normalized = ingest.normalize_windows(
        windows, ingest.NormStats(model.norm_mean, model.norm_std)
    )
    records, summary = calibrate_mod.detect(model, calibration, normalized)
    with open(args.out, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.as_dict(), sort_keys=True) + "\n")
        fh.write(json.dumps({"summary": summary}, sort_keys=True) + "\n")
    print(
        f"flagged {summary['count']} of {summary['total']} windows "
        f"({summary['fraction']:.2%}) -> {args.out}"
    )
    return EXIT_OK


# ------------------------------------------------------------------ cluster


def _window_id(w) -> str:
    return f"{w.vehicle_id}:{w.start_ms}"


def cmd_cluster(args) -> int:
    model, doc, cfg = _load_model_with_config(args.model, args)
    flagged_keys = []
    with open(args.report, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            entry = json.loads(line)
            if "summary" in entry:
                continue
            flagged_keys.append((entry["vehicle_id"], entry["start_ms"]))
    windows, _ = _ingest_windows(args.data, cfg)
    by_key = {(w.vehicle_id, w.start_ms): w for w in windows}
    missing = [key for key in flagged_keys if key not in by_key]
    if missing:
        raise ProvenanceError(
            f"{len(missing)} flagged windows not found in the data, e.g. {missing[0]}"
        )
    raw = [by_key[key] for key in flagged_keys]
    k = cfg.cluster_k if args.k is None else args.k
    if len(raw) < k:
        print(f"error: {len(raw)} anomalies but k={k} clusters requested", file=sys.stderr)
        return EXIT_TOO_FEW
    seed = cfg.seed if args.seed is None else args.seed
    cluster_model = kmeans_dtw(raw, k=k, seed=seed)
    projection = pca_fit(raw, n_components=2)
    coords = pca_transform(projection, np.stack([w.values for w in raw]))
    report = describe_clusters(cluster_model, raw)
    report["seed"] = seed
    report["inertia"] = cluster_model.inertia
    report["iterations"] = cluster_model.iterations
    report["assignments"] = [
        {"window_id": _window_id(w), "label": int(lab)}
        for w, lab in zip(raw, cluster_model.assignments)
    ]
    report["centroids"] = [[float(x) for x in c] for c in cluster_model.centroids]
    report["explained_variance_ratio"] = [
        float(r) for r in projection.explained_variance_ratio
    ]
    with open(args.out_report, "w", encoding="utf-8") as fh:
        json.dump(report, fh, sort_keys=True, indent=2, allow_nan=False)
        fh.write("\n")
    with open(args.out_pca, "w", encoding="utf-8") as fh:
        fh.write("window_id,pc1,pc2,label\n")
        for w, xy, lab in zip(raw, coords, cluster_model.assignments):
            fh.write(f"{_window_id(w)},{_float_str(xy[0])},{_float_str(xy[1])},{int(lab)}\n")
    sizes = {c["label"]: c["size"] for c in report["clusters"]}
    print(f"clustered {len(raw)} anomalies into {k} clusters {sizes} -> {args.out_report}")
    return EXIT_OK


# -------------------------------------------------------------------- sweep


def cmd_sweep(args) -> int:
    cfg = _config_from_args(args)
    sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    if not sizes:
        raise ConfigError("--sizes must list at least one hidden size")
    split, norm, _ = _train_split(args.data, cfg)
    train_windows = ingest.normalize_windows(split.train, norm)
    val_windows = ingest.normalize_windows(split.validation, norm)
    if not val_windows:
        raise EmptyDataError("sweep needs a nonempty validation split")
    rows = sweep_hidden_sizes(
        sizes,
        train_windows,
        val_windows,
        sequence_length=cfg.window_size,
        epochs=cfg.epochs,
        batch_size=cfg.batch_size,
        learning_rate=cfg.learning_rate,
        seed=cfg.seed,
    )
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("hidden_size,train_loss,val_loss\n")
        for row in rows:
            fh.write(
                f"{row['hidden_size']},{_float_str(row['train_loss'])},"
                f"{_float_str(row['val_loss'])}\n"
            )
    print(f"swept {sizes}; best by validation loss: {rows[0]['hidden_size']} -> {args.out}")
    return EXIT_OK


# -------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="batwatch",
        description="Battery-temperature anomaly detection pipeline.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate labeled synthetic telemetry")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--vehicles", type=int, default=2)
    p.add_argument("--days", type=int, default=3)
    p.add_argument("--recharges-per-day", type=int, default=4)
    p.add_argument("--start-ms", type=int, default=1_577_836_800_000)
    p.add_argument("--base-temp", type=float, default=30.0)
    p.add_argument("--charge-slope", type=float, default=0.8)
    p.add_argument("--soc-rate", type=float, default=2.0)
    p.add_argument("--noise-std", type=float, default=0.15)
    p.add_argument("--drop-rate", type=float, default=0.0)
    p.add_argument("--end-of-charge-rate", type=float, default=0.0)
    p.add_argument("--rise-rate", type=float, default=0.0)
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("train", help="ingest data and train an autoencoder")
    p.add_argument("--data", nargs="+", required=True)
    p.add_argument("--model", required=True, help="output model JSON")
    p.add_argument("--losses", required=True, help="output per-epoch loss CSV")
    _add_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("calibrate", help="fit the reconstruction-error threshold")
    p.add_argument("--model", required=True)
    p.add_argument("--data", nargs="+", required=True)
    p.add_argument("--out", required=True, help="output calibration JSON")
    p.add_argument("--k", type=float, default=None, help="threshold multiplier")
    p.add_argument("--threshold-override", type=float, default=None)
    p.add_argument("--split", choices=("validation", "all"), default="validation")
    _add_config_flags(p)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("detect", help="flag anomalous windows")
    p.add_argument("--model", required=True)
    p.add_argument("--calibration", required=True)
    p.add_argument("--data", nargs="+", required=True)
    p.add_argument("--out", required=True, help="output anomaly report JSONL")
    p.add_argument("--split", choices=("test", "all"), default="test")
    _add_config_flags(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("cluster", help="cluster flagged windows with DTW k-means")
    p.add_argument("--report", required=True, help="anomaly report JSONL")
    p.add_argument("--data", nargs="+", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out-report", required=True, help="output cluster JSON")
    p.add_argument("--out-pca", required=True, help="output PCA coordinates CSV")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    _add_config_flags(p)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("sweep", help="compare GRU hidden sizes")
    p.add_argument("--data", nargs="+", required=True)
    p.add_argument("--sizes", required=True, help="comma-separated hidden sizes")
    p.add_argument("--out", required=True, help="output comparison CSV")
    _add_config_flags(p)
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ShapeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EmptyDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except (CalibrationError, ModelFormatError, ProvenanceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except TrainingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
