"""Command-line pipeline: synth | ingest | train | detect | evaluate | report.

A JSON config file supplies defaults; every flag overrides its config key.
Exit codes: 0 ok, 1 usage/config, 2 data error, 3 infeasible model.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import cluster, detect, ingest, reconstruct, synth, windowing
from .cluster import Codebook, InfeasibleKError
from .detect import DetectionConfig, Verdict
from .ingest import TripLog
from .windowing import WindowConfig

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INFEASIBLE = 3

ESSENTIAL_TARGET = 5


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    data_dir: str = "corpus"
    out_dir: str = "out"
    owner: str = "A"
    sample_period_s: float = 1.0
    window_s: float = 32.0
    stride_s: float = 16.0
    filter_name: str = "hann"
    detection_window_s: float = 32.0
    k: int = 300  # capped at the feasible segment count unless strict_k
    strict_k: bool = False
    elbow_k_values: tuple[int, ...] = ()
    seed: int = 7
    restarts: int = 5
    max_iter: int = 100
    tol: float = 1e-6
    indifference_tolerance: float = 0.05
    separation_threshold: float = 0.5
    thresholds: dict[str, float] | str = "optimize"
    val_ratio: tuple[int, int] = (8, 2)  # owner : thief
    trips_per_driver: int = 10
    duration_s: float = 600.0

    def window_config(self) -> WindowConfig:
        return WindowConfig(
            sample_period_s=self.sample_period_s,
            window_s=self.window_s,
            stride_s=self.stride_s,
            filter_name=self.filter_name,
        )


_CONFIG_FIELDS = set(RunConfig.__dataclass_fields__)


def load_config(path: str | None, overrides: dict) -> RunConfig:
    values: dict = {}
    if path:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        unknown = set(doc) - _CONFIG_FIELDS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        values.update(doc)
    values.update({k: v for k, v in overrides.items() if v is not None})
    if "val_ratio" in values and not isinstance(values["val_ratio"], tuple):
        values["val_ratio"] = tuple(values["val_ratio"])
    if "elbow_k_values" in values:
        values["elbow_k_values"] = tuple(values["elbow_k_values"])
    cfg = RunConfig(**values)
    if cfg.val_ratio[0] <= 0 or cfg.val_ratio[1] <= 0:
        raise ConfigError("validation ratio components must be positive")
    return cfg


# --- pipeline helpers --------------------------------------------------------


def load_corpus_trips(cfg: RunConfig, roles: set[str] | None = None) -> list[tuple[dict, TripLog]]:
    """Load (manifest entry, TripLog) pairs, optionally filtered by role."""
    manifest = synth.load_manifest(cfg.data_dir)
    out = []
    for entry in manifest["trips"]:
        if roles is not None and entry["role"] not in roles:
            continue
        trip = ingest.parse_trip(
            Path(cfg.data_dir) / entry["file"],
            manifest.get("sample_period_s", cfg.sample_period_s),
            trip_id=entry["trip_id"],
            driver_id=entry["driver_id"],
        )
        out.append((entry, trip))
    return out


def select_features(trips: list[TripLog], cfg: RunConfig) -> tuple[list[str], list[ingest.SelectionDecision]]:
    catalog = ingest.build_catalog(trips)
    decisions = ingest.apply_selection_rules(catalog, cfg.indifference_tolerance)
    essential = ingest.select_essential(decisions, catalog, cfg.separation_threshold)
    essential = essential[:ESSENTIAL_TARGET]
    return essential, ingest.finalize_decisions(decisions, essential)


def essential_features_path(models_dir: str | Path) -> Path:
    return Path(models_dir) / "features.json"


def train_codebooks(
    owner_trips: list[TripLog], essential: list[str], cfg: RunConfig
) -> dict[str, Codebook]:
    wcfg = cfg.window_config()
    books: dict[str, Codebook] = {}
    trip_ids = tuple(t.trip_id for t in owner_trips)
    for feature in essential:
        segments = []
        for trip in owner_trips:
            segments.extend(windowing.slide_highlighted(trip.features[feature], wcfg, feature))
        if cfg.strict_k:
            k = cfg.k
        else:
            k = min(cfg.k, len(segments), len({tuple(s.values) for s in segments}))
        books[feature] = cluster.kmeans_fit(
            segments,
            k,
            seed=cfg.seed,
            max_iter=cfg.max_iter,
            tol=cfg.tol,
            restarts=cfg.restarts,
            cfg=wcfg,
            trip_ids=trip_ids,
        )
    return books


def trip_model_verdicts(
    trip: TripLog, books: dict[str, Codebook], thresholds: dict[str, float], cfg: RunConfig
) -> tuple[dict[str, list[Verdict]], int]:
    """Per-feature verdicts for one trip plus the assembled error length."""
    verdicts: dict[str, list[Verdict]] = {}
    assembled_len = 0
    for feature, cb in books.items():
        if feature not in trip.features:
            raise ingest.IngestError(f"trip {trip.trip_id} lacks feature {feature!r}")
        rec = reconstruct.reconstruct_series(trip.features[feature], cb)
        err = reconstruct.error_series(rec)
        dcfg = DetectionConfig(
            sample_period_s=cfg.sample_period_s,
            detection_window_s=cfg.detection_window_s,
            threshold=thresholds.get(feature, 0.0),
        )
        verdicts[feature] = detect.windows_verdicts(err, dcfg)
        assembled_len = len(err.errors)
    return verdicts, assembled_len


def window_labels(sample_labels: np.ndarray, assembled_len: int, detection_len: int) -> list[bool]:
    """Ground truth per detection window: theft iff >50% of samples spliced."""
    labels = sample_labels[:assembled_len]
    out = []
    for start in range(0, assembled_len - detection_len + 1, detection_len):
        chunk = labels[start : start + detection_len]
        out.append(bool(chunk.sum() * 2 > len(chunk)))
    return out


# --- subcommands --------------------------------------------------------------


def cmd_synth(cfg: RunConfig) -> int:
    corpus_cfg = synth.CorpusConfig(
        seed=cfg.seed,
        owner=cfg.owner,
        duration_s=cfg.duration_s,
        sample_period_s=cfg.sample_period_s,
        owner_train_trips=cfg.trips_per_driver,
        owner_val_trips=cfg.val_ratio[0],
        thief_val_trips=cfg.val_ratio[1],
    )
    manifest = synth.write_corpus(cfg.data_dir, corpus_cfg)
    print(f"wrote {len(manifest['trips'])} trips to {cfg.data_dir}")
    return EXIT_OK


def cmd_ingest(cfg: RunConfig) -> int:
    trips = [t for _, t in load_corpus_trips(cfg)]
    essential, decisions = select_features(trips, cfg)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    doc = {
        "essential": essential,
        "decisions": [
            {"feature": d.feature, "kept": d.kept, "reason": d.reason} for d in decisions
        ],
    }
    path = essential_features_path(out_dir)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"essential features: {', '.join(essential)}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_train(cfg: RunConfig) -> int:
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    features_file = essential_features_path(out_dir)
    if features_file.exists():
        essential = json.loads(features_file.read_text(encoding="utf-8"))["essential"]
    else:
        trips = [t for _, t in load_corpus_trips(cfg)]
        essential, decisions = select_features(trips, cfg)
        doc = {
            "essential": essential,
            "decisions": [
                {"feature": d.feature, "kept": d.kept, "reason": d.reason} for d in decisions
            ],
        }
        features_file.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    if len(essential) < ESSENTIAL_TARGET:
        print(
            f"warning: only {len(essential)} essential features survived selection",
            file=sys.stderr,
        )
    # clustering reads owner training trips only
    owner_trips = [
        t
        for entry, t in load_corpus_trips(cfg, roles={"train"})
        if entry["driver_id"] == cfg.owner
    ]
    if not owner_trips:
        raise ingest.IngestError(f"no training trips for owner {cfg.owner!r} in {cfg.data_dir}")
    books = train_codebooks(owner_trips, essential, cfg)
    for feature, cb in books.items():
        path = out_dir / f"codebook_{feature}.json"
        cluster.save_codebook(cb, path)
        print(f"wrote {path} (k={cb.k}, sse={cb.sse:.6g})")
    return EXIT_OK


def load_models(models_dir: str | Path) -> dict[str, Codebook]:
    models_dir = Path(models_dir)
    books = {}
    for path in sorted(models_dir.glob("codebook_*.json")):
        cb = cluster.load_codebook(path)
        books[cb.feature] = cb
    if not books:
        raise ingest.IngestError(f"no codebooks found in {models_dir}")
    return books


def load_thresholds(cfg: RunConfig, models_dir: str | Path) -> dict[str, float]:
    if isinstance(cfg.thresholds, dict):
        return dict(cfg.thresholds)
    path = Path(models_dir) / "thresholds.json"
    if path.exists():
        return json.loads(path.read_text(encoding="utf-8"))
    raise ConfigError(
        "no thresholds available: run `evaluate` first or set them in the config"
    )


def cmd_detect(cfg: RunConfig, trip_path: str, models_dir: str) -> int:
    books = load_models(models_dir)
    thresholds = load_thresholds(cfg, models_dir)
    trip = ingest.parse_trip(trip_path, cfg.sample_period_s)
    verdicts, _ = trip_model_verdicts(trip, books, thresholds, cfg)
    report: dict = {"trip_id": trip.trip_id, "models": {}, "ensemble": None}
    for feature, vlist in verdicts.items():
        report["models"][feature] = {
            "threshold": thresholds.get(feature, 0.0),
            "verdicts": [
                {
                    "window_start": v.window_start,
                    "representative_error": v.representative_error,
                    "is_theft": v.is_theft,
                }
                for v in vlist
            ],
        }
    if len(verdicts) == detect.ENSEMBLE_SIZE:
        voted = detect.ensemble_vote(list(verdicts.values()))
        report["ensemble"] = [
            {
                "window_start": v.window_start,
                "theft_votes": int(v.representative_error),
                "is_theft": v.is_theft,
            }
            for v in voted
        ]
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"detection_{trip.trip_id}.json"
    detect.write_detection_report(report, path)
    theft_windows = sum(
        v["is_theft"] for v in (report["ensemble"] or next(iter(report["models"].values()))["verdicts"])
    )
    print(f"wrote {path} ({theft_windows} theft windows)")
    return EXIT_OK


def evaluate(cfg: RunConfig, models_dir: str) -> dict:
    """Tune per-model thresholds on the validation split and score everything."""
    books = load_models(models_dir)
    # splice trips are a localization demo, not part of the 8:2 validation split
    val = load_corpus_trips(cfg, roles={"val-owner", "val-thief"})
    if not val:
        raise ingest.IngestError(f"no validation trips in {cfg.data_dir}")
    owner_count = sum(1 for e, _ in val if e["role"] == "val-owner")
    thief_count = len(val) - owner_count

    dlen = DetectionConfig(
        sample_period_s=cfg.sample_period_s, detection_window_s=cfg.detection_window_s
    ).detection_len

    # per-trip verdicts at threshold 0 expose raw representative errors
    per_trip: list[dict] = []
    for entry, trip in val:
        verdicts, assembled_len = trip_model_verdicts(trip, books, {}, cfg)
        sample_labels = synth.load_labels(cfg.data_dir, entry["labels"])
        labels = window_labels(sample_labels, assembled_len, dlen)
        per_trip.append({"entry": entry, "verdicts": verdicts, "labels": labels})

    report: dict = {
        "owner": cfg.owner,
        "seed": cfg.seed,
        "validation": {"owner_trips": owner_count, "thief_trips": thief_count},
        "models": {},
        "ensemble": None,
    }
    thresholds: dict[str, float] = {}
    curves: dict[str, detect.RocCurve] = {}
    tuned_verdicts: dict[str, list[bool]] = {}
    all_labels: list[bool] = []
    for item in per_trip:
        all_labels.extend(item["labels"])

    for feature in books:
        labeled = []
        for item in per_trip:
            for v, lab in zip(item["verdicts"][feature], item["labels"]):
                labeled.append((v.representative_error, lab))
        if isinstance(cfg.thresholds, dict) and feature in cfg.thresholds:
            theta = cfg.thresholds[feature]
            curve = None
        else:
            grid = detect.threshold_grid([e for e, _ in labeled])
            curve = detect.roc_sweep(labeled, grid)
            theta = detect.optimize_threshold(curve)
            curves[feature] = curve
        thresholds[feature] = theta
        predictions = [e > theta for e, _ in labeled]
        metrics = detect.compute_metrics(predictions, all_labels)
        tuned_verdicts[feature] = predictions
        report["models"][feature] = {
            "threshold": theta,
            "auc": curve.auc if curve else None,
            "metrics": detect.metrics_dict(metrics),
        }

    if len(books) == detect.ENSEMBLE_SIZE:
        stacked = [tuned_verdicts[f] for f in books]
        votes = [sum(col) for col in zip(*stacked)]
        ens_pred = [v >= detect.MAJORITY for v in votes]
        report["ensemble"] = {
            "rule": f"majority {detect.MAJORITY} of {detect.ENSEMBLE_SIZE}",
            "metrics": detect.metrics_dict(detect.compute_metrics(ens_pred, all_labels)),
        }

    report["thresholds"] = thresholds
    report["_curves"] = curves  # stripped before serialization
    return report


def cmd_evaluate(cfg: RunConfig, models_dir: str) -> int:
    report = evaluate(cfg, models_dir)
    curves = report.pop("_curves")
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    detect.write_detection_report(report, out_dir / "report.json")
    (Path(models_dir) / "thresholds.json").write_text(
        json.dumps(report["thresholds"], indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    for feature, curve in curves.items():
        detect.write_roc_csv(curve, out_dir / f"roc_{feature}.csv")
    (out_dir / "report.md").write_text(render_markdown(report), encoding="utf-8")
    for feature, block in report["models"].items():
        m = block["metrics"]
        print(
            f"{feature}: threshold={block['threshold']:.6g} "
            f"acc={m['accuracy']:.4f} prec={m['precision']:.4f} "
            f"rec={m['recall']:.4f} f1={m['f1']:.4f}"
        )
    if report["ensemble"]:
        m = report["ensemble"]["metrics"]
        print(
            f"ensemble: acc={m['accuracy']:.4f} prec={m['precision']:.4f} "
            f"rec={m['recall']:.4f} f1={m['f1']:.4f}"
        )
    print(f"wrote {out_dir / 'report.json'}")
    return EXIT_OK


def render_markdown(report: dict) -> str:
    lines = [
        "| Model | Feature | Optimized Threshold | Accuracy | Precision | Recall | F1 Score |",
        "|---|---|---|---|---|---|---|",
    ]
    for i, (feature, block) in enumerate(report["models"].items(), start=1):
        m = block["metrics"]
        lines.append(
            f"| Model {i} | {feature} | {block['threshold']:.6g} | "
            f"{m['accuracy']:.4f} | {m['precision']:.4f} | {m['recall']:.4f} | {m['f1']:.4f} |"
        )
    if report.get("ensemble"):
        m = report["ensemble"]["metrics"]
        lines.append(
            f"| Ensemble | {report['ensemble']['rule']} |  | "
            f"{m['accuracy']:.4f} | {m['precision']:.4f} | {m['recall']:.4f} | {m['f1']:.4f} |"
        )
    return "\n".join(lines) + "\n"


def cmd_report(cfg: RunConfig, report_path: str, reconstruction_csv: str | None) -> int:
    report = json.loads(Path(report_path).read_text(encoding="utf-8"))
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.md").write_text(render_markdown(report), encoding="utf-8")
    rows = ["model,feature,threshold,accuracy,precision,recall,f1"]
    for i, (feature, block) in enumerate(report["models"].items(), start=1):
        m = block["metrics"]
        rows.append(
            f"Model {i},{feature},{block['threshold']},{m['accuracy']},"
            f"{m['precision']},{m['recall']},{m['f1']}"
        )
    if report.get("ensemble"):
        m = report["ensemble"]["metrics"]
        rows.append(
            f"Ensemble,majority,,{m['accuracy']},{m['precision']},{m['recall']},{m['f1']}"
        )
    (out_dir / "report.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")
    if reconstruction_csv:
        svg = render_reconstruction_svg(Path(reconstruction_csv))
        (out_dir / "reconstruction.svg").write_text(svg, encoding="utf-8")
    print(f"wrote {out_dir / 'report.md'} and {out_dir / 'report.csv'}")
    return EXIT_OK


def render_reconstruction_svg(csv_path: Path, width: int = 900, height: int = 300) -> str:
    """Line plot of original/reconstructed/error from a reconstruction dump."""
    import csv as csvmod

    with open(csv_path, newline="", encoding="utf-8") as fh:
        rows = list(csvmod.DictReader(fh))
    series = {
        name: [float(r[name]) for r in rows]
        for name in ("original_assembled", "reconstructed", "error")
    }
    lo = min(min(v) for v in series.values())
    hi = max(max(v) for v in series.values())
    span = (hi - lo) or 1.0
    n = len(rows)

    def polyline(values: list[float], color: str) -> str:
        pts = " ".join(
            f"{i * (width - 20) / max(n - 1, 1) + 10:.2f},"
            f"{height - 10 - (v - lo) / span * (height - 20):.2f}"
            for i, v in enumerate(values)
        )
        return f'<polyline fill="none" stroke="{color}" stroke-width="1" points="{pts}"/>'

    body = "\n".join(
        polyline(series[name], color)
        for name, color in (
            ("original_assembled", "#1f77b4"),
            ("reconstructed", "#2ca02c"),
            ("error", "#d62728"),
        )
    )
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">\n'
        f"{body}\n</svg>\n"
    )


# --- argument parsing ---------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="theftdetect",
        description="Owner-only automobile theft detection pipeline",
    )
    parser.add_argument("--config", help="JSON config file")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--data", dest="data_dir")
        p.add_argument("--out", dest="out_dir")
        p.add_argument("--owner")
        p.add_argument("--seed", type=int)
        p.add_argument("--sample-period", dest="sample_period_s", type=float)
        p.add_argument("--window", dest="window_s", type=float)
        p.add_argument("--stride", dest="stride_s", type=float)
        p.add_argument("--k", type=int)
        p.add_argument("--restarts", type=int)

    p_synth = sub.add_parser("synth", help="generate the synthetic corpus")
    common(p_synth)
    p_synth.add_argument("--trips", dest="trips_per_driver", type=int)
    p_synth.add_argument("--duration", dest="duration_s", type=float)

    p_ingest = sub.add_parser("ingest", help="build catalog and pick essential features")
    common(p_ingest)

    p_train = sub.add_parser("train", help="train per-feature codebooks on owner trips")
    common(p_train)

    p_detect = sub.add_parser("detect", help="score one trip against trained models")
    common(p_detect)
    p_detect.add_argument("--models", required=True)
    p_detect.add_argument("--trip", required=True)

    p_eval = sub.add_parser("evaluate", help="tune thresholds and compute metrics")
    common(p_eval)
    p_eval.add_argument("--models", required=True)

    p_report = sub.add_parser("report", help="render markdown/CSV/SVG from a report")
    common(p_report)
    p_report.add_argument("--report", required=True, dest="report_path")
    p_report.add_argument("--reconstruction-csv")

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    overrides = {
        k: v
        for k, v in vars(args).items()
        if k in _CONFIG_FIELDS and v is not None
    }
    if overrides.get("k") is not None:
        overrides["strict_k"] = True
    try:
        cfg = load_config(args.config, overrides)
        if args.command == "synth":
            if cfg.trips_per_driver < 1:
                raise ConfigError("trips_per_driver must be at least 1")
            return cmd_synth(cfg)
        if args.command == "ingest":
            return cmd_ingest(cfg)
        if args.command == "train":
            return cmd_train(cfg)
        if args.command == "detect":
            return cmd_detect(cfg, args.trip, args.models)
        if args.command == "evaluate":
            return cmd_evaluate(cfg, args.models)
        if args.command == "report":
            return cmd_report(cfg, args.report_path, args.reconstruction_csv)
        raise ConfigError(f"unknown command {args.command!r}")
    except (ConfigError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InfeasibleKError as exc:
        print(f"infeasible model: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (
        ingest.IngestError,
        synth.SynthError,
        windowing.WindowError,
        reconstruct.ReconstructError,
        detect.DetectError,
        cluster.ClusterError,
        FileNotFoundError,
    ) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
