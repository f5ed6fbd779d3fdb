"""End-to-end pipeline: split, normalize, train, predict, report.

One model is trained per (series, model kind).  Per-series failures are
isolated and recorded; an experiment only fails when every series fails.
All artifacts are plain CSV plus a JSON run manifest carrying the config,
seed, and input digests needed to reproduce the run byte-for-byte.
"""

from __future__ import annotations

import hashlib
import json
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from . import __version__, brbpnn, metrics, pnn
from .persist import SavedModel, save_model
from .traces import (
    BbSeries,
    SplitError,
    SplitMode,
    SplitSpec,
    classify,
    fit_normalizer,
    split,
    trace_header,
)

MODEL_KINDS = ("pnn", "brbpnn")


def series_seed(base_seed: int, key: tuple[str, int, int], kind: str) -> int:
    """Stable per-(series, model) seed derived from the run seed."""
    app, kernel_id, bb_id = key
    sequence = np.random.SeedSequence(
        entropy=[
            int(base_seed) & 0xFFFFFFFFFFFFFFFF,
            zlib.crc32(app.encode("utf-8")),
            int(kernel_id),
            int(bb_id),
            zlib.crc32(kind.encode("utf-8")),
        ]
    )
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


@dataclass
class ExperimentConfig:
    split_mode: SplitMode = SplitMode.HIGH_LOW
    fraction: float = 0.7
    seed: int = 0
    models: tuple[str, ...] = MODEL_KINDS
    pnn_epochs: int = 300
    pnn_batch_size: int = 10
    pnn_learning_rate: float = 1e-4
    pnn_hidden: int = 10
    br_hidden: int = 1
    br_max_epochs: int = 1000
    workers: int = 1
    heatmap_bins: int = 32

    def split_spec(self) -> SplitSpec:
        return SplitSpec(self.split_mode, self.fraction, self.seed)

    def to_manifest(self) -> dict:
        doc = {k: v for k, v in self.__dict__.items()}
        doc["split_mode"] = self.split_mode.value
        doc["models"] = list(self.models)
        return doc


@dataclass
class SeriesResult:
    key: tuple[str, int, int]
    kind: str
    error: Optional[str] = None
    n_train: int = 0
    n_test: int = 0
    mse: Optional[float] = None
    pearson: Optional[float] = None
    spearman: Optional[float] = None
    constant_target: bool = False
    pinned_hyperparams: bool = False
    pred_raw: Optional[np.ndarray] = None
    actual_raw: Optional[np.ndarray] = None
    saved: Optional[SavedModel] = None

    @property
    def accuracy(self) -> Optional[float]:
        return None if self.mse is None else metrics.accuracy_percent(self.mse)


def train_one(
    series: BbSeries, kind: str, config: ExperimentConfig
) -> SeriesResult:
    """Split, normalize, train one model, and evaluate it on the test side."""
    result = SeriesResult(series.key, kind)
    try:
        train_series, test_series = split(series, config.split_spec())
    except SplitError as exc:
        result.error = str(exc)
        return result
    normalizer = fit_normalizer(train_series)
    result.n_train = len(train_series)
    result.n_test = len(test_series)
    result.constant_target = normalizer.constant_target
    X_train = normalizer.transform_features(train_series.X)
    y_train = normalizer.transform_targets(train_series.y)
    X_test = normalizer.transform_features(test_series.X)
    y_test = normalizer.transform_targets(test_series.y)
    seed = series_seed(config.seed, series.key, kind)
    try:
        if kind == "pnn":
            train_config = pnn.TrainConfig(
                epochs=config.pnn_epochs,
                batch_size=config.pnn_batch_size,
                learning_rate=config.pnn_learning_rate,
                seed=seed,
                hidden=config.pnn_hidden,
            )
            model, _ = pnn.train(X_train, y_train, train_config)
            pred = np.atleast_1d(pnn.forward(model, X_test))
            meta = {
                "epochs": train_config.epochs,
                "batch_size": train_config.batch_size,
                "learning_rate": train_config.learning_rate,
                "hidden": train_config.hidden,
            }
            saved_model: Union[pnn.PnnModel, brbpnn.BrbpnnModel] = model
        elif kind == "brbpnn":
            lm_config = brbpnn.LmConfig(max_epochs=config.br_max_epochs)
            model, history = brbpnn.train(
                X_train, y_train, hidden=config.br_hidden, seed=seed, config=lm_config
            )
            pred = np.atleast_1d(brbpnn.forward(model, X_test))
            result.pinned_hyperparams = any(r.pinned for r in history)
            meta = {
                "hidden": config.br_hidden,
                "max_epochs": config.br_max_epochs,
                "epochs_run": len(history),
                "gamma": history[-1].gamma if history else None,
                "mu": history[-1].mu if history else None,
            }
            saved_model = model
        else:
            raise ValueError(f"unknown model kind {kind!r}")
    except Exception as exc:  # isolate per-series failures
        result.error = f"{type(exc).__name__}: {exc}"
        return result
    result.mse = metrics.mse(pred, y_test)
    result.pred_raw = normalizer.inverse_targets(pred)
    result.actual_raw = test_series.y
    if len(pred) >= 2:
        result.pearson = metrics.pearson(result.pred_raw, result.actual_raw)
        result.spearman = metrics.spearman(result.pred_raw, result.actual_raw)
    result.saved = SavedModel(kind, saved_model, normalizer, series.key, seed, meta)
    return result


@dataclass
class AppSummary:
    app: str
    kind: str
    n_series: int
    n_failed: int
    avg_mse: Optional[float]
    accuracy: Optional[float]
    pearson_pooled: Optional[float]
    spearman_pooled: Optional[float]
    any_constant_target: bool
    any_pinned: bool


def summarize(rows: Sequence[SeriesResult], split_mode: SplitMode) -> list[AppSummary]:
    by_app_kind: dict[tuple[str, str], list[SeriesResult]] = {}
    for row in rows:
        by_app_kind.setdefault((row.key[0], row.kind), []).append(row)
    summaries = []
    for (app, kind), group in sorted(by_app_kind.items()):
        ok = [r for r in group if r.error is None]
        avg_mse = float(np.mean([r.mse for r in ok])) if ok else None
        preds = np.concatenate([r.pred_raw for r in ok]) if ok else np.array([])
        actuals = np.concatenate([r.actual_raw for r in ok]) if ok else np.array([])
        pooled_p = metrics.pearson(preds, actuals) if preds.size >= 2 else None
        pooled_s = metrics.spearman(preds, actuals) if preds.size >= 2 else None
        summaries.append(
            AppSummary(
                app=app,
                kind=kind,
                n_series=len(group),
                n_failed=len(group) - len(ok),
                avg_mse=avg_mse,
                accuracy=None if avg_mse is None else metrics.accuracy_percent(avg_mse),
                pearson_pooled=pooled_p,
                spearman_pooled=pooled_s,
                any_constant_target=any(r.constant_target for r in ok),
                any_pinned=any(r.pinned_hyperparams for r in ok),
            )
        )
    return summaries


# ---------------------------------------------------------------------------
# Learning curves
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CurvePoint:
    fraction: float
    accuracy: Optional[float]
    skipped: bool = False


def learning_curve(
    series: BbSeries,
    kind: str,
    fractions: Sequence[float],
    seed: int,
    config: Optional[ExperimentConfig] = None,
) -> list[CurvePoint]:
    """Random-split accuracy at each training fraction under a shared seed.

    The 0.7 point reproduces a standalone random-split evaluation with the
    same seed.  Degenerate splits at extreme fractions are skipped, not
    fatal.
    """
    if config is None:
        config = ExperimentConfig()
    points = []
    for fraction in fractions:
        point_config = ExperimentConfig(**{
            **config.__dict__,
            "split_mode": SplitMode.RANDOM,
            "fraction": fraction,
            "seed": seed,
        })
        try:
            result = train_one(series, kind, point_config)
        except SplitError:
            points.append(CurvePoint(fraction, None, skipped=True))
            continue
        if result.error is not None:
            points.append(CurvePoint(fraction, None, skipped=True))
        else:
            points.append(CurvePoint(fraction, result.accuracy))
    return points


# ---------------------------------------------------------------------------
# Artifact writing
# ---------------------------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return "undefined"
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def series_slug(key: tuple[str, int, int], kind: Optional[str] = None) -> str:
    app, kernel_id, bb_id = key
    slug = f"{app}_k{kernel_id}_b{bb_id}"
    return f"{slug}_{kind}" if kind else slug


def write_report_csv(rows: Sequence[SeriesResult], path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(
            "app,kernel_id,bb_id,model,n_train,n_test,mse,accuracy,"
            "pearson,spearman,constant_target,pinned_hyperparams,error\n"
        )
        for row in sorted(rows, key=lambda r: (r.key, r.kind)):
            app, kernel_id, bb_id = row.key
            error = (row.error or "").replace(",", ";")
            handle.write(
                f"{app},{kernel_id},{bb_id},{row.kind},{row.n_train},{row.n_test},"
                f"{_fmt(row.mse)},{_fmt(row.accuracy)},{_fmt(row.pearson)},"
                f"{_fmt(row.spearman)},{_fmt(row.constant_target)},"
                f"{_fmt(row.pinned_hyperparams)},{error}\n"
            )


def write_summary_csv(
    summaries: Sequence[AppSummary], split_mode: SplitMode, path: Path
) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(
            "app,split,model,n_series,n_failed,avg_mse,accuracy_percent,"
            "pearson_pooled,spearman_pooled,constant_target,pinned_hyperparams\n"
        )
        for row in summaries:
            handle.write(
                f"{row.app},{split_mode.value},{row.kind},{row.n_series},{row.n_failed},"
                f"{_fmt(row.avg_mse)},{_fmt(row.accuracy)},{_fmt(row.pearson_pooled)},"
                f"{_fmt(row.spearman_pooled)},{_fmt(row.any_constant_target)},"
                f"{_fmt(row.any_pinned)}\n"
            )


def write_heatmap_csv(data: metrics.HeatmapData, path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("pred_bin,actual_bin,pred_low,pred_high,actual_low,actual_high,count,on_identity\n")
        edges = data.edges
        for i in range(data.bins):
            for j in range(data.bins):
                handle.write(
                    f"{i},{j},{_fmt(float(edges[i]))},{_fmt(float(edges[i + 1]))},"
                    f"{_fmt(float(edges[j]))},{_fmt(float(edges[j + 1]))},"
                    f"{int(data.counts[i, j])},{_fmt(i == j)}\n"
                )


def write_kde_csv(curve: metrics.KdeCurve, path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("x,density\n")
        for x, d in zip(curve.grid, curve.density):
            handle.write(f"{_fmt(float(x))},{_fmt(float(d))}\n")


def write_curve_csv(points: Sequence[CurvePoint], path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("fraction,accuracy,skipped\n")
        for point in points:
            handle.write(
                f"{_fmt(point.fraction)},{_fmt(point.accuracy)},{_fmt(point.skipped)}\n"
            )


def write_split_manifests(
    series_list: Sequence[BbSeries], spec: SplitSpec, out_dir: Path
) -> None:
    """One splits_<app>.csv per app: trace rows plus a partition column."""
    by_app: dict[str, list[BbSeries]] = {}
    for series in series_list:
        by_app.setdefault(series.key[0], []).append(series)
    for app, group in sorted(by_app.items()):
        path = out_dir / f"splits_{app}.csv"
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            arity = group[0].arity
            handle.write(",".join(trace_header(arity) + ["partition"]) + "\n")
            for series in group:
                app_name, kernel_id, bb_id = series.key
                try:
                    labels = classify(series, spec)
                except SplitError:
                    labels = np.full(len(series), "error", dtype=object)
                for row, count, label in zip(series.X, series.y, labels):
                    params = ",".join(str(int(v)) for v in row)
                    handle.write(
                        f"{app_name},{kernel_id},{bb_id},{params},{int(count)},{label}\n"
                    )


def digest_file(path: Union[str, Path]) -> str:
    sha = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(65536), b""):
            sha.update(chunk)
    return sha.hexdigest()


# ---------------------------------------------------------------------------
# Experiment driver
# ---------------------------------------------------------------------------


@dataclass
class ExperimentOutput:
    rows: list[SeriesResult]
    summaries: list[AppSummary]
    out_dir: Path


def run_experiment(
    series_list: Sequence[BbSeries],
    config: ExperimentConfig,
    out_dir: Union[str, Path],
    input_digests: Optional[dict[str, str]] = None,
) -> ExperimentOutput:
    started = time.time()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tasks = [
        (series, kind) for series in series_list for kind in config.models
    ]
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            rows = list(pool.map(lambda t: train_one(t[0], t[1], config), tasks))
    else:
        rows = [train_one(series, kind, config) for series, kind in tasks]
    rows.sort(key=lambda r: (r.key, r.kind))
    if rows and all(r.error is not None for r in rows):
        raise RuntimeError(
            "all series failed; first error: " + str(rows[0].error)
        )
    summaries = summarize(rows, config.split_mode)

    write_report_csv(rows, out_dir / "report.csv")
    write_summary_csv(summaries, config.split_mode, out_dir / "summary.csv")
    write_split_manifests(series_list, config.split_spec(), out_dir)

    models_dir = out_dir / "models"
    models_dir.mkdir(exist_ok=True)
    for row in rows:
        if row.saved is not None:
            save_model(row.saved, models_dir / f"{series_slug(row.key, row.kind)}.json")
        if row.error is None and row.pred_raw is not None and row.pred_raw.size:
            heatmap = metrics.heatmap_data(
                row.pred_raw, row.actual_raw, config.heatmap_bins
            )
            write_heatmap_csv(
                heatmap, out_dir / f"heatmap_{series_slug(row.key, row.kind)}.csv"
            )
    for series in series_list:
        try:
            curve = metrics.kde(series.y)
        except (metrics.BandwidthError, metrics.MetricShapeError):
            continue
        write_kde_csv(curve, out_dir / f"kde_{series_slug(series.key)}.csv")

    manifest = {
        "config": config.to_manifest(),
        "inputs": input_digests or {},
        "series": [
            {"app": s.key[0], "kernel_id": s.key[1], "bb_id": s.key[2], "n": len(s)}
            for s in series_list
        ],
        "errors": {
            series_slug(r.key, r.kind): r.error for r in rows if r.error is not None
        },
        "versions": {
            "bbcount": __version__,
            "numpy": np.__version__,
        },
        "wall_time_seconds": time.time() - started,
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8", newline="\n") as handle:
        json.dump(manifest, handle, indent=2)
        handle.write("\n")
    return ExperimentOutput(rows, summaries, out_dir)
