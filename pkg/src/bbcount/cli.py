"""Command-line pipeline: generate traces, run experiments, sweep sample
sizes, and predict from persisted models.

Every run records its seed and configuration in the output manifest so a
rerun with the same arguments reproduces the same report files.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import experiment as exp
from .cfg import CfgError, load_program
from .families import (
    GridSpecError,
    UnknownFamilyError,
    builtin_suite,
    family_by_name,
    generate_dataset,
    grid_from_counts,
    parse_grid,
)
from .persist import PersistError, load_model
from .traces import SplitMode, TraceParseError, TraceSchemaError, ingest


class CliError(Exception):
    """Fatal CLI failure with a one-line diagnostic."""


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0, help="run seed (recorded in outputs)")
    parser.add_argument("--out", help="output file or directory")
    parser.add_argument("--workers", type=int, default=1, help="parallel series workers")
    parser.add_argument("--force", action="store_true", help="overwrite existing outputs")


def _inputs_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--family",
        action="append",
        default=[],
        help="builtin family name (repeatable); see `generate --list`",
    )
    parser.add_argument(
        "--trace", action="append", default=[], help="existing trace CSV (repeatable)"
    )
    parser.add_argument(
        "--grid",
        default=None,
        help="sweep grid for families: counts like 4x4x4 or values like n=1:20:2;m=3,7,9 "
        "(default: 5 evenly spaced points per parameter)",
    )


def _model_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--model", choices=["pnn", "brbpnn", "both"], default="both", help="models to train"
    )
    parser.add_argument("--split", choices=[m.value for m in SplitMode], default="high-low")
    parser.add_argument("--fraction", type=float, default=0.7)
    parser.add_argument("--epochs", type=int, default=300, help="PNN epochs")
    parser.add_argument("--batch-size", type=int, default=10, help="PNN batch size")
    parser.add_argument("--learning-rate", type=float, default=1e-4, help="PNN learning rate")
    parser.add_argument("--hidden", type=int, default=10, help="PNN hidden layer size")
    parser.add_argument("--br-hidden", type=int, default=1, help="BR-BPNN hidden layer size")
    parser.add_argument("--br-epochs", type=int, default=1000, help="BR-BPNN epoch cap")
    parser.add_argument("--heatmap-bins", type=int, default=32)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bbcount",
        description="Basic-block execution-count prediction toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="interpret a program over a grid into a trace CSV")
    gen.add_argument("--family", help="builtin family name")
    gen.add_argument("--program", help="CFG program JSON file")
    gen.add_argument(
        "--grid",
        default=None,
        help="sweep grid (default: 5 evenly spaced points per parameter)",
    )
    gen.add_argument("--list", action="store_true", help="list builtin families and exit")
    gen.add_argument("--step-budget", type=int, default=10**9)
    _common_flags(gen)

    run = sub.add_parser("experiment", help="split, train, evaluate, and write reports")
    _inputs_flags(run)
    _model_flags(run)
    _common_flags(run)

    sweep = sub.add_parser("sweep", help="learning curves over training fractions")
    _inputs_flags(sweep)
    _model_flags(sweep)
    sweep.add_argument(
        "--fractions",
        default="0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9",
        help="comma-separated training fractions",
    )
    _common_flags(sweep)

    predict = sub.add_parser("predict", help="evaluate a persisted model on parameter vectors")
    predict.add_argument("--model-file", required=True, help="persisted model JSON")
    predict.add_argument(
        "--params",
        action="append",
        default=[],
        help="comma-separated parameter vector (repeatable)",
    )
    predict.add_argument("--params-file", help="CSV of parameter vectors, one per line")
    predict.add_argument("--out", help="output CSV (default: stdout)")
    predict.add_argument("--force", action="store_true")
    return parser


def _check_fresh(path: Path, force: bool) -> None:
    if path.exists() and not force:
        raise CliError(f"{path} exists; pass --force to overwrite")


def _require_out(args) -> Path:
    if not args.out:
        raise CliError("--out is required")
    return Path(args.out)


def _resolve_grid(grid_text, params):
    if grid_text is None:
        return grid_from_counts(params, [5] * len(params))
    return parse_grid(grid_text, params)


def cmd_generate(args) -> int:
    if args.list:
        for family in builtin_suite():
            params = ", ".join(
                f"{p.name} in [{p.low}, {p.high}]" for p in family.program.params
            )
            print(f"{family.name}: {family.description} ({params})")
        return 0
    if bool(args.family) == bool(args.program):
        raise CliError("pass exactly one of --family or --program")
    if args.family:
        program = family_by_name(args.family).program
    else:
        program = load_program(args.program)
    grid = _resolve_grid(args.grid, program.params)
    out = _require_out(args)
    _check_fresh(out, args.force)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    rows = generate_dataset(program, grid, out, step_budget=args.step_budget)
    print(f"wrote {rows} records ({grid.size} assignments) to {out}")
    return 0


def _load_series(args, out_dir: Path) -> tuple[list, dict[str, str]]:
    if not args.family and not args.trace:
        raise CliError("pass at least one --family or --trace input")
    series = []
    digests: dict[str, str] = {}
    for name in args.family:
        family = family_by_name(name)
        grid = _resolve_grid(args.grid, family.program.params)
        trace_path = out_dir / f"traces_{family.name}.csv"
        generate_dataset(family.program, grid, trace_path)
        digests[str(trace_path)] = exp.digest_file(trace_path)
        series.extend(ingest(trace_path))
    for trace in args.trace:
        digests[trace] = exp.digest_file(trace)
        series.extend(ingest(trace))
    return series, digests


def _experiment_config(args) -> exp.ExperimentConfig:
    models = ("pnn", "brbpnn") if args.model == "both" else (args.model,)
    return exp.ExperimentConfig(
        split_mode=SplitMode(args.split),
        fraction=args.fraction,
        seed=args.seed,
        models=models,
        pnn_epochs=args.epochs,
        pnn_batch_size=args.batch_size,
        pnn_learning_rate=args.learning_rate,
        pnn_hidden=args.hidden,
        br_hidden=args.br_hidden,
        br_max_epochs=args.br_epochs,
        workers=args.workers,
        heatmap_bins=args.heatmap_bins,
    )


def cmd_experiment(args) -> int:
    out_dir = _require_out(args)
    _check_fresh(out_dir / "summary.csv", args.force)
    out_dir.mkdir(parents=True, exist_ok=True)
    series, digests = _load_series(args, out_dir)
    config = _experiment_config(args)
    output = exp.run_experiment(series, config, out_dir, digests)
    failed = sum(1 for r in output.rows if r.error is not None)
    print(f"wrote {out_dir / 'summary.csv'} ({len(output.rows)} rows, {failed} failed)")
    for summary in output.summaries:
        accuracy = "undefined" if summary.accuracy is None else f"{summary.accuracy:.2f}%"
        print(f"  {summary.app} [{summary.kind}] accuracy {accuracy}")
    return 0


def cmd_sweep(args) -> int:
    out_dir = _require_out(args)
    try:
        fractions = [float(f) for f in args.fractions.split(",") if f.strip()]
    except ValueError as exc:
        raise CliError(f"bad --fractions: {exc}") from exc
    if not fractions or not all(0.0 < f < 1.0 for f in fractions):
        raise CliError("--fractions must be inside (0, 1)")
    fractions.sort()
    first = out_dir / "sweep_manifest.json"
    _check_fresh(first, args.force)
    out_dir.mkdir(parents=True, exist_ok=True)
    series, digests = _load_series(args, out_dir)
    config = _experiment_config(args)
    curves = 0
    for one_series in series:
        for kind in config.models:
            points = exp.learning_curve(one_series, kind, fractions, args.seed, config)
            path = out_dir / f"curve_{exp.series_slug(one_series.key, kind)}.csv"
            exp.write_curve_csv(points, path)
            curves += 1
    manifest = {
        "config": config.to_manifest(),
        "fractions": fractions,
        "inputs": digests,
        "curves": curves,
    }
    with open(first, "w", encoding="utf-8", newline="\n") as handle:
        json.dump(manifest, handle, indent=2)
        handle.write("\n")
    print(f"wrote {curves} learning curves to {out_dir}")
    return 0


def cmd_predict(args) -> int:
    saved = load_model(args.model_file)
    vectors: list[list[int]] = []
    for text in args.params:
        vectors.append([int(v) for v in text.split(",")])
    if args.params_file:
        with open(args.params_file, encoding="utf-8") as handle:
            for line in handle:
                line = line.strip()
                if line and not line.startswith("#"):
                    vectors.append([int(v) for v in line.split(",")])
    if not vectors:
        raise CliError("no parameter vectors; pass --params or --params-file")
    arity = saved.model.n_inputs
    for vector in vectors:
        if len(vector) != arity:
            raise CliError(f"model expects {arity} parameters, got {vector}")
    X = np.array(vectors, dtype=float)
    predictions = saved.predict_counts(X)
    lines = ["params,predicted_count"]
    for vector, value in zip(vectors, predictions):
        lines.append(f"{' '.join(str(v) for v in vector)},{float(value)!r}")
    text = "\n".join(lines) + "\n"
    if args.out:
        out = Path(args.out)
        _check_fresh(out, args.force)
        out.write_text(text, encoding="utf-8")
        print(f"wrote {len(vectors)} predictions to {out}")
    else:
        sys.stdout.write(text)
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "generate": cmd_generate,
        "experiment": cmd_experiment,
        "sweep": cmd_sweep,
        "predict": cmd_predict,
    }
    try:
        return handlers[args.command](args)
    except (
        CliError,
        CfgError,
        GridSpecError,
        UnknownFamilyError,
        PersistError,
        TraceParseError,
        TraceSchemaError,
        FileNotFoundError,
        RuntimeError,
    ) as exc:
        message = exc.args[0] if isinstance(exc, (UnknownFamilyError, KeyError)) else exc
        print(f"error: {message}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
