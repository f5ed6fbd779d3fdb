"""End-to-end run: generate traces for two families, split high-low, train
both model kinds per block, and write the report artifacts (report.csv,
summary.csv, heatmap/KDE data, persisted models, run manifest)."""

import tempfile
from pathlib import Path

from bbcount import family_by_name, generate_dataset, ingest, parse_grid
from bbcount.experiment import ExperimentConfig, run_experiment
from bbcount.traces import SplitMode

out_dir = Path(tempfile.mkdtemp(prefix="bbcount_demo_"))

series = []
for name, grid_text in (("linear", "n=1:120"), ("bilinear", "n=2:30:2;m=2:30:2")):
    family = family_by_name(name)
    trace_path = out_dir / f"traces_{name}.csv"
    generate_dataset(family.program, parse_grid(grid_text, family.program.params), trace_path)
    series.extend(ingest(trace_path))
print(f"{len(series)} block series from 2 families")

config = ExperimentConfig(
    split_mode=SplitMode.HIGH_LOW,
    seed=0,
    models=("pnn", "brbpnn"),
    pnn_epochs=800,
)
output = run_experiment(series, config, out_dir)

print(f"\nper-family summaries ({config.split_mode.value} split):")
for row in output.summaries:
    accuracy = "undefined" if row.accuracy is None else f"{row.accuracy:5.1f}%"
    print(
        f"  {row.app:9s} {row.kind:7s} accuracy {accuracy}  "
        f"avg MSE {row.avg_mse:.4f}  ({row.n_series} blocks, {row.n_failed} failed)"
    )

print(f"\nartifacts in {out_dir}:")
for path in sorted(output.out_dir.iterdir()):
    print(f"  {path.name}")

print("\nCLI equivalent:")
print("  bbcount experiment --family linear --family bilinear \\")
print("      --split high-low --model both --seed 0 --out ./run")
print("  bbcount sweep --family linear --fractions 0.1,0.3,0.5,0.7,0.9 --out ./sweep")
print("  bbcount predict --model-file run/models/linear_k0_b2_pnn.json --params 200")
