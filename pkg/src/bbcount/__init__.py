"""Basic-block execution-count prediction toolkit.

Generates ground-truth block-entry counts by interpreting parametric
control-flow graphs, trains a Poisson neural network and a
Bayesian-regularized LM network per block on application input
parameters, and evaluates interpolation and extrapolation accuracy.
"""

__version__ = "0.1.0"

from .cfg import (
    BasicBlock,
    CfgProgram,
    CondBranch,
    CountTrace,
    Exit,
    IntExpr,
    Jump,
    Param,
    ParamRangeError,
    StepBudgetError,
    expr,
    interpret,
    load_program,
    program_from_json,
    program_to_json,
)
from .families import (
    BuiltinFamily,
    GridSpec,
    builtin_suite,
    family_by_name,
    generate_dataset,
    grid_from_counts,
    parse_grid,
)
from .traces import (
    BbSeries,
    Normalizer,
    SplitMode,
    SplitSpec,
    TraceRecord,
    fit_normalizer,
    group_series,
    ingest,
    read_trace_csv,
    split,
)

__all__ = [
    "BasicBlock",
    "BbSeries",
    "BuiltinFamily",
    "CfgProgram",
    "CondBranch",
    "CountTrace",
    "Exit",
    "GridSpec",
    "IntExpr",
    "Jump",
    "Normalizer",
    "Param",
    "ParamRangeError",
    "SplitMode",
    "SplitSpec",
    "StepBudgetError",
    "TraceRecord",
    "builtin_suite",
    "expr",
    "family_by_name",
    "fit_normalizer",
    "generate_dataset",
    "grid_from_counts",
    "group_series",
    "ingest",
    "interpret",
    "load_program",
    "parse_grid",
    "program_from_json",
    "program_to_json",
    "read_trace_csv",
    "split",
]
