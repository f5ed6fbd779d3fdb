"""Built-in parametric benchmark families with closed-form count oracles.

Each family pairs a small CFG program with an exact formula for every
block's entry count, so interpreter output can be checked to zero
tolerance and model experiments have cheap, reproducible ground truth.
The five families cover the count shapes that show up in real kernels:
linear (n), bilinear (n*m), trilinear (n*m*k), triangular (n*(n+1)/2),
and a branchy family whose guarded loop never runs below a threshold.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence, TextIO, Union

from .cfg import (
    BasicBlock,
    CfgProgram,
    CondBranch,
    DEFAULT_STEP_BUDGET,
    Exit,
    Jump,
    Param,
    expr,
    interpret,
)
from .traces import trace_header

Counts = dict[tuple[int, int], int]
CountOracle = Callable[[Sequence[int]], Counts]

BRANCHY_THRESHOLD = 8


class GridSpecError(Exception):
    """A sweep grid is empty, malformed, or leaves its parameter ranges."""


class UnknownFamilyError(KeyError):
    def __init__(self, name: str):
        valid = ", ".join(f.name for f in builtin_suite())
        super().__init__(f"unknown family {name!r}; valid families: {valid}")


@dataclass(frozen=True)
class BuiltinFamily:
    name: str
    program: CfgProgram
    oracle: CountOracle
    description: str


def _kernel(*blocks: tuple) -> tuple[BasicBlock, ...]:
    """Build kernel 0 from (assigns, terminator) pairs in block order."""
    built = []
    for idx, (assigns, term) in enumerate(blocks):
        compiled = tuple((name, expr(text)) for name, text in assigns)
        built.append(BasicBlock(idx, 0, term, compiled))
    return tuple(built)


def _linear_program() -> CfgProgram:
    # b0 init -> b1 check -> b2 body (backedge) -> b3 exit
    kernel = _kernel(
        ([("i", "0")], Jump(1)),
        ([], CondBranch(expr("i < n"), 2, 3)),
        ([("i", "i + 1")], Jump(1)),
        ([], Exit()),
    )
    return CfgProgram("linear", (Param("n", 1, 512),), (kernel,))


def _linear_oracle(values: Sequence[int]) -> Counts:
    (n,) = values
    return {(0, 0): 1, (0, 1): n + 1, (0, 2): n, (0, 3): 1}


def _bilinear_program() -> CfgProgram:
    # Row-major double nest; b3 resets the inner counter and steps the outer.
    kernel = _kernel(
        ([("i", "0"), ("j", "0")], Jump(1)),
        ([], CondBranch(expr("j < m"), 2, 3)),
        ([("j", "j + 1")], Jump(1)),
        ([("j", "0"), ("i", "i + 1")], CondBranch(expr("i < n"), 1, 4)),
        ([], Exit()),
    )
    return CfgProgram("bilinear", (Param("n", 1, 64), Param("m", 1, 64)), (kernel,))


def _bilinear_oracle(values: Sequence[int]) -> Counts:
    n, m = values
    return {(0, 0): 1, (0, 1): n * (m + 1), (0, 2): n * m, (0, 3): n, (0, 4): 1}


def _trilinear_program() -> CfgProgram:
    # Triple nest in five blocks: b3 advances (i, j) lexicographically
    # without a conditional, k is the innermost counter.
    kernel = _kernel(
        ([("i", "0"), ("j", "0"), ("k", "0")], Jump(1)),
        ([], CondBranch(expr("k < kk"), 2, 3)),
        ([("k", "k + 1")], Jump(1)),
        (
            [("k", "0"), ("i", "i + (j + 1) // m"), ("j", "(j + 1) % m")],
            CondBranch(expr("i < n"), 1, 4),
        ),
        ([], Exit()),
    )
    params = (Param("n", 1, 32), Param("m", 1, 32), Param("kk", 1, 32))
    return CfgProgram("trilinear", params, (kernel,))


def _trilinear_oracle(values: Sequence[int]) -> Counts:
    n, m, k = values
    return {
        (0, 0): 1,
        (0, 1): n * m * (k + 1),
        (0, 2): n * m * k,
        (0, 3): n * m,
        (0, 4): 1,
    }


def _triangular_program() -> CfgProgram:
    # for i in 0..n-1: for j in 0..i — the body runs n*(n+1)/2 times.
    kernel = _kernel(
        ([("i", "0"), ("j", "0")], Jump(1)),
        ([], CondBranch(expr("j <= i"), 2, 3)),
        ([("j", "j + 1")], Jump(1)),
        ([("j", "0"), ("i", "i + 1")], CondBranch(expr("i < n"), 1, 4)),
        ([], Exit()),
    )
    return CfgProgram("triangular", (Param("n", 1, 64),), (kernel,))


def _triangular_oracle(values: Sequence[int]) -> Counts:
    (n,) = values
    return {
        (0, 0): 1,
        (0, 1): n * (n + 3) // 2,
        (0, 2): n * (n + 1) // 2,
        (0, 3): n,
        (0, 4): 1,
    }


def _branchy_program() -> CfgProgram:
    # The guarded loop (b1, b2) only runs when n clears the threshold;
    # below it the else block b3 runs instead and b2 stays at zero.
    kernel = _kernel(
        ([("i", "0")], CondBranch(expr(f"n > {BRANCHY_THRESHOLD}"), 1, 3)),
        ([], CondBranch(expr("i < n"), 2, 4)),
        ([("i", "i + 1")], Jump(1)),
        ([], Jump(4)),
        ([], Exit()),
    )
    return CfgProgram("branchy", (Param("n", 1, 64),), (kernel,))


def _branchy_oracle(values: Sequence[int]) -> Counts:
    (n,) = values
    if n > BRANCHY_THRESHOLD:
        return {(0, 0): 1, (0, 1): n + 1, (0, 2): n, (0, 3): 0, (0, 4): 1}
    return {(0, 0): 1, (0, 1): 0, (0, 2): 0, (0, 3): 1, (0, 4): 1}


def builtin_suite() -> tuple[BuiltinFamily, ...]:
    """The five builtin families, each paired with its exact count oracle."""
    return (
        BuiltinFamily(
            "linear", _linear_program(), _linear_oracle, "single loop, counts ~ n"
        ),
        BuiltinFamily(
            "bilinear", _bilinear_program(), _bilinear_oracle, "double nest, counts ~ n*m"
        ),
        BuiltinFamily(
            "trilinear",
            _trilinear_program(),
            _trilinear_oracle,
            "triple nest, counts ~ n*m*k",
        ),
        BuiltinFamily(
            "triangular",
            _triangular_program(),
            _triangular_oracle,
            "dependent nest, counts ~ n*(n+1)/2",
        ),
        BuiltinFamily(
            "branchy",
            _branchy_program(),
            _branchy_oracle,
            f"guarded loop, zero counts at n <= {BRANCHY_THRESHOLD}",
        ),
    )


def family_by_name(name: str) -> BuiltinFamily:
    for family in builtin_suite():
        if family.name == name:
            return family
    raise UnknownFamilyError(name)


# ---------------------------------------------------------------------------
# Sweep grids
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    """Explicit integer values per parameter; assignments are their product."""

    values: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if not self.values or any(len(axis) == 0 for axis in self.values):
            raise GridSpecError("grid has an empty axis")

    @property
    def size(self) -> int:
        size = 1
        for axis in self.values:
            size *= len(axis)
        return size

    def assignments(self) -> list[tuple[int, ...]]:
        return list(itertools.product(*self.values))


def grid_from_counts(params: Sequence[Param], counts: Sequence[int]) -> GridSpec:
    """Evenly spaced integer values over each declared range.

    ``counts[i]`` distinct values for parameter i; requires the range to
    hold that many integers so rounding cannot collide.
    """
    if len(counts) != len(params):
        raise GridSpecError(
            f"grid has {len(counts)} axes for {len(params)} parameters"
        )
    axes = []
    for param, count in zip(params, counts):
        if count < 1:
            raise GridSpecError(f"axis for {param.name!r} requests {count} points")
        span = param.high - param.low
        if count > span + 1:
            raise GridSpecError(
                f"{count} points do not fit in [{param.low}, {param.high}] for {param.name!r}"
            )
        if count == 1:
            axes.append((param.low,))
        else:
            axes.append(
                tuple(param.low + round(i * span / (count - 1)) for i in range(count))
            )
    return GridSpec(tuple(axes))


def _parse_axis(text: str) -> tuple[int, ...]:
    if ":" in text:
        pieces = text.split(":")
        if len(pieces) == 2:
            low, high, step = int(pieces[0]), int(pieces[1]), 1
        elif len(pieces) == 3:
            low, high, step = (int(p) for p in pieces)
        else:
            raise GridSpecError(f"bad range {text!r}, expected lo:hi or lo:hi:step")
        if step < 1 or high < low:
            raise GridSpecError(f"bad range {text!r}")
        return tuple(range(low, high + 1, step))
    return tuple(int(p) for p in text.split(","))


def parse_grid(text: str, params: Sequence[Param]) -> GridSpec:
    """Parse a sweep grid from CLI text.

    Two forms: ``4x4x4`` (evenly spaced point counts per parameter) or
    per-parameter values ``n=1:20:2;m=3,7,9`` (ranges are inclusive).
    """
    text = text.strip()
    if not text:
        raise GridSpecError("empty grid spec")
    if "=" in text:
        by_name: dict[str, tuple[int, ...]] = {}
        for piece in text.split(";"):
            name, _, axis_text = piece.partition("=")
            name = name.strip()
            if not axis_text:
                raise GridSpecError(f"bad grid fragment {piece!r}")
            try:
                by_name[name] = _parse_axis(axis_text.strip())
            except ValueError as exc:
                raise GridSpecError(f"bad grid fragment {piece!r}: {exc}") from exc
        declared = {p.name for p in params}
        unknown = set(by_name) - declared
        if unknown:
            raise GridSpecError(f"grid names unknown parameters: {sorted(unknown)}")
        missing = declared - set(by_name)
        if missing:
            raise GridSpecError(f"grid missing parameters: {sorted(missing)}")
        grid = GridSpec(tuple(by_name[p.name] for p in params))
    else:
        try:
            counts = [int(piece) for piece in text.split("x")]
        except ValueError as exc:
            raise GridSpecError(f"bad grid spec {text!r}: {exc}") from exc
        grid = grid_from_counts(params, counts)
    _check_grid_ranges(grid, params)
    return grid


def _check_grid_ranges(grid: GridSpec, params: Sequence[Param]) -> None:
    if len(grid.values) != len(params):
        raise GridSpecError(
            f"grid has {len(grid.values)} axes for {len(params)} parameters"
        )
    for param, axis in zip(params, grid.values):
        for value in axis:
            if not param.low <= value <= param.high:
                raise GridSpecError(
                    f"grid value {value} outside [{param.low}, {param.high}] for {param.name!r}"
                )


# ---------------------------------------------------------------------------
# Dataset generation
# ---------------------------------------------------------------------------


def generate_dataset(
    program: CfgProgram,
    grid: GridSpec,
    out: Union[str, Path, TextIO],
    step_budget: int = DEFAULT_STEP_BUDGET,
) -> int:
    """Interpret the program over the grid and write one trace row per
    (assignment, kernel, block).  Returns the number of rows written."""
    _check_grid_ranges(grid, program.params)
    assignments = grid.assignments()
    if isinstance(out, (str, Path)):
        with open(out, "w", encoding="utf-8", newline="") as handle:
            return _write_rows(program, assignments, handle, step_budget)
    return _write_rows(program, assignments, out, step_budget)


def _write_rows(
    program: CfgProgram,
    assignments: Sequence[tuple[int, ...]],
    sink: TextIO,
    step_budget: int,
) -> int:
    sink.write(",".join(trace_header(program.arity)) + "\n")
    rows = 0
    for assignment in assignments:
        trace = interpret(program, assignment, step_budget)
        params_text = ",".join(str(v) for v in assignment)
        for (kernel_id, bb_id), count in sorted(trace.counts.items()):
            sink.write(
                f"{program.name},{kernel_id},{bb_id},{params_text},{count}\n"
            )
            rows += 1
    return rows
