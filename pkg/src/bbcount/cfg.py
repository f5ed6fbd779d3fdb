"""Parametric control-flow graphs and a counting interpreter.

A program is a set of kernels, each an ordered list of basic blocks.  Blocks
carry integer assignments (executed on entry) and end in a jump, a
conditional branch, or the kernel exit.  Branch predicates and assignment
expressions are integer expressions over the program's input parameters and
any counters the blocks themselves assign.  Interpreting a program for a
parameter assignment counts how many times each block is entered; those
counts are the ground truth the prediction models train on.
"""

from __future__ import annotations

import ast
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence, Union

DEFAULT_STEP_BUDGET = 10**9


class CfgError(Exception):
    """Base class for CFG construction and interpretation failures."""


class ExprError(CfgError):
    """Expression failed to parse, used a forbidden construct, or failed to evaluate."""


class ProgramError(CfgError):
    """Program structure violates an invariant."""


class ParamRangeError(CfgError):
    """A parameter value is outside its declared inclusive range."""


class StepBudgetError(CfgError):
    """Interpretation exceeded the block-entry budget."""


_ALLOWED_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.FloorDiv, ast.Mod, ast.Pow)
_ALLOWED_UNARY = (ast.USub, ast.UAdd, ast.Not)
_ALLOWED_CMPOPS = (ast.Lt, ast.LtE, ast.Gt, ast.GtE, ast.Eq, ast.NotEq)


def _check_node(node: ast.AST, text: str) -> None:
    if isinstance(node, ast.BinOp) and isinstance(node.op, _ALLOWED_BINOPS):
        _check_node(node.left, text)
        _check_node(node.right, text)
    elif isinstance(node, ast.UnaryOp) and isinstance(node.op, _ALLOWED_UNARY):
        _check_node(node.operand, text)
    elif isinstance(node, ast.BoolOp):
        for value in node.values:
            _check_node(value, text)
    elif isinstance(node, ast.Compare) and all(
        isinstance(op, _ALLOWED_CMPOPS) for op in node.ops
    ):
        _check_node(node.left, text)
        for comp in node.comparators:
            _check_node(comp, text)
    elif isinstance(node, ast.Name):
        pass
    elif (
        isinstance(node, ast.Constant)
        and isinstance(node.value, int)
        and not isinstance(node.value, bool)
    ):
        pass
    else:
        raise ExprError(f"unsupported construct {type(node).__name__!r} in expression {text!r}")


class IntExpr:
    """An integer expression over named variables, e.g. ``"i < n"`` or ``"(j + 1) // m"``.

    Supports integer literals, names, ``+ - * // % **``, comparisons, and
    ``and``/``or``/``not``.  The text is parsed once against a whitelist
    and compiled; evaluation runs with empty builtins so expressions can
    only see the variables they are handed.
    """

    __slots__ = ("text", "names", "_code")

    def __init__(self, text: str):
        try:
            tree = ast.parse(text, mode="eval")
        except SyntaxError as exc:
            raise ExprError(f"cannot parse expression {text!r}: {exc.msg}") from exc
        _check_node(tree.body, text)
        self.text = text
        self.names = frozenset(
            node.id for node in ast.walk(tree) if isinstance(node, ast.Name)
        )
        self._code = compile(tree, "<expr>", "eval")

    def eval(self, env: Mapping[str, int]) -> int:
        """Evaluate under ``env``; booleans come back as 0/1."""
        try:
            value = eval(self._code, {"__builtins__": {}}, env)  # whitelisted AST only
        except NameError as exc:
            raise ExprError(f"unknown variable in {self.text!r}: {exc}") from exc
        except ZeroDivisionError as exc:
            raise ExprError(f"division by zero in {self.text!r}") from exc
        if not isinstance(value, int):  # e.g. ** with a negative exponent
            raise ExprError(f"expression {self.text!r} produced non-integer {value!r}")
        return int(value)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, IntExpr) and self.text == other.text

    def __hash__(self) -> int:
        return hash(self.text)

    def __repr__(self) -> str:
        return f"IntExpr({self.text!r})"


def expr(text: Union[str, int, "IntExpr"]) -> IntExpr:
    """Coerce a string, integer literal, or existing expression to IntExpr."""
    if isinstance(text, IntExpr):
        return text
    if isinstance(text, int):
        return IntExpr(str(text))
    return IntExpr(text)


@dataclass(frozen=True)
class Jump:
    target: int


@dataclass(frozen=True)
class CondBranch:
    predicate: IntExpr
    then_target: int
    else_target: int


@dataclass(frozen=True)
class Exit:
    pass


Terminator = Union[Jump, CondBranch, Exit]


@dataclass(frozen=True)
class BasicBlock:
    """One single-entry block: assignments run in order on entry, then the terminator."""

    id: int
    kernel_id: int
    terminator: Terminator
    assigns: tuple[tuple[str, IntExpr], ...] = ()


@dataclass(frozen=True)
class Param:
    """A named integer input with an inclusive range."""

    name: str
    low: int
    high: int


@dataclass(frozen=True)
class CfgProgram:
    name: str
    params: tuple[Param, ...]
    kernels: tuple[tuple[BasicBlock, ...], ...]

    def __post_init__(self):
        validate_program(self)

    @property
    def arity(self) -> int:
        return len(self.params)


def validate_program(program: CfgProgram) -> None:
    seen = set()
    for param in program.params:
        if param.name in seen:
            raise ProgramError(f"duplicate parameter name {param.name!r}")
        seen.add(param.name)
        if param.low > param.high:
            raise ProgramError(
                f"parameter {param.name!r} has empty range [{param.low}, {param.high}]"
            )
    if not program.kernels:
        raise ProgramError("program has no kernels")
    for k, blocks in enumerate(program.kernels):
        if not blocks:
            raise ProgramError(f"kernel {k} has no blocks")
        exits = 0
        for idx, block in enumerate(blocks):
            if block.id != idx:
                raise ProgramError(
                    f"kernel {k}: block ids must be dense in order, got {block.id} at {idx}"
                )
            if block.kernel_id != k:
                raise ProgramError(
                    f"kernel {k}: block {idx} carries kernel_id {block.kernel_id}"
                )
            term = block.terminator
            if isinstance(term, Exit):
                exits += 1
            elif isinstance(term, Jump):
                if not 0 <= term.target < len(blocks):
                    raise ProgramError(f"kernel {k}: block {idx} jumps to missing {term.target}")
            elif isinstance(term, CondBranch):
                for target in (term.then_target, term.else_target):
                    if not 0 <= target < len(blocks):
                        raise ProgramError(
                            f"kernel {k}: block {idx} branches to missing {target}"
                        )
            else:
                raise ProgramError(f"kernel {k}: block {idx} has no terminator")
        if exits != 1:
            raise ProgramError(f"kernel {k} must have exactly one exit block, found {exits}")
        unreachable = _unreachable(blocks)
        if unreachable:
            raise ProgramError(f"kernel {k}: blocks {sorted(unreachable)} unreachable from entry")


def _unreachable(blocks: Sequence[BasicBlock]) -> set[int]:
    seen = {0}
    stack = [0]
    while stack:
        term = blocks[stack.pop()].terminator
        if isinstance(term, Jump):
            targets = (term.target,)
        elif isinstance(term, CondBranch):
            targets = (term.then_target, term.else_target)
        else:
            targets = ()
        for target in targets:
            if target not in seen:
                seen.add(target)
                stack.append(target)
    return set(range(len(blocks))) - seen


@dataclass(frozen=True)
class CountTrace:
    """Block-entry counts of one interpretation: (kernel_id, bb_id) -> count."""

    program_name: str
    param_values: tuple[int, ...]
    counts: Mapping[tuple[int, int], int]


def _coerce_params(
    program: CfgProgram, param_values: Union[Sequence[int], Mapping[str, int]]
) -> tuple[int, ...]:
    if isinstance(param_values, Mapping):
        missing = [p.name for p in program.params if p.name not in param_values]
        if missing:
            raise ParamRangeError(f"missing parameter values for {missing}")
        return tuple(int(param_values[p.name]) for p in program.params)
    values = tuple(int(v) for v in param_values)
    if len(values) != len(program.params):
        raise ParamRangeError(
            f"expected {len(program.params)} parameter values, got {len(values)}"
        )
    return values


def interpret(
    program: CfgProgram,
    param_values: Union[Sequence[int], Mapping[str, int]],
    step_budget: int = DEFAULT_STEP_BUDGET,
) -> CountTrace:
    """Run every kernel once and count block entries.

    Deterministic for fixed inputs.  Raises ParamRangeError for values
    outside declared ranges and StepBudgetError after ``step_budget`` block
    entries (a non-terminating or oversized configuration).
    """
    values = _coerce_params(program, param_values)
    for param, value in zip(program.params, values):
        if not param.low <= value <= param.high:
            raise ParamRangeError(
                f"{param.name}={value} outside declared range [{param.low}, {param.high}]"
            )
    all_counts: dict[tuple[int, int], int] = {}
    steps = 0
    for k, blocks in enumerate(program.kernels):
        counts = [0] * len(blocks)
        env: dict[str, int] = {p.name: v for p, v in zip(program.params, values)}
        pc = 0
        while True:
            steps += 1
            if steps > step_budget:
                raise StepBudgetError(
                    f"step budget {step_budget} exceeded in kernel {k} of {program.name!r}"
                )
            block = blocks[pc]
            counts[pc] += 1
            for name, assign_expr in block.assigns:
                env[name] = assign_expr.eval(env)
            term = block.terminator
            if type(term) is Jump:
                pc = term.target
            elif type(term) is CondBranch:
                pc = term.then_target if term.predicate.eval(env) else term.else_target
            else:
                break
        for bb_id, count in enumerate(counts):
            all_counts[(k, bb_id)] = count
    return CountTrace(program.name, values, all_counts)


# ---------------------------------------------------------------------------
# JSON program files
# ---------------------------------------------------------------------------
#
# {
#   "name": "example",
#   "params": [{"name": "n", "low": 1, "high": 64}],
#   "kernels": [[
#     {"assigns": [["i", "0"]], "jump": 1},
#     {"branch": {"if": "i < n", "then": 2, "else": 3}},
#     {"assigns": [["i", "i + 1"]], "jump": 1},
#     {"exit": true}
#   ]]
# }


def program_to_json(program: CfgProgram) -> dict:
    kernels = []
    for blocks in program.kernels:
        encoded = []
        for block in blocks:
            doc: dict = {}
            if block.assigns:
                doc["assigns"] = [[name, e.text] for name, e in block.assigns]
            term = block.terminator
            if isinstance(term, Jump):
                doc["jump"] = term.target
            elif isinstance(term, CondBranch):
                doc["branch"] = {
                    "if": term.predicate.text,
                    "then": term.then_target,
                    "else": term.else_target,
                }
            else:
                doc["exit"] = True
            encoded.append(doc)
        kernels.append(encoded)
    return {
        "name": program.name,
        "params": [{"name": p.name, "low": p.low, "high": p.high} for p in program.params],
        "kernels": kernels,
    }


def program_from_json(doc: Union[dict, str]) -> CfgProgram:
    if isinstance(doc, str):
        doc = json.loads(doc)
    try:
        params = tuple(
            Param(p["name"], int(p["low"]), int(p["high"])) for p in doc["params"]
        )
        kernels = []
        for k, blocks_doc in enumerate(doc["kernels"]):
            blocks = []
            for idx, block_doc in enumerate(blocks_doc):
                assigns = tuple(
                    (name, expr(text)) for name, text in block_doc.get("assigns", [])
                )
                if "jump" in block_doc:
                    term: Terminator = Jump(int(block_doc["jump"]))
                elif "branch" in block_doc:
                    branch = block_doc["branch"]
                    term = CondBranch(
                        expr(branch["if"]), int(branch["then"]), int(branch["else"])
                    )
                elif block_doc.get("exit"):
                    term = Exit()
                else:
                    raise ProgramError(f"kernel {k} block {idx}: no terminator")
                blocks.append(BasicBlock(idx, k, term, assigns))
            kernels.append(tuple(blocks))
    except (KeyError, TypeError, ValueError) as exc:
        raise ProgramError(f"malformed program document: {exc}") from exc
    return CfgProgram(doc["name"], params, tuple(kernels))


def load_program(path: Union[str, Path]) -> CfgProgram:
    with open(path, encoding="utf-8") as handle:
        return program_from_json(json.load(handle))


def save_program(program: CfgProgram, path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        json.dump(program_to_json(program), handle, indent=2)
        handle.write("\n")
