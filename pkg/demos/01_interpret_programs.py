"""Build a control-flow graph by hand, run the counting interpreter, and
compare the builtin families against their closed-form count oracles."""

from bbcount import (
    BasicBlock,
    CfgProgram,
    CondBranch,
    Exit,
    Jump,
    Param,
    builtin_suite,
    expr,
    interpret,
)

# A five-block program: pre-loop, loop check, loop body, increment, post-loop.
# The check block runs t+1 times (the failing test is an entry too), the body
# and increment run t times.
blocks = (
    BasicBlock(0, 0, Jump(1), (("i", expr("0")),)),
    BasicBlock(1, 0, CondBranch(expr("i < t"), 2, 4)),
    BasicBlock(2, 0, Jump(3)),
    BasicBlock(3, 0, Jump(1), (("i", expr("i + 1")),)),
    BasicBlock(4, 0, Exit()),
)
program = CfgProgram("loop_demo", (Param("t", 0, 50),), (blocks,))

print("block entry counts of a t-iteration loop:")
for t in (0, 1, 5, 20):
    trace = interpret(program, (t,))
    row = ", ".join(f"b{b}={c}" for (_, b), c in sorted(trace.counts.items()))
    print(f"  t={t:2d}: {row}")

print("\nbuiltin families vs their closed-form oracles:")
for family in builtin_suite():
    values = tuple(p.low + 3 for p in family.program.params)
    trace = interpret(family.program, values)
    agrees = trace.counts == family.oracle(values)
    print(f"  {family.name:10s} at {values}: oracle agrees = {agrees}")
    print(f"    {family.description}")
