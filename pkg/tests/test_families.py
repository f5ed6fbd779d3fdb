import io
import itertools

import pytest

from bbcount.cfg import interpret
from bbcount.families import (
    BRANCHY_THRESHOLD,
    GridSpec,
    GridSpecError,
    UnknownFamilyError,
    builtin_suite,
    family_by_name,
    generate_dataset,
    grid_from_counts,
    parse_grid,
)


def small_grid(program, points=4):
    return grid_from_counts(program.params, [points] * program.arity)


class TestSuiteContents:
    def test_at_least_five_families(self):
        suite = builtin_suite()
        assert len(suite) >= 5
        names = {f.name for f in suite}
        assert {"linear", "bilinear", "trilinear", "triangular", "branchy"} <= names

    def test_unknown_family_lists_valid_names(self):
        with pytest.raises(UnknownFamilyError) as err:
            family_by_name("nope")
        assert "linear" in str(err.value)


class TestOracleEquivalence:
    @pytest.mark.parametrize("family", builtin_suite(), ids=lambda f: f.name)
    def test_interpreter_matches_oracle_on_grid(self, family):
        grid = small_grid(family.program)
        for assignment in grid.assignments():
            trace = interpret(family.program, assignment)
            assert trace.counts == family.oracle(assignment), assignment

    def test_trilinear_product_counts(self):
        family = family_by_name("trilinear")
        trace = interpret(family.program, (2, 3, 4))
        assert trace.counts[(0, 2)] == 24
        trace = interpret(family.program, (4, 5, 6))
        assert trace.counts[(0, 2)] == 120

    def test_triangular_formula(self):
        family = family_by_name("triangular")
        trace = interpret(family.program, (4,))
        assert trace.counts[(0, 2)] == 10

    def test_branchy_guard_below_threshold(self):
        family = family_by_name("branchy")
        below = interpret(family.program, (BRANCHY_THRESHOLD,))
        assert below.counts[(0, 2)] == 0
        above = interpret(family.program, (BRANCHY_THRESHOLD + 5,))
        assert above.counts[(0, 2)] == BRANCHY_THRESHOLD + 5

    @pytest.mark.parametrize("name", ["linear", "bilinear", "trilinear"])
    def test_monotone_counts(self, name):
        family = family_by_name(name)
        grid = small_grid(family.program, points=3)
        axes = grid.values
        for assignment in grid.assignments():
            base = family.oracle(assignment)
            for dim, axis in enumerate(axes):
                pos = axis.index(assignment[dim])
                if pos + 1 == len(axis):
                    continue
                bumped = list(assignment)
                bumped[dim] = axis[pos + 1]
                higher = family.oracle(tuple(bumped))
                assert all(higher[k] >= base[k] for k in base)


class TestGrids:
    def test_counts_form(self):
        family = family_by_name("trilinear")
        grid = grid_from_counts(family.program.params, [4, 4, 4])
        assert grid.size == 64
        for axis, param in zip(grid.values, family.program.params):
            assert len(set(axis)) == 4
            assert axis[0] == param.low and axis[-1] == param.high

    def test_single_point_axis_uses_low(self):
        family = family_by_name("linear")
        grid = grid_from_counts(family.program.params, [1])
        assert grid.values == ((1,),)

    def test_too_many_points_rejected(self):
        family = family_by_name("linear")
        with pytest.raises(GridSpecError):
            grid_from_counts(family.program.params, [10_000])

    def test_empty_grid_rejected(self):
        with pytest.raises(GridSpecError):
            GridSpec(((),))
        family = family_by_name("linear")
        with pytest.raises(GridSpecError):
            grid_from_counts(family.program.params, [0])

    def test_parse_counts_and_named_forms(self):
        family = family_by_name("bilinear")
        grid = parse_grid("3x2", family.program.params)
        assert grid.size == 6
        grid = parse_grid("n=1:9:2;m=3,7", family.program.params)
        assert grid.values == ((1, 3, 5, 7, 9), (3, 7))

    def test_parse_rejects_out_of_range_values(self):
        family = family_by_name("bilinear")
        with pytest.raises(GridSpecError):
            parse_grid("n=1:9;m=1,999", family.program.params)

    def test_parse_rejects_unknown_or_missing_names(self):
        family = family_by_name("bilinear")
        with pytest.raises(GridSpecError):
            parse_grid("n=1:5;q=1:5", family.program.params)
        with pytest.raises(GridSpecError):
            parse_grid("n=1:5", family.program.params)


class TestGenerateDataset:
    def test_record_count_simple(self):
        # 3 sweep points x 4 blocks for the linear program
        family = family_by_name("linear")
        grid = GridSpec(((10, 20, 30),))
        buf = io.StringIO()
        rows = generate_dataset(family.program, grid, buf)
        assert rows == 3 * 4
        lines = buf.getvalue().splitlines()
        assert lines[0] == "app,kernel_id,bb_id,p0,count"
        assert len(lines) == 1 + rows

    def test_record_count_trilinear_4x4x4(self):
        family = family_by_name("trilinear")
        grid = grid_from_counts(family.program.params, [4, 4, 4])
        buf = io.StringIO()
        rows = generate_dataset(family.program, grid, buf)
        assert rows == 64 * 5 == 320

    def test_rows_match_interpreter(self):
        family = family_by_name("bilinear")
        grid = GridSpec(((2, 5), (3, 4)))
        buf = io.StringIO()
        generate_dataset(family.program, grid, buf)
        buf.seek(0)
        header = next(buf)
        seen = {}
        for line in buf:
            app, k, b, p0, p1, count = line.strip().split(",")
            seen[(int(p0), int(p1), int(k), int(b))] = int(count)
        for assignment in itertools.product((2, 5), (3, 4)):
            oracle = family.oracle(assignment)
            for (k, b), count in oracle.items():
                assert seen[(*assignment, k, b)] == count

    def test_lf_line_endings(self, tmp_path):
        family = family_by_name("linear")
        out = tmp_path / "t.csv"
        generate_dataset(family.program, GridSpec(((1, 2),)), out)
        raw = out.read_bytes()
        assert b"\r" not in raw
        assert raw.endswith(b"\n")

    def test_grid_outside_program_range_rejected(self):
        family = family_by_name("linear")
        with pytest.raises(GridSpecError):
            generate_dataset(family.program, GridSpec(((0, 1),)), io.StringIO())
