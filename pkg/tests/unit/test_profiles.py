import logging
import math

import numpy as np
import pytest

from gridopt.errors import BenchError, EmptyRecordSet, IoFailure, UnknownMetric
from gridopt.profiles import (
    RunRecord,
    compute_profile,
    default_alphas,
    emit_profile,
    emit_records,
    read_records,
    statistic_matrix,
    validate_objectives,
    write_artifact,
)


def _record(solver, problem, iters=None, success=True, objective=None, time_s=1.0, memory=1024):
    metrics = {"time": time_s, "iters": float(iters if iters is not None else 10), "memory": float(memory)}
    return RunRecord(solver, problem, metrics, success=success and iters != math.inf, objective=objective)


@pytest.fixture
def oracle_records():
    """Iteration counts [[2, 4], [1, 8], [fail, 3]] for problems s1..s3 and solvers m1, m2."""
    table = {"s1": (2, 4), "s2": (1, 8), "s3": (math.inf, 3)}
    records = []
    for problem, (a, b) in table.items():
        records.append(_record("m1", problem, a))
        records.append(_record("m2", problem, b))
    return records


class TestRunRecord:
    def test_failed_statistic_is_infinite(self):
        assert _record("m", "s", 5, success=False).statistic("iters") == math.inf

    def test_missing_metric_is_infinite(self):
        assert RunRecord("m", "s", {}, success=True).statistic("time") == math.inf

    def test_zero_lifted_to_positive(self):
        value = _record("m", "s", 0).statistic("iters")
        assert 0.0 < value < 1e-300


class TestComputeProfile:
    """Test performance profile values."""

    def test_oracle(self, oracle_records):
        curves = {c.solver_id: c for c in compute_profile(oracle_records, "iters", [1.0, 2.0, 8.0])}
        np.testing.assert_allclose(curves["m1"].values, [2 / 3, 2 / 3, 2 / 3])
        np.testing.assert_allclose(curves["m2"].values, [1 / 3, 2 / 3, 1.0])

    def test_ratio_boundary_is_inclusive(self, oracle_records):
        curves = {c.solver_id: c for c in compute_profile(oracle_records, "iters", [7.999, 8.0])}
        np.testing.assert_allclose(curves["m2"].values, [2 / 3, 1.0])

    def test_single_solver_is_one_everywhere(self):
        records = [_record("only", f"s{i}", i + 1) for i in range(4)]
        (curve,) = compute_profile(records, "iters")
        np.testing.assert_array_equal(curve.values, 1.0)

    def test_always_failing_solver_is_zero(self):
        records = [_record("good", "s1", 3), _record("bad", "s1", 3, success=False)]
        curves = {c.solver_id: c for c in compute_profile(records, "iters")}
        np.testing.assert_array_equal(curves["bad"].values, 0.0)
        assert curves["good"].final_value == 1.0

    def test_unsolved_problem_counts_in_denominator(self):
        records = [
            _record("a", "s1", 3),
            _record("b", "s1", 6),
            _record("a", "s2", 3, success=False),
            _record("b", "s2", 3, success=False),
        ]
        curves = {c.solver_id: c for c in compute_profile(records, "iters", [1.0, 2.0])}
        np.testing.assert_allclose(curves["a"].values, [0.5, 0.5])
        np.testing.assert_allclose(curves["b"].values, [0.0, 0.5])

    def test_missing_pair_is_a_failure(self):
        records = [_record("a", "s1", 1), _record("a", "s2", 1), _record("b", "s1", 1)]
        curves = {c.solver_id: c for c in compute_profile(records, "iters", [1.0])}
        assert curves["b"].values[0] == 0.5

    def test_sorted_by_solver(self, oracle_records):
        assert [c.solver_id for c in compute_profile(oracle_records[::-1], "time")] == ["m1", "m2"]

    def test_default_grids(self):
        assert default_alphas("time")[[0, -1]].tolist() == pytest.approx([1.0, 10.0])
        assert default_alphas("iters")[-1] == pytest.approx(8.0)
        assert len(default_alphas("memory")) == 200

    def test_empty(self):
        with pytest.raises(EmptyRecordSet):
            compute_profile([], "time")

    def test_unknown_metric(self, oracle_records):
        with pytest.raises(UnknownMetric):
            compute_profile(oracle_records, "energy")

    @pytest.mark.parametrize("alphas", [[], [0.5, 1.0], [2.0, 1.0]])
    def test_invalid_grid(self, oracle_records, alphas):
        with pytest.raises(BenchError):
            compute_profile(oracle_records, "iters", alphas)

    def test_duplicate_run(self):
        with pytest.raises(BenchError, match="Duplicate"):
            statistic_matrix([_record("a", "s1"), _record("a", "s1")], "iters")

    def test_unsolved_logged(self, caplog):
        with caplog.at_level(logging.DEBUG, logger="gridopt.profiles"):
            compute_profile([_record("a", "s1", success=False)], "iters")
        assert "not solved by any solver" in caplog.text


class TestRecordCsv:
    """Test the CSV form of run records and profiles."""

    def test_header_and_sorting(self):
        text = emit_records([_record("b", "s1", 4), _record("a", "s2", 7, objective=5296.686)])
        lines = text.splitlines()
        assert lines[0] == "solver_id,problem_id,success,time_s,iters,memory_bytes,objective"
        assert lines[1] == "a,s2,true,1.0,7,1024,5296.686"
        assert lines[2] == "b,s1,true,1.0,4,1024,"

    def test_read_back(self, oracle_records):
        again = read_records(emit_records(oracle_records))
        assert [(r.solver_id, r.problem_id, r.success) for r in again] == sorted(
            (r.solver_id, r.problem_id, r.success) for r in oracle_records
        )
        assert again[0].metrics["iters"] == 2.0
        assert again[0].objective is None

    def test_quoted_identifiers(self):
        rec = _record("polar,power", 'case "9"', 3)
        (again,) = read_records(emit_records([rec]))
        assert (again.solver_id, again.problem_id) == (rec.solver_id, rec.problem_id)

    def test_missing_columns(self):
        with pytest.raises(BenchError, match="lack columns"):
            read_records("solver_id,problem_id\na,b\n")

    def test_bad_number(self):
        text = "solver_id,problem_id,success,time_s,iters,memory_bytes,objective\na,b,true,fast,1,1,\n"
        with pytest.raises(BenchError, match="line 2"):
            read_records(text)

    def test_no_rows(self):
        with pytest.raises(EmptyRecordSet):
            read_records("solver_id,problem_id,success,time_s,iters,memory_bytes,objective\n")

    def test_emit_empty(self):
        with pytest.raises(EmptyRecordSet):
            emit_records([])

    def test_profile_rows(self, oracle_records):
        text = emit_profile(compute_profile(oracle_records, "iters", [1.0, 2.0]))
        lines = text.splitlines()
        assert lines[0] == "solver_id,alpha,p"
        assert len(lines) == 1 + 2 * 2
        assert lines[1].startswith("m1,1.0,0.666")


class TestArtifacts:
    def test_write_text(self, tmp_path):
        path = write_artifact(tmp_path / "records.csv", "a\n")
        assert path.read_text() == "a\n"

    def test_write_bytes(self, tmp_path):
        assert write_artifact(tmp_path / "p.png", b"\x89PNG").read_bytes() == b"\x89PNG"

    def test_missing_directory(self, tmp_path):
        with pytest.raises(IoFailure):
            write_artifact(tmp_path / "missing" / "records.csv", "x")


class TestValidateObjectives:
    def test_agreeing(self):
        records = [_record("a", "s1", objective=100.0), _record("b", "s1", objective=100.0000001)]
        assert validate_objectives(records) == []

    def test_disagreeing(self):
        records = [_record("a", "s1", objective=100.0), _record("b", "s1", objective=101.0)]
        ((problem, first, second, rel),) = validate_objectives(records)
        assert (problem, first, second) == ("s1", "a", "b")
        assert rel == pytest.approx(1 / 101)

    def test_failures_ignored(self):
        records = [_record("a", "s1", objective=100.0), _record("b", "s1", success=False, objective=5.0)]
        assert validate_objectives(records) == []
