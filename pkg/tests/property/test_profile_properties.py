import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from gridopt.profiles import RunRecord, compute_profile

statistics = st.one_of(st.floats(min_value=1e-3, max_value=1e3), st.just(math.inf))


@st.composite
def record_sets(draw):
    n_solvers = draw(st.integers(min_value=1, max_value=4))
    n_problems = draw(st.integers(min_value=1, max_value=6))
    records = []
    for m in range(n_solvers):
        for s in range(n_problems):
            value = draw(statistics)
            records.append(
                RunRecord(f"m{m}", f"s{s}", {"time": value, "iters": value, "memory": value}, math.isfinite(value))
            )
    return records


class TestProfileProperties:
    """Property-based tests for performance profiles."""

    @settings(max_examples=1000, deadline=None)
    @given(records=record_sets())
    def test_monotone_and_bounded(self, records):
        for curve in compute_profile(records, "time"):
            assert np.all(np.diff(curve.values) >= 0)
            assert np.all((curve.values >= 0) & (curve.values <= 1))

    @settings(max_examples=1000, deadline=None)
    @given(records=record_sets())
    def test_winners_cover_solved_problems(self, records):
        """At alpha = 1 every problem solved by anyone is counted for at least one solver."""
        curves = compute_profile(records, "time", [1.0])
        n_problems = len({r.problem_id for r in records})
        solved = len({r.problem_id for r in records if r.success})
        assert sum(c.values[0] for c in curves) * n_problems >= solved - 1e-9

    @settings(max_examples=1000, deadline=None)
    @given(records=record_sets(), exponent=st.integers(min_value=-10, max_value=10))
    def test_scale_invariant(self, records, exponent):
        """Scaling every statistic by a power of two leaves the profiles unchanged."""
        factor = 2.0**exponent
        scaled = [
            RunRecord(r.solver_id, r.problem_id, {k: v * factor for k, v in r.metrics.items()}, r.success)
            for r in records
        ]
        for a, b in zip(compute_profile(records, "time"), compute_profile(scaled, "time")):
            np.testing.assert_array_equal(a.values, b.values)

    @settings(max_examples=1000, deadline=None)
    @given(records=record_sets())
    def test_final_value_is_solved_fraction_at_large_alpha(self, records):
        n_problems = len({r.problem_id for r in records})
        for curve in compute_profile(records, "time", [1.0, 1e7]):
            solved = sum(r.success for r in records if r.solver_id == curve.solver_id)
            assert curve.final_value == solved / n_problems
