"""
Tests for R², NED, automated recovery and aggregation helpers.
"""

import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from benchmarks import get_benchmark
from expression import parse_prefix
from metrics import (
    DEGENERATE,
    MetricReport,
    extrapolation_r2,
    is_degenerate,
    is_recovered,
    isotonic_trend,
    ned,
    r2_value,
    r_squared,
    summarize,
)


class TestRSquared:
    """Tests for r_squared."""

    def test_perfect_fit(self):
        """y_hat == y gives 1."""
        y = np.array([1.0, 2.0, 3.0])
        assert r_squared(y, y) == 1.0

    def test_mean_prediction(self):
        """Predicting the mean gives 0."""
        y = np.array([1.0, 2.0, 3.0])
        assert r_squared(y, np.full(3, 2.0)) == pytest.approx(0.0)

    def test_worked_example(self):
        """SS_res = 1, SS_tot = 5."""
        assert r_squared([1, 2, 3, 4], [1, 2, 3, 5]) == pytest.approx(0.8)

    def test_can_be_negative(self):
        """Worse than the mean is below zero."""
        assert r_squared([1.0, 2.0, 3.0], [3.0, 2.0, 1.0]) < 0.0

    @pytest.mark.parametrize("y", [[2.0, 2.0, 2.0], [5.0]])
    def test_degenerate(self, y):
        """Constant or single-point targets have no R²."""
        result = r_squared(y, np.zeros(len(y)))
        assert result is DEGENERATE
        assert is_degenerate(result)
        assert r2_value(result) is None
        assert repr(result) == "DEGENERATE"

    def test_non_finite_prediction(self):
        """An infinite residual maps to the most negative float."""
        result = r_squared([1.0, 2.0], [np.inf, 0.0])
        assert result == -np.finfo(np.float64).max

    def test_length_mismatch(self):
        """Shapes must agree."""
        with pytest.raises(ValueError):
            r_squared([1.0, 2.0], [1.0])


class TestNed:
    """Tests for the normalized edit distance."""

    def test_identical(self):
        """Same tree, distance 0."""
        expr = parse_prefix("+ sin x1 x2", 2)
        assert ned(expr, expr) == 0.0

    def test_constants_are_masked(self):
        """Different affine constants do not count."""
        a = parse_prefix("* affine 2.0 0.5 x1 x2", 2)
        b = parse_prefix("* x1 affine -3.0 1.0 x2", 2)
        assert ned(a, b) == 0.0

    def test_one_relabel(self):
        """One relabel over a three-node truth."""
        assert ned(parse_prefix("+ x1 x1", 1), parse_prefix("* x1 x1", 1)) == pytest.approx(1 / 3)

    def test_variables_stay_distinct(self):
        """x1 and x2 are different labels."""
        assert ned(parse_prefix("x1", 2), parse_prefix("x2", 2)) == 1.0

    def test_capped_at_one(self):
        """Large predictions saturate at 1."""
        pred = parse_prefix("+ * x1 x1 - sin x1 cos x1", 1)
        assert ned(pred, parse_prefix("x1", 1)) == 1.0


class TestIsRecovered:
    """Tests for the automated recovery check."""

    def test_identical_structure(self):
        """Matching masked trees count as recovered."""
        entry = get_benchmark("Nguyen-8")
        assert is_recovered(entry.expression, entry.expression, entry.spec)

    def test_equivalent_form(self):
        """exp(0.5 * log x) is sqrt(x) on positive inputs."""
        entry = get_benchmark("Nguyen-8")
        pred = parse_prefix("exp affine 0.5 0.0 log x1", 1)
        assert is_recovered(pred, entry.expression, entry.spec)

    def test_wrong_expression(self):
        """x1 is not sqrt(x1)."""
        entry = get_benchmark("Nguyen-8")
        assert not is_recovered(parse_prefix("x1", 1), entry.expression, entry.spec)

    def test_bloated_equivalent(self):
        """An exact but much larger form does not count."""
        entry = get_benchmark("Nguyen-8")
        pred = parse_prefix("+ sqrt x1 - x1 x1", 1)
        assert not is_recovered(pred, entry.expression, entry.spec)


class TestSummaries:
    """Tests for summarize, isotonic_trend and MetricReport."""

    def test_summarize(self):
        """Mean and sample standard deviation."""
        mean, std, n = summarize([1.0, 2.0, 3.0])
        assert (mean, n) == (2.0, 3)
        assert std == pytest.approx(1.0)

    def test_summarize_skips_missing(self):
        """None and degenerate markers are not values."""
        assert summarize([0.5, None, DEGENERATE]) == (0.5, 0.0, 1)
        assert summarize([None]) == (None, None, 0)

    def test_isotonic_non_increasing(self):
        """A rise gets pooled; the raw rise is reported."""
        fitted, rise = isotonic_trend([0.0, 0.01, 0.02], [0.9, 0.95, 0.8])
        np.testing.assert_allclose(fitted, [0.925, 0.925, 0.8])
        assert rise == pytest.approx(0.05)

    def test_isotonic_already_monotone(self):
        """A falling curve is its own fit with no rise."""
        values = [0.99, 0.97, 0.9, 0.85]
        fitted, rise = isotonic_trend([0.0, 0.02, 0.04, 0.06], values)
        np.testing.assert_allclose(fitted, values)
        assert rise == 0.0

    def test_metric_report_to_dict(self):
        """Degenerate R² serialises as None."""
        report = MetricReport(DEGENERATE, 0.0, 0.0, 3, 2, True)
        data = report.to_dict()
        assert data["r2"] is None
        assert data["recovered"] is True
        assert data["node_count"] == 3


class TestExtrapolation:
    """Tests for extrapolation_r2."""

    def test_truth_extrapolates_perfectly(self):
        """The true formula scores 1 on a wider interval."""
        entry = get_benchmark("Nguyen-1")
        assert extrapolation_r2(entry.expression, entry, -2.0, 2.0, seed=0) == pytest.approx(1.0)

    def test_local_fit_degrades(self):
        """x1 alone fits Nguyen-1 worse far from the training range."""
        entry = get_benchmark("Nguyen-1")
        near = extrapolation_r2(parse_prefix("x1", 1), entry, -0.2, 0.2, seed=0)
        far = extrapolation_r2(parse_prefix("x1", 1), entry, -3.0, 3.0, seed=0)
        assert far < near
