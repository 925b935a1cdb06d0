"""Tests for risks, p, the correction term, CD and bound probabilities."""

import math

import numpy as np
import pytest
from pydantic import ValidationError

from cdtoolkit.data import corrupt_half, make_blobs
from cdtoolkit.measure import (
    alpha_bound_probability,
    bound_probability,
    confidence_dimension,
    correction_term,
    empirical_risk,
    estimate_p,
    estimate_p_sup_difference,
    hoeffding_probability,
    measure_run,
    performance_change_rate,
    vc_scale,
)
from cdtoolkit.models import EpochRisk, TrainRun, VCScaleConfig, Verdict


def _run(sums: list[float], m: int = 100, final_err: float = 0.25) -> TrainRun:
    """Run whose epoch sums v1 + v2 are the given values, split evenly."""
    return TrainRun(
        epoch_risks=[EpochRisk(v1=s / 2, v2=s / 2) for s in sums],
        final_err=final_err,
        m=m,
        model_id="mlp",
        setting_id="blobs/sgd",
        seed=3,
    )


class TestEmpiricalRisk:
    """Tests for empirical_risk."""

    def test_identical(self):
        """Test identical sequences have zero risk."""
        assert empirical_risk([0, 1, 2], [0, 1, 2]) == 0.0

    def test_disjoint(self):
        """Test fully disjoint sequences have risk one."""
        assert empirical_risk([0, 0, 0], [1, 1, 1]) == 1.0

    def test_counting(self):
        """Test 2 mismatches out of 4."""
        assert empirical_risk([0, 1, 1, 0], [0, 0, 1, 1]) == 0.5

    def test_length_mismatch(self):
        """Test sequences of different length are rejected."""
        with pytest.raises(ValueError, match="equal length"):
            empirical_risk([0, 1], [0])

    def test_empty(self):
        """Test empty sequences are rejected."""
        with pytest.raises(ValueError, match="must not be empty"):
            empirical_risk([], [])


class TestEstimateP:
    """Tests for estimate_p and its supremum form."""

    def test_min_then_halve(self):
        """Test p is half the smallest epoch sum."""
        assert estimate_p(_run([1.0, 0.6, 0.4, 0.5])) == pytest.approx(0.2)

    def test_memorizing_model(self):
        """Test a model that fits both halves has p = 0."""
        assert estimate_p(_run([1.0, 0.0])) == 0.0

    def test_constant_classifier_on_balanced_data(self):
        """Test a constant-output classifier on balanced binary data has p near 0.5."""
        ds = make_blobs(class_count=2, per_class=500, spread=0.3, seed=2)
        pair = corrupt_half(ds, seed=8)
        constant = np.zeros(pair.m, dtype=np.int64)
        risk = EpochRisk(
            v1=empirical_risk(constant, pair.half_one.labels),
            v2=empirical_risk(constant, pair.half_two.labels),
        )
        run = TrainRun(epoch_risks=[risk], final_err=0.5, m=pair.m)

        assert estimate_p(run) == pytest.approx(0.5, abs=0.05)

    def test_sup_difference(self):
        """Test the supremum form takes the best (1 - v1) - v2 over epochs."""
        run = TrainRun(
            epoch_risks=[EpochRisk(v1=0.9, v2=0.1), EpochRisk(v1=0.2, v2=0.3)],
            final_err=0.25,
            m=10,
        )
        assert estimate_p_sup_difference(run) == pytest.approx(0.5)

    def test_sup_difference_range(self):
        """Test the supremum form spans [-1, 1]."""
        worst = TrainRun(epoch_risks=[EpochRisk(v1=1.0, v2=1.0)], final_err=1.0, m=1)
        best = TrainRun(epoch_risks=[EpochRisk(v1=0.0, v2=0.0)], final_err=0.0, m=1)

        assert estimate_p_sup_difference(worst) == -1.0
        assert estimate_p_sup_difference(best) == 1.0


class TestCorrectionTerm:
    """Tests for correction_term."""

    def test_alpha_zero(self):
        """Test alpha = 0 gives zero for any err and m."""
        assert correction_term(0.7, 50, alpha=0.0) == 0.0

    def test_known_values(self):
        """Test sqrt(ln 2 / 1e4) and sqrt(ln 3)."""
        assert correction_term(0.0, 10_000) == pytest.approx(0.0083255, abs=5e-8)
        assert correction_term(1.0, 1) == pytest.approx(1.0481, abs=5e-5)

    def test_grid_laws(self):
        """Test delta decreases in m, increases in err, and vanishes for large m."""
        ms = [10**2, 10**3, 10**4, 10**5, 10**6]
        errs = [0.0, 0.25, 0.5, 0.75, 1.0]
        grid = [[correction_term(err, m) for err in errs] for m in ms]

        for i in range(len(ms) - 1):
            for j in range(len(errs)):
                assert grid[i + 1][j] < grid[i][j]
        for row in grid:
            assert all(a < b for a, b in zip(row, row[1:], strict=False))
        assert max(grid[-1]) < 0.0015

    def test_scales_linearly_with_alpha(self):
        """Test delta is proportional to alpha."""
        assert correction_term(0.3, 500, alpha=2.5) == pytest.approx(
            2.5 * correction_term(0.3, 500)
        )

    @pytest.mark.parametrize(
        ("err", "m", "alpha", "message"),
        [
            (1.5, 10, 1.0, "err"),
            (-0.1, 10, 1.0, "err"),
            (0.5, 0, 1.0, "m must"),
            (0.5, 10, -1.0, "alpha"),
        ],
    )
    def test_invalid_arguments(self, err: float, m: int, alpha: float, message: str):
        """Test out-of-range arguments raise ValueError."""
        with pytest.raises(ValueError, match=message):
            correction_term(err, m, alpha)


class TestConfidenceDimension:
    """Tests for confidence_dimension."""

    def test_zero(self):
        """Test (0, 0) gives 0."""
        assert confidence_dimension(0.0, 0.0) == 0.0

    def test_clamped(self):
        """Test p + delta above one is clamped."""
        assert confidence_dimension(0.9, 0.2) == 1.0

    def test_direct_evaluation(self):
        """Test (0.385, 0.0096) gives 0.3946."""
        assert confidence_dimension(0.385, 0.00960) == pytest.approx(0.39460)

    def test_negative_delta(self):
        """Test a negative delta is rejected."""
        with pytest.raises(ValueError, match="delta"):
            confidence_dimension(0.5, -0.1)

    def test_p_out_of_range(self):
        """Test p above one is rejected."""
        with pytest.raises(ValueError, match="p must lie"):
            confidence_dimension(1.2, 0.0)

    def test_p_not_finite(self):
        """Test a NaN p is rejected."""
        with pytest.raises(ValueError, match="p must lie"):
            confidence_dimension(float("nan"), 0.0)


class TestBoundProbabilities:
    """Tests for bound_probability and related floors."""

    def test_closed_form_endpoints(self):
        """Test 1 - 2^-4 and 1 - 3^-4 to five decimals."""
        assert round(bound_probability(0.0), 5) == 0.9375
        assert round(bound_probability(1.0), 5) == 0.98765

    def test_midpoint(self):
        """Test err = 0.5 gives 1 - 2.5^-4."""
        assert bound_probability(0.5) == pytest.approx(0.9744)

    def test_monotone_in_err(self):
        """Test the bound grows with err."""
        values = [bound_probability(e) for e in np.linspace(0, 1, 11)]
        assert all(a < b for a, b in zip(values, values[1:], strict=False))

    def test_out_of_range(self):
        """Test err outside [0, 1] is rejected."""
        with pytest.raises(ValueError, match="err"):
            bound_probability(1.01)

    def test_hoeffding_floor(self):
        """Test 1 - 2 exp(-2 m delta^2) at m = 100, delta = 0.1."""
        assert hoeffding_probability(100, 0.1) == pytest.approx(0.72933, abs=5e-6)

    def test_alpha_bound_differs_from_bound(self):
        """Test the alpha-substituted floor is its own quantity."""
        assert alpha_bound_probability(0.0) == pytest.approx(0.5)
        assert alpha_bound_probability(1.0, alpha=2.0) == pytest.approx(1 - 2 / 3**8)
        assert alpha_bound_probability(1.0) != pytest.approx(bound_probability(1.0))


class TestVCScale:
    """Tests for vc_scale."""

    def test_identity_constants(self):
        """Test eps = 0 and zeta = 1 return p."""
        assert vc_scale(0.37, 1000) == 0.37

    def test_zero_p(self):
        """Test p = 0 gives 0 for any constants."""
        assert vc_scale(0.0, 50, VCScaleConfig(zeta=3.0, eps=0.5)) == 0.0

    def test_direct_evaluation(self):
        """Test 0.5 * e at m = 8, eps = 1."""
        value = vc_scale(0.5, 8, VCScaleConfig(zeta=1.0, eps=1.0))
        assert value == pytest.approx(1.35914, abs=5e-6)

    def test_overflow(self):
        """Test a huge exponent raises OverflowError with the exponent in the message."""
        with pytest.raises(OverflowError, match="exponent"):
            vc_scale(0.5, 10**9, VCScaleConfig(eps=1.0))


class TestPerformanceChange:
    """Tests for performance_change_rate."""

    def test_classification_drop_detection_gain(self):
        """Test 65.9 -> 57.2 and 69.3 -> 72.0 favour the new model."""
        change = performance_change_rate(65.9, 57.2, 69.3, 72.0)

        assert change.rate_a * 100 == pytest.approx(-13.2, abs=0.1)
        assert change.rate_b * 100 == pytest.approx(3.9, abs=0.1)
        assert change.verdict == Verdict.NEW

    def test_both_gain(self):
        """Test 65.9 -> 69.5 and 69.3 -> 74.1 favour the new model."""
        change = performance_change_rate(65.9, 69.5, 69.3, 74.1)

        assert change.rate_a * 100 == pytest.approx(5.5, abs=0.1)
        assert change.rate_b * 100 == pytest.approx(6.9, abs=0.1)
        assert change.verdict == Verdict.NEW

    def test_tie(self):
        """Test unchanged values give a tie."""
        change = performance_change_rate(50.0, 50.0, 70.0, 70.0)

        assert change.rate_a == 0.0
        assert change.rate_b == 0.0
        assert change.verdict == Verdict.TIE

    def test_reference_better(self):
        """Test a larger change on task A keeps the reference."""
        assert performance_change_rate(50.0, 60.0, 70.0, 71.0).verdict == Verdict.REFERENCE

    def test_non_positive_reference(self):
        """Test a zero reference value is rejected."""
        with pytest.raises(ValueError, match="ref_a"):
            performance_change_rate(0.0, 1.0, 1.0, 1.0)


class TestMeasureRun:
    """Tests for measure_run."""

    def test_full_measurement(self):
        """Test p, delta, CD and bound come from the run."""
        run = _run([1.0, 0.8], m=400, final_err=0.4)
        measurement = measure_run(run, alpha=1.0, config_hash="abc")

        assert measurement.p == pytest.approx(0.4)
        assert measurement.delta == pytest.approx(math.sqrt(math.log(2.4) / 400))
        assert measurement.cd == pytest.approx(0.4 + measurement.delta)
        assert measurement.bound_prob == pytest.approx(1 - 2.4**-4)
        assert measurement.model_id == "mlp"
        assert measurement.setting_id == "blobs/sgd"
        assert measurement.config_hash == "abc"

    def test_run_requires_epochs(self):
        """Test a run without epochs is invalid."""
        with pytest.raises(ValidationError):
            TrainRun(epoch_risks=[], final_err=0.0, m=1)
