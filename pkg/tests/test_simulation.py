"""
Unit tests for the frailty data generator and its calibration.
"""

import math

import numpy as np
import pytest

from src.core.simulation import (
    FrailtyModel,
    alpha_for_correlation,
    apply_censoring,
    calibrate_alpha,
    calibrate_tau,
    closed_form_survival,
    frailty_correlation,
    sample_pairs,
    simulate_dataset,
    synthetic_trial_dataset,
    true_survival,
)
from src.data.models import Dataset
from src.utils.exceptions import CalibrationError, SimulationError


class TestFrailtyModel:
    """Tests for FrailtyModel and the paired-time sampler."""

    @pytest.mark.parametrize(
        "field,value", [("sigma", 0.0), ("ratio_median", -1.0), ("sigma", math.inf)]
    )
    def test_invalid_parameters(self, field: str, value: float) -> None:
        """Test nonpositive or infinite parameters are rejected."""
        kwargs = {"sigma": 0.5, "ratio_median": 1.0, field: value}
        with pytest.raises(SimulationError):
            FrailtyModel(**kwargs)

    def test_alpha_required_for_sampling(self) -> None:
        """Test sampling an uncalibrated model raises."""
        with pytest.raises(SimulationError):
            sample_pairs(FrailtyModel(sigma=0.5), 10, np.random.default_rng(0))

    def test_shape_is_reciprocal_sigma(self) -> None:
        """Test the Weibull shape is 1/sigma."""
        assert FrailtyModel(sigma=0.25).shape == 4.0

    def test_t0_median_without_frailty(self) -> None:
        """Test the t0 median is e^mu (log 2)^sigma when theta is close to 1."""
        model = FrailtyModel(sigma=0.5, mu=3.0, alpha=1e8)
        t0, _ = sample_pairs(model, 400_000, np.random.default_rng(1))
        assert np.median(t0) == pytest.approx(16.72, abs=0.1)

    def test_equal_medians_give_even_odds(self) -> None:
        """Test P(t1 > t0) is about 0.5 when R = 1."""
        model = FrailtyModel(sigma=0.3, ratio_median=1.0, alpha=8.0)
        t0, t1 = sample_pairs(model, 200_000, np.random.default_rng(2))
        assert np.mean(t1 > t0) == pytest.approx(0.5, abs=0.005)

    def test_sampled_correlation_matches_formula(self) -> None:
        """Test the empirical Pearson correlation against the exact expression."""
        model = FrailtyModel(sigma=0.5, alpha=3.0)
        t0, t1 = sample_pairs(model, 400_000, np.random.default_rng(3))
        expected = frailty_correlation(0.5, 3.0)
        assert np.corrcoef(t0, t1)[0, 1] == pytest.approx(expected, abs=0.01)


class TestCensoring:
    """Tests for apply_censoring and simulate_dataset."""

    def test_tiny_horizon_censors_everything(self) -> None:
        """Test a horizon far below the event times censors every subject."""
        model = FrailtyModel(sigma=0.5, alpha=5.0)
        data = simulate_dataset(model, 1e-6, 200, np.random.default_rng(4))
        assert data.censoring_rate == pytest.approx(1.0)

    def test_follow_up_never_exceeds_horizon(self) -> None:
        """Test y1 = min(t1, C1) with C1 <= tau and t0 left untouched."""
        rng = np.random.default_rng(5)
        t0 = rng.uniform(1, 10, 500)
        t1 = rng.uniform(1, 30, 500)
        data = apply_censoring(t0, t1, 20.0, rng)
        arrays = data.arrays
        np.testing.assert_array_equal(arrays.t0, t0)
        assert np.all(arrays.y1 <= 20.0)
        assert np.all(arrays.y1 <= t1)
        np.testing.assert_array_equal(arrays.y1[arrays.delta == 1], t1[arrays.delta == 1])
        assert np.all(arrays.y1[arrays.delta == 0] >= 0.85 * 20.0)

    def test_invalid_horizon(self) -> None:
        """Test tau must be positive."""
        with pytest.raises(SimulationError):
            apply_censoring(np.ones(2), np.ones(2), 0.0, np.random.default_rng(0))

    def test_same_generator_state_same_dataset(self) -> None:
        """Test datasets are reproducible from the seed."""
        model = FrailtyModel(sigma=0.3, alpha=8.0)
        first = simulate_dataset(model, 40.0, 50, np.random.default_rng(6))
        second = simulate_dataset(model, 40.0, 50, np.random.default_rng(6))
        assert first == second


class TestTrueSurvival:
    """Tests for the Monte Carlo and closed-form GMI survival."""

    def test_closed_form_at_median_ratio(self) -> None:
        """Test S_G(R) = 0.5 for any sigma."""
        for sigma in (0.3, 0.5, 1.0):
            model = FrailtyModel(sigma=sigma, ratio_median=1.3, alpha=2.0)
            assert closed_form_survival(model, 1.3) == pytest.approx(0.5)

    def test_closed_form_matches_monte_carlo(self) -> None:
        """Test the frailty cancels: simulation agrees with the closed form."""
        model = FrailtyModel(sigma=0.5, ratio_median=1.3, alpha=2.5)
        r = np.array([1.0, 1.3, 1.5, 1.7])
        mc = true_survival(model, r, draws=300_000, seed=11)
        np.testing.assert_allclose(mc, closed_form_survival(model, r), atol=0.005)

    def test_monte_carlo_is_deterministic(self) -> None:
        """Test a fixed seed gives the same truth."""
        model = FrailtyModel(sigma=0.3, alpha=8.0)
        assert true_survival(model, 1.5, draws=50_000, seed=1) == true_survival(
            model, 1.5, draws=50_000, seed=1
        )

    def test_scalar_and_array_forms(self) -> None:
        """Test a scalar threshold returns a float."""
        model = FrailtyModel(sigma=0.3, alpha=8.0)
        assert isinstance(closed_form_survival(model, 1.5), float)
        assert isinstance(true_survival(model, 1.5, draws=10_000), float)
        assert true_survival(model, [1.3, 1.5], draws=10_000).shape == (2,)


class TestCalibration:
    """Tests for calibrate_alpha, calibrate_tau and the exact correlation."""

    def test_alpha_reference_values(self) -> None:
        """Test the exact inversion at sigma = 0.3."""
        assert alpha_for_correlation(0.3, 0.5) == pytest.approx(8.15, abs=0.02)
        assert alpha_for_correlation(0.3, 0.3) == pytest.approx(20.4, abs=0.1)

    def test_exact_inversion(self) -> None:
        """Test frailty_correlation inverts alpha_for_correlation."""
        alpha = alpha_for_correlation(0.5, 0.4)
        assert frailty_correlation(0.5, alpha) == pytest.approx(0.4, abs=1e-12)

    def test_unreachable_correlation(self) -> None:
        """Test correlations above the sigma ceiling are rejected."""
        with pytest.raises(CalibrationError) as exc_info:
            alpha_for_correlation(0.3, 0.95)
        assert exc_info.value.details["parameter"] == "alpha"

    def test_calibrate_alpha_hits_target(self) -> None:
        """Test the calibrated alpha reproduces the correlation."""
        model = FrailtyModel(sigma=0.3)
        result = calibrate_alpha(model, 0.5, samples=100_000)
        assert abs(result.achieved - 0.5) < 0.005
        assert frailty_correlation(0.3, result.value) == pytest.approx(0.5, abs=0.03)

    def test_calibrate_alpha_trace_is_monotone(self) -> None:
        """Test the correlation falls as alpha grows along the trace."""
        result = calibrate_alpha(FrailtyModel(sigma=0.5), 0.4, samples=50_000)
        ordered = sorted(result.trace)
        achieved = [corr for _, corr in ordered]
        assert all(a >= b for a, b in zip(achieved, achieved[1:]))

    def test_stronger_correlation_needs_smaller_alpha(self) -> None:
        """Test alpha(0.5) < alpha(0.3)."""
        model = FrailtyModel(sigma=0.3)
        strong = calibrate_alpha(model, 0.5, samples=50_000).value
        weak = calibrate_alpha(model, 0.3, samples=50_000).value
        assert strong < weak

    @pytest.mark.parametrize("target", [0.0, 1.0, 0.99])
    def test_calibrate_alpha_out_of_range(self, target: float) -> None:
        """Test invalid or unreachable targets raise."""
        with pytest.raises(CalibrationError):
            calibrate_alpha(FrailtyModel(sigma=0.3), target, samples=20_000)

    def test_calibrate_tau_hits_target(self) -> None:
        """Test the calibrated horizon gives the censoring rate on fresh data."""
        model = FrailtyModel(sigma=0.5, ratio_median=1.3, alpha=alpha_for_correlation(0.5, 0.5))
        result = calibrate_tau(model, 0.3, samples=100_000)
        assert abs(result.achieved - 0.3) < 0.002
        data = simulate_dataset(model, result.value, 100_000, np.random.default_rng(99))
        assert data.censoring_rate == pytest.approx(0.3, abs=0.01)

    def test_calibrate_tau_invalid_target(self) -> None:
        """Test a censoring rate outside (0, 1) is rejected."""
        with pytest.raises(CalibrationError):
            calibrate_tau(FrailtyModel(sigma=0.5, alpha=2.0), 1.2)


class TestSyntheticTrial:
    """Tests for the trial-sized synthetic dataset."""

    def test_size_and_source(self, trial_dataset: Dataset) -> None:
        """Test 34 records with a synthetic source tag."""
        assert trial_dataset.n == 34
        assert trial_dataset.source == "synthetic(seed=2012)"

    def test_reproducible(self, trial_dataset: Dataset) -> None:
        """Test the default seed always gives the same records."""
        assert synthetic_trial_dataset() == trial_dataset

    def test_has_events_and_censoring(self, trial_dataset: Dataset) -> None:
        """Test both outcomes occur."""
        assert 0 < trial_dataset.n_censored < trial_dataset.n
