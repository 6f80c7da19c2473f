"""
Test cases for the tunneling formula, zeros and fits
"""

import numpy as np
import pytest

from src.core.errors import InsufficientDataError, PreconditionError
from src.models.schemas import GapNormalization
from src.services.splitting import SplittingCalculator, compare, fit_alpha0, fit_rate, observed_zeros


class TestPrediction:
    """Gap formula in log space"""

    def setup_method(self):
        self.hs = 1.0 / np.linspace(100.0, 1000.0, 200)

    def test_gap_below_envelope(self, ellipse_inputs):
        prediction = SplittingCalculator(ellipse_inputs).predict(self.hs)
        assert np.all(prediction.gap_formula <= prediction.envelope * (1 + 1e-12))
        assert np.all(prediction.phase_mod_2pi >= 0) and np.all(prediction.phase_mod_2pi < 2 * np.pi)

    def test_theorem_matches_closed_form(self, ellipse_inputs):
        calculator = SplittingCalculator(ellipse_inputs)
        theorem = calculator.predict(self.hs).log_gap
        closed = calculator.conjecture_gap(self.hs)
        finite = np.isfinite(theorem) & np.isfinite(closed)
        assert np.max(np.abs(np.expm1(closed[finite] - theorem[finite]))) <= 1e-10

    def test_flux_free_gap_is_envelope(self, ellipse_inputs):
        prediction = SplittingCalculator(ellipse_inputs).predict(self.hs, with_flux=False)
        assert np.allclose(prediction.gap_formula, prediction.envelope, rtol=1e-12)

    def test_normalizations(self, ellipse_inputs):
        calculator = SplittingCalculator(ellipse_inputs)
        physical = calculator.predict(self.hs, GapNormalization.PHYSICAL).gap_formula
        rescaled = calculator.predict(self.hs, GapNormalization.RESCALED).gap_formula
        effective = calculator.predict(self.hs, GapNormalization.EFFECTIVE).gap_formula
        assert np.allclose(physical, rescaled * self.hs, rtol=1e-12)
        assert np.allclose(physical, effective * self.hs ** 1.5, rtol=1e-12)

    def test_effective_gap_is_twice_w(self, ellipse_inputs):
        calculator = SplittingCalculator(ellipse_inputs)
        h = 1e-3
        gap = calculator.predict([h], GapNormalization.EFFECTIVE, with_flux=False).gap_formula[0]
        assert gap == pytest.approx(2 * calculator.w_effective(h).value, rel=1e-12)

    def test_rate_in_quartic_variable(self, ellipse_inputs):
        calculator = SplittingCalculator(ellipse_inputs)
        tiny = np.array([1e-9, 1e-8])
        logs = calculator.log_w_effective(tiny)
        secant = (logs[1] - logs[0]) / (tiny[1] ** -0.25 - tiny[0] ** -0.25)
        assert -secant == pytest.approx(ellipse_inputs.S, rel=5e-3)

    def test_underflow_stays_in_log_space(self, ellipse_inputs):
        log_w = SplittingCalculator(ellipse_inputs).log_w_effective(np.array([1e-12]))
        assert np.isfinite(log_w[0])
        assert log_w[0] < -700

    def test_w_tilde_phase(self, ellipse_inputs):
        calculator = SplittingCalculator(ellipse_inputs)
        h = 0.01
        w = calculator.w_tilde(h)
        expected = calculator.predict([h]).gap_formula[0] / 2
        assert w.value == pytest.approx(expected, rel=1e-12)

    def test_asymmetric_dominant_arc(self, ellipse_inputs):
        inputs = ellipse_inputs.model_copy(update={"S_d": ellipse_inputs.S_u * 1.2})
        prediction = SplittingCalculator(inputs).predict(self.hs)
        assert prediction.dominant_arc == "up"
        assert np.all(prediction.subdominant_ratio < 1)

    def test_invalid_h(self, ellipse_inputs):
        with pytest.raises(PreconditionError):
            SplittingCalculator(ellipse_inputs).predict([0.0, 0.1])
        with pytest.raises(PreconditionError):
            SplittingCalculator(ellipse_inputs).flux_phase(1.5)


class TestHarmonicLadder:
    def test_ladder_spacing(self, ellipse_inputs):
        levels = SplittingCalculator(ellipse_inputs).harmonic_levels(1e-3, 3, GapNormalization.EFFECTIVE)
        assert levels[1] == pytest.approx(3 * levels[0], rel=1e-12)
        assert levels[2] == pytest.approx(5 * levels[0], rel=1e-12)

    def test_rescaled_is_physical_over_h(self, ellipse_inputs):
        calculator = SplittingCalculator(ellipse_inputs)
        physical = calculator.harmonic_levels(0.01, 2, GapNormalization.PHYSICAL)
        rescaled = calculator.harmonic_levels(0.01, 2, GapNormalization.RESCALED)
        assert np.allclose(physical, 0.01 * rescaled, rtol=1e-12)

    def test_level_count_bounds(self, ellipse_inputs):
        with pytest.raises(PreconditionError):
            SplittingCalculator(ellipse_inputs).harmonic_levels(0.01, 4)


class TestZeros:
    """Predicted and observed zeros of the oscillating gap"""

    def setup_method(self):
        self.inv_h = np.linspace(100.0, 110.0, 2001)
        self.hs = 1.0 / self.inv_h

    def test_spacing(self, ellipse_inputs):
        zeros = SplittingCalculator(ellipse_inputs).predicted_zeros(100.0, 110.0)
        spacing = np.pi / (ellipse_inputs.L * ellipse_inputs.gamma0)
        assert zeros.size >= 5
        assert np.mean(np.diff(zeros)) == pytest.approx(spacing, rel=0.1)

    def test_zeros_across_stationary_phase(self, ellipse_inputs):
        # small gamma0 puts the minimum of the phase inside the window
        inputs = ellipse_inputs.model_copy(update={"gamma0": 0.05})
        turn = (inputs.xi0 / (2.0 * inputs.gamma0)) ** 2
        assert 20.0 < turn < 120.0
        zeros = SplittingCalculator(inputs).predicted_zeros(20.0, 120.0)

        u = np.linspace(20.0, 120.0, 200001)
        values = np.cos(inputs.L * (inputs.gamma0 * u - inputs.xi0 * np.sqrt(u) - inputs.alpha0))
        crossings = u[:-1][np.sign(values[:-1]) != np.sign(values[1:])]
        assert zeros.size == crossings.size
        assert np.allclose(zeros, crossings, atol=1e-3)
        assert np.all(np.diff(zeros) > 0)

    def test_alpha0_period_invariance(self, ellipse_inputs):
        period = np.pi / ellipse_inputs.L
        base = SplittingCalculator(ellipse_inputs.with_alpha0(0.1)).predicted_zeros(100.0, 110.0)
        shifted = SplittingCalculator(ellipse_inputs.with_alpha0(0.1 + period)).predicted_zeros(100.0, 110.0)
        assert np.allclose(base, shifted, atol=1e-8)

    def test_observed_zeros_on_formula(self, ellipse_inputs):
        calculator = SplittingCalculator(ellipse_inputs)
        prediction = calculator.predict(self.hs)
        observed = observed_zeros(self.hs, prediction.gap_formula, prediction.envelope)
        predicted = calculator.predicted_zeros(100.0, 110.0)
        step = self.inv_h[1] - self.inv_h[0]
        interior = predicted[(predicted > 100.0 + 3 * step) & (predicted < 110.0 - 3 * step)]
        assert len(observed) >= len(interior)
        for z in interior:
            assert np.min(np.abs(observed - z)) <= step


class TestFits:
    def test_fit_alpha0_recovers_shift(self, ellipse_inputs):
        hs = 1.0 / np.linspace(100.0, 110.0, 400)
        truth = 0.1
        gaps = SplittingCalculator(ellipse_inputs.with_alpha0(truth)).predict(hs).gap_formula * 1.7
        fit = fit_alpha0(hs, gaps, ellipse_inputs)
        assert fit.alpha0 == pytest.approx(truth, abs=1e-6)
        assert fit.log_scale == pytest.approx(np.log(1.7), abs=1e-6)
        assert fit.n_zeros >= 3

    def test_fit_alpha0_needs_zeros(self, ellipse_inputs):
        hs = 1.0 / np.linspace(100.0, 100.5, 20)
        gaps = SplittingCalculator(ellipse_inputs).predict(hs).gap_formula
        with pytest.raises(InsufficientDataError):
            fit_alpha0(hs, gaps, ellipse_inputs)

    def test_fit_rate_exact(self, ellipse_inputs):
        calculator = SplittingCalculator(ellipse_inputs)
        hs = (ellipse_inputs.S / np.linspace(10.0, 22.0, 13)) ** 4
        gaps = calculator.predict(hs, GapNormalization.EFFECTIVE, with_flux=False).gap_formula
        rate, linear = fit_rate(hs, gaps, GapNormalization.EFFECTIVE.prefactor_power)
        assert rate == pytest.approx(ellipse_inputs.S, rel=1e-8)
        assert linear == pytest.approx(ellipse_inputs.S, rel=1e-8)

    def test_compare_against_itself(self, ellipse_inputs):
        hs = 1.0 / np.linspace(100.0, 1000.0, 50)
        prediction = SplittingCalculator(ellipse_inputs).predict(hs, with_flux=False)
        report = compare(hs, prediction.gap_formula, prediction, ellipse_inputs)
        assert report.max_log_rel_err <= 1e-12
        assert report.rate_rel_err <= 1e-8

    def test_compare_requires_shared_grid(self, ellipse_inputs):
        hs = 1.0 / np.linspace(100.0, 1000.0, 50)
        prediction = SplittingCalculator(ellipse_inputs).predict(hs)
        with pytest.raises(PreconditionError):
            compare(hs[:-1], prediction.gap_formula[:-1], prediction)
