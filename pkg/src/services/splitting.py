"""
Closed-form tunneling predictions and their comparison with numerical gaps
"""

import logging
from typing import List, Optional

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from src.core.errors import InsufficientDataError, PreconditionError
from src.models.schemas import (
    Alpha0Fit, ComparisonReport, GapNormalization, LogMagnitude, SplittingInputs, SplittingPrediction
)
from src.utils.numerics import local_minima

logger = logging.getLogger(__name__)

ZERO_EXCLUSION = 0.05
ZERO_DEPTH = 0.3
ALPHA_GRID = 400


def _check_h(h):
    h = np.asarray(h, dtype=float)
    if np.any((h <= 0.0) | (h >= 1.0)):
        raise PreconditionError("h must lie in (0, 1)")
    return h


class SplittingCalculator:
    """Evaluates the interaction terms in log space for one set of inputs"""

    def __init__(self, inputs: SplittingInputs):
        self.inputs = inputs

    def flux_phase(self, h) -> np.ndarray:
        """L f(h) with f(h) = gamma0/h - xi0/h^{1/2} - alpha0"""
        p = self.inputs
        h = _check_h(h)
        return p.L * (p.gamma0 / h - p.xi0 / np.sqrt(h) - p.alpha0)

    def _log_terms(self, h):
        """log of the up and down interaction terms of the effective operator"""
        p = self.inputs
        h = _check_h(h)
        common = (np.log(p.mu2) + 0.125 * np.log(h) - 0.5 * np.log(np.pi) + 0.5 * np.log(p.g))
        quartic = h ** 0.25
        log_up = common + np.log(p.A_u) + 0.5 * np.log(p.V0) - p.S_u / quartic
        log_down = common + np.log(p.A_d) + 0.5 * np.log(p.VL) - p.S_d / quartic
        return log_up, log_down

    def log_w_effective(self, h) -> np.ndarray:
        """log w(h), the flux-free interaction of the effective operator"""
        log_up, log_down = self._log_terms(h)
        return np.logaddexp(log_up, log_down)

    def w_effective(self, h: float) -> LogMagnitude:
        return LogMagnitude(log_abs=float(self.log_w_effective(h)))

    def _log_interaction(self, h, normalization: GapNormalization, with_flux: bool):
        h = _check_h(h)
        log_up, log_down = self._log_terms(h)
        top = np.maximum(log_up, log_down)
        phase = self.flux_phase(h) if with_flux else np.zeros_like(h)
        z = np.exp(log_up - top + 1j * phase) + np.exp(log_down - top - 1j * phase)
        with np.errstate(divide="ignore"):
            log_abs = top + np.log(np.abs(z)) + normalization.h_power * np.log(h)
        return log_abs, np.angle(z), log_up, log_down

    def w_tilde(self, h: float, normalization: GapNormalization = GapNormalization.PHYSICAL,
                with_flux: bool = True) -> LogMagnitude:
        """
        Complex interaction h^{3/2} (T_u e^{iLf} + T_d e^{-iLf}) in the physical normalization

        Args:
            h: semiclassical parameter
            normalization: which operator the gap refers to
            with_flux: False drops the flux phase

        Returns:
            LogMagnitude with the complex phase
        """
        log_abs, phase, _, _ = self._log_interaction(np.atleast_1d(h), normalization, with_flux)
        return LogMagnitude(log_abs=float(log_abs[0]), phase=float(phase[0]))

    def predict(self, hs, normalization: GapNormalization = GapNormalization.PHYSICAL,
                with_flux: bool = True) -> SplittingPrediction:
        """Gap 2|w~|, its envelope and the flux phase over an h grid"""
        hs = np.atleast_1d(_check_h(hs))
        log_abs, _, log_up, log_down = self._log_interaction(hs, normalization, with_flux)
        log_gap = np.log(2.0) + log_abs
        log_env = np.log(2.0) + np.logaddexp(log_up, log_down) + normalization.h_power * np.log(hs)

        phase = self.flux_phase(hs) if with_flux else np.zeros_like(hs)
        difference = log_up - log_down
        if self.inputs.symmetric:
            dominant = "both"
        else:
            dominant = "up" if np.all(difference > 0) else "down" if np.all(difference < 0) else "mixed"

        return SplittingPrediction(
            h=hs,
            log_w_eff=self.log_w_effective(hs),
            log_gap=log_gap,
            gap_formula=np.exp(log_gap),
            envelope=np.exp(log_env),
            phase_mod_2pi=np.mod(phase, 2 * np.pi),
            subdominant_ratio=np.exp(-np.abs(difference)),
            dominant_arc=dominant,
            alpha0=self.inputs.alpha0,
            normalization=normalization,
            with_flux=with_flux,
        )

    def conjecture_gap(self, hs, normalization: GapNormalization = GapNormalization.PHYSICAL) -> np.ndarray:
        """
        Ellipse closed form, log of
        h^{13/8} A (2^{5/2} C1^{3/4} / sqrt(pi)) (k2 mu'')^{1/4} (kmax - kmin)^{1/2} e^{-S/h^{1/4}} |cos(L f(h))|
        """
        p = self.inputs
        hs = np.atleast_1d(_check_h(hs))
        log_coefficient = (np.log(p.A_u) + 2.5 * np.log(2.0) + 0.75 * np.log(p.c1) - 0.5 * np.log(np.pi)
                           + 0.25 * np.log(p.k2 * p.mu2) + 0.5 * np.log(p.kappa_max - p.kappa_min))
        with np.errstate(divide="ignore"):
            return (normalization.prefactor_power * np.log(hs) + log_coefficient - p.S / hs ** 0.25
                    + np.log(np.abs(np.cos(self.flux_phase(hs)))))

    def harmonic_levels(self, h: float, n_levels: int = 3,
                        normalization: GapNormalization = GapNormalization.PHYSICAL) -> np.ndarray:
        """
        One-well ladder Theta0 h - C1 kmax h^{3/2} + (2n-1) C1 Theta0^{1/4} sqrt(3 k2/2) h^{7/4}

        The effective normalization keeps only the last term divided by h^{3/2};
        the rescaled one divides everything by h.
        """
        if not 1 <= n_levels <= 3:
            raise PreconditionError("harmonic ladder is provided for n = 1..3")
        p = self.inputs
        h = float(_check_h(h))
        n = np.arange(1, n_levels + 1)
        step = p.c1 * p.theta0 ** 0.25 * np.sqrt(1.5 * p.k2)
        if normalization == GapNormalization.EFFECTIVE:
            return (2 * n - 1) * step * h ** 0.25
        physical = p.theta0 * h - p.c1 * p.kappa_max * h ** 1.5 + (2 * n - 1) * step * h ** 1.75
        return physical if normalization == GapNormalization.PHYSICAL else physical / h

    def predicted_zeros(self, inv_h_min: float, inv_h_max: float) -> np.ndarray:
        """Values of 1/h in a window where cos(L f(h)) = 0"""
        p = self.inputs

        def phase(u):
            return p.L * (p.gamma0 * u - p.xi0 * np.sqrt(u) - p.alpha0)

        # the phase decreases up to its stationary point and increases after it
        turn = (p.xi0 / (2.0 * p.gamma0)) ** 2
        edges = [inv_h_min] + [turn] * bool(inv_h_min < turn < inv_h_max) + [inv_h_max]
        zeros = []
        for a, b in zip(edges[:-1], edges[1:]):
            lo, hi = sorted((phase(a), phase(b)))
            first = int(np.ceil((lo - np.pi / 2) / np.pi))
            last = int(np.floor((hi - np.pi / 2) / np.pi))
            for k in range(first, last + 1):
                target = np.pi / 2 + k * np.pi
                zeros.append(brentq(lambda u: phase(u) - target, a, b, xtol=1e-12))
        return np.unique(np.array(zeros, dtype=float))


def _normalized(gaps: np.ndarray, envelope: np.ndarray) -> np.ndarray:
    return np.asarray(gaps, dtype=float) / envelope


def observed_zeros(h: np.ndarray, gaps: np.ndarray, envelope: np.ndarray) -> np.ndarray:
    """1/h at local minima of gap/envelope below the depth threshold"""
    inv_h = 1.0 / np.asarray(h, dtype=float)
    order = np.argsort(inv_h)
    u = inv_h[order]
    ratio = _normalized(gaps, envelope)[order]
    zeros = []
    for k in local_minima(ratio):
        if ratio[k] >= ZERO_DEPTH:
            continue
        # |cos| is V-shaped at a zero: intersect the lines through the two flanks
        if 2 <= k < u.size - 2:
            left = np.polyfit(u[k - 2:k], ratio[k - 2:k], 1)
            right = np.polyfit(u[k + 1:k + 3], ratio[k + 1:k + 3], 1)
            if left[0] < 0.0 < right[0]:
                cross = (right[1] - left[1]) / (left[0] - right[0])
                if u[k - 1] <= cross <= u[k + 1]:
                    zeros.append(cross)
                    continue
        zeros.append(u[k])
    return np.array(zeros)


def fit_alpha0(h, gaps, inputs: SplittingInputs,
               normalization: GapNormalization = GapNormalization.PHYSICAL) -> Alpha0Fit:
    """
    Least-squares alpha0 in [0, pi/L) from a numerical gap series

    Points with gap/envelope below 0.05 are excluded; a common log-scale offset is
    profiled out so that only the zero pattern drives the fit.

    Raises:
        InsufficientDataError: fewer than three observable zeros
    """
    h = np.asarray(h, dtype=float)
    gaps = np.asarray(gaps, dtype=float)
    calculator = SplittingCalculator(inputs)
    envelope = calculator.predict(h, normalization).envelope

    finite = np.isfinite(gaps) & (gaps > 0)
    n_zeros = observed_zeros(h[finite], gaps[finite], envelope[finite]).size
    if n_zeros < 3:
        raise InsufficientDataError(f"only {n_zeros} observable gap zeros (need at least 3)")

    keep = finite & (_normalized(gaps, envelope) >= ZERO_EXCLUSION)
    h_fit, log_num = h[keep], np.log(gaps[keep])
    period = np.pi / inputs.L

    def profile(alpha: float):
        model = SplittingCalculator(inputs.with_alpha0(alpha)).predict(h_fit, normalization).log_gap
        diff = log_num - model
        diff = np.where(np.isfinite(diff), diff, 50.0)
        shift = float(np.mean(diff))
        return float(np.sum((diff - shift) ** 2)), shift

    grid = np.linspace(0.0, period, ALPHA_GRID, endpoint=False)
    scores = [profile(a)[0] for a in grid]
    best = grid[int(np.argmin(scores))]
    step = period / ALPHA_GRID
    result = minimize_scalar(lambda a: profile(a)[0], bounds=(best - step, best + step),
                             method="bounded", options={"xatol": 1e-10})

    alpha0 = float(np.mod(result.x, period))
    residual, shift = profile(alpha0)
    logger.info(f"✅ Fitted alpha0={alpha0:.8f} (residual {residual:.3e}, {n_zeros} zeros, {keep.sum()} points)")
    return Alpha0Fit(alpha0=alpha0, residual=residual, n_points=int(keep.sum()), n_zeros=n_zeros,
                     log_scale=shift)


def fit_rate(h, gaps, power: float):
    """
    Fit log gap - power log h = a - S x + b/x, x = h^{-1/4}

    Returns:
        (S with the 1/x correction, S from the plain linear fit)
    """
    h = np.asarray(h, dtype=float)
    y = np.log(np.asarray(gaps, dtype=float)) - power * np.log(h)
    x = h ** -0.25
    corrected, *_ = np.linalg.lstsq(np.column_stack([np.ones_like(x), -x, 1.0 / x]), y, rcond=None)
    linear, *_ = np.linalg.lstsq(np.column_stack([np.ones_like(x), -x]), y, rcond=None)
    return float(corrected[1]), float(linear[1])


def compare(h, numeric, prediction: SplittingPrediction,
            inputs: Optional[SplittingInputs] = None) -> ComparisonReport:
    """
    Numerical gaps against a prediction on the same h grid

    Reports per-point |log(numeric/formula)|, the fitted exponential rate against S,
    and, when oscillations are present, observed zeros against predicted ones.
    """
    h = np.asarray(h, dtype=float)
    numeric = np.asarray(numeric, dtype=float)
    if h.shape != prediction.h.shape or not np.allclose(h, prediction.h, rtol=1e-14, atol=0):
        raise PreconditionError("numeric series and prediction must share the h grid")

    usable = np.isfinite(numeric) & (numeric > 0) & np.isfinite(prediction.log_gap)
    if prediction.with_flux:
        usable &= _normalized(np.where(usable, numeric, 0.0), prediction.envelope) >= ZERO_EXCLUSION
    errors = np.abs(np.log(numeric[usable]) - prediction.log_gap[usable])

    report = {
        "normalization": prediction.normalization,
        "n_points": int(usable.sum()),
        "max_log_rel_err": float(np.max(errors)) if errors.size else float("nan"),
        "median_log_rel_err": float(np.median(errors)) if errors.size else float("nan"),
    }

    if inputs is not None and not prediction.with_flux and usable.sum() >= 4:
        power = prediction.normalization.prefactor_power
        rate, rate_linear = fit_rate(h[usable], numeric[usable], power)
        report.update(fitted_rate=rate, fitted_rate_linear=rate_linear, reference_rate=inputs.S,
                      rate_rel_err=abs(rate - inputs.S) / inputs.S)

    if inputs is not None and prediction.with_flux:
        observed = observed_zeros(h[np.isfinite(numeric)], numeric[np.isfinite(numeric)],
                                  prediction.envelope[np.isfinite(numeric)])
        inv_h = 1.0 / h
        predicted = SplittingCalculator(inputs.with_alpha0(prediction.alpha0)).predicted_zeros(
            float(inv_h.min()), float(inv_h.max()))
        offsets: List[float] = []
        if predicted.size:
            offsets = [float(z - predicted[np.argmin(np.abs(predicted - z))]) for z in observed]
        report.update(
            zero_offsets=offsets,
            mean_zero_spacing=float(np.mean(np.diff(observed))) if observed.size >= 2 else None,
            predicted_zero_spacing=float(np.pi / (inputs.L * inputs.gamma0)),
        )

    return ComparisonReport(**report)
