"""
Test cases for the effective potential, Agmon data and the 1D oracle
"""

import numpy as np
import pytest

from src.core.errors import PreconditionError
from src.models.schemas import ArcMode, BoundaryCurve, WellSide
from src.services.effective import EffectiveModel, agmon_integral, transport_prefactor
from src.services.geometry import periodic_spline


class TestPotential:
    """V and the harmonic constant g"""

    def test_potential_nonnegative_and_zero_at_wells(self, ellipse_model):
        V = ellipse_model.V
        assert V.V.min() >= 0.0
        spline = periodic_spline(ellipse_model.table, V.V)
        assert spline(V.s_r) == pytest.approx(0.0, abs=1e-10)
        assert spline(V.s_l) == pytest.approx(0.0, abs=1e-10)

    def test_unscaled_potential(self, ellipse_model, constants):
        V = ellipse_model.V
        expected = constants.c1 * (V.kappa_max - ellipse_model.table.kappa)
        assert np.allclose(V.v, np.clip(expected, 0.0, None), rtol=1e-12, atol=1e-14)

    def test_g_matches_curvature_of_v(self, ellipse_model):
        V = ellipse_model.V
        second = periodic_spline(ellipse_model.table, V.V)(V.s_r, 2)
        assert np.sqrt(second / 2.0) == pytest.approx(V.g, rel=1e-4)


class TestAgmon:
    """Actions, distances and prefactors on the symmetric ellipse"""

    def test_symmetric_actions_and_prefactors(self, ellipse_model):
        data = ellipse_model.agmon_data()
        assert data.S_u == pytest.approx(data.S_d, rel=1e-6)
        assert data.A_u == pytest.approx(data.A_d, rel=1e-6)
        assert data.S == min(data.S_u, data.S_d)

    def test_curvature_form(self, ellipse_model):
        data = ellipse_model.agmon_data()
        prefactor, action = ellipse_model.conjecture_terms()
        assert action == pytest.approx(data.S_u, rel=1e-8)
        assert prefactor == pytest.approx(data.A_d, rel=1e-6)

    def test_distance_modes(self, ellipse_model):
        table = ellipse_model.table
        data = ellipse_model.agmon_data()
        sigma = np.linspace(-table.L, table.L, 41, endpoint=False)
        ccw = ellipse_model.agmon_distance(WellSide.RIGHT, sigma, ArcMode.CCW)
        cw = ellipse_model.agmon_distance(WellSide.RIGHT, sigma, ArcMode.CW)
        geodesic = ellipse_model.agmon_distance(WellSide.RIGHT, sigma, ArcMode.MIN)
        assert np.all(geodesic <= ccw + 1e-12)
        assert np.all(geodesic <= cw + 1e-12)
        assert ellipse_model.agmon_distance(WellSide.RIGHT, [ellipse_model.V.s_l])[0] == pytest.approx(data.S_u, rel=1e-8)

    def test_agmon_integral_harmonic(self):
        s = np.linspace(-1.0, 1.0, 2001)
        values = agmon_integral(s, (2.0 * s) ** 2, 0.0, [0.5, -0.5])
        assert values == pytest.approx([0.25, 0.25], rel=1e-8)

    def test_harmonic_prefactor_is_one(self):
        s = np.linspace(-1.0, 1.0, 4001)
        g = 1.3
        assert transport_prefactor(s, (g * (s + 0.2)) ** 2, -0.2, g, 0.8) == pytest.approx(1.0, abs=1e-8)

    def test_amplitude_normalization(self, ellipse_model):
        data = ellipse_model.agmon_data()
        f, _, _ = ellipse_model.wkb_functions(WellSide.RIGHT)
        assert float(f(0.0)[0]) ** 2 * np.sqrt(np.pi / data.g) == pytest.approx(data.A_u, rel=1e-8)

    def test_wkb_amplitude_on_unrolled_interval(self, ellipse_model):
        for side in (WellSide.RIGHT, WellSide.LEFT):
            amplitude = ellipse_model.wkb_amplitude(side)
            lo, hi = ellipse_model.unrolled_interval(side)
            assert amplitude.sigma[0] == pytest.approx(lo, abs=1e-9)
            assert amplitude.sigma[-1] == pytest.approx(hi, abs=1e-9)
            assert np.all(amplitude.f > 0)
            assert amplitude.phi.min() == pytest.approx(0.0, abs=1e-10)

    def test_transport_residual_small(self, ellipse_model):
        table, s_r = ellipse_model.table, ellipse_model.V.s_r
        assert ellipse_model.transport_residual(WellSide.RIGHT, s_r + 0.05 * table.L, 0.0) < 1e-3

    def test_wells_required(self, geometry, constants):
        table = geometry.reparametrize(BoundaryCurve.circle())
        with pytest.raises(PreconditionError):
            EffectiveModel(table, None, constants).agmon_data()


class TestFourierOracle:
    """Spectrum of the effective operator"""

    def test_free_circle(self, geometry, constants):
        table = geometry.reparametrize(BoundaryCurve.circle())
        model = EffectiveModel(table, None, constants.model_copy(update={"mu2": 2.0}))
        plain = model.effective_eigs(1.0, 0.0, m=5).eigenvalues
        twisted = model.effective_eigs(1.0, 0.5, m=4).eigenvalues
        assert plain == pytest.approx([0, 1, 1, 4, 4], abs=1e-10)
        assert twisted == pytest.approx([0.25, 0.25, 2.25, 2.25], abs=1e-10)

    def test_flux_periodicity_and_reflection(self, ellipse_model):
        L = ellipse_model.table.L
        base = ellipse_model.effective_eigs(0.05, 0.3).eigenvalues
        shifted = ellipse_model.effective_eigs(0.05, 0.3 + np.pi / L).eigenvalues
        mirrored = ellipse_model.effective_eigs(0.05, -0.3).eigenvalues
        assert np.max(np.abs(base - shifted)) <= 1e-8
        assert np.max(np.abs(base - mirrored)) <= 1e-8

    def test_gap_positive_without_flux(self, ellipse_model):
        spectrum = ellipse_model.effective_eigs(0.02, 0.0, m=2)
        assert spectrum.gap > 0
        assert spectrum.resolvable

    def test_lowest_pair_near_harmonic_level(self, ellipse_model, ellipse_inputs):
        from src.models.schemas import GapNormalization
        from src.services.splitting import SplittingCalculator

        h = 1e-3
        spectrum = ellipse_model.effective_eigs(h, 0.0, m=2)
        level = SplittingCalculator(ellipse_inputs).harmonic_levels(h, 1, GapNormalization.EFFECTIVE)[0]
        assert np.mean(spectrum.eigenvalues[:2]) == pytest.approx(level, rel=0.2)

    def test_invalid_arguments(self, ellipse_model):
        with pytest.raises(PreconditionError):
            ellipse_model.effective_eigs(0.0)
        with pytest.raises(PreconditionError):
            ellipse_model.effective_eigs(0.1, m=0)
