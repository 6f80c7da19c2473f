"""
Test cases for boundary curves, arclength tables and curvature wells
"""

import os

import numpy as np
import pytest
from scipy.optimize import minimize_scalar
from scipy.special import ellipe

from src.core.errors import CurveValidationError, NoWellsError, TunnelingError
from src.models.schemas import BoundaryCurve
from src.services.geometry import CurveFactory, GeometryService, periodic_spline, resample_table

DATA_DIR = os.path.join(os.path.dirname(__file__), "..", "data", "curves")


class TestEllipse:
    """Analytic (2, 1) ellipse"""

    def test_curvature_extrema(self, geometry):
        kappa = geometry.curvature(BoundaryCurve.ellipse(2.0, 1.0), np.array([0.0, np.pi / 2]))
        assert kappa[0] == pytest.approx(2.0, abs=1e-10)
        assert kappa[1] == pytest.approx(0.25, abs=1e-10)

    def test_perimeter(self, ellipse):
        table, _, _ = ellipse
        assert table.perimeter == pytest.approx(8.0 * ellipe(0.75), abs=1e-8)

    def test_turning_number(self, ellipse):
        table, _, _ = ellipse
        assert np.sum(table.kappa) * table.ds == pytest.approx(2 * np.pi, abs=1e-6)

    def test_wells_at_quarter_points(self, ellipse):
        table, wells, _ = ellipse
        assert wells.s_r == pytest.approx(-table.L / 2, abs=1e-6)
        assert wells.s_l == pytest.approx(table.L / 2, abs=1e-6)
        assert wells.kappa_max == pytest.approx(2.0, abs=1e-8)
        assert wells.kappa_min == pytest.approx(0.25, abs=1e-6)

    def test_k2(self, ellipse):
        _, wells, _ = ellipse
        assert wells.k2 == pytest.approx(18.0, rel=1e-5)

    def test_flux_constant(self, ellipse):
        table, _, flux = ellipse
        assert flux.area == pytest.approx(2 * np.pi, rel=1e-10)
        assert flux.gamma0 == pytest.approx(2 * np.pi / table.perimeter, rel=1e-8)

    def test_top_point_at_origin_of_arclength(self, ellipse):
        table, _, _ = ellipse
        k = table.n // 2
        assert table.s[k] == pytest.approx(0.0, abs=1e-12)
        assert table.x[k] == pytest.approx(0.0, abs=1e-10)
        assert table.y[k] == pytest.approx(1.0, abs=1e-10)

    def test_kappa_min_between_nodes(self, geometry, ellipse):
        table, _, _ = ellipse
        L = table.L

        def profile(s):
            return 1.0 - 0.5 * np.cos(2 * np.pi * s / L) + 0.05 * np.sin(4 * np.pi * s / L)

        wells = geometry.locate_wells(table.model_copy(update={"kappa": profile(table.s)}))
        exact = minimize_scalar(profile, bounds=(-L / 4, L / 4), method="bounded", options={"xatol": 1e-12})
        assert wells.kappa_min == pytest.approx(exact.fun, abs=1e-9)

    def test_periodic_spline_reproduces_nodes(self, ellipse):
        table, _, _ = ellipse
        spline = periodic_spline(table, table.kappa)
        assert np.max(np.abs(spline(table.s) - table.kappa)) <= 1e-12


class TestCovariance:
    """Scaling and resampling"""

    def test_scaling(self, geometry, ellipse):
        table, wells, flux = ellipse
        big_table, big_wells, big_flux = geometry.analyze(BoundaryCurve.ellipse(2.0, 1.0, scale=2.0))
        assert big_table.L == pytest.approx(2 * table.L, rel=1e-10)
        assert big_wells.kappa_max == pytest.approx(wells.kappa_max / 2, rel=1e-8)
        assert big_wells.k2 == pytest.approx(wells.k2 / 8, rel=1e-6)
        assert big_flux.gamma0 == pytest.approx(2 * flux.gamma0, rel=1e-10)

    def test_resample_round_trip(self, ellipse):
        table, _, _ = ellipse
        back = resample_table(resample_table(table, 2 * table.n), table.n)
        assert np.max(np.abs(back.kappa - table.kappa)) <= 1e-8 * 2.0
        assert np.allclose(back.s, table.s, atol=1e-12)


class TestOtherCurves:
    """Disk, polar, sampled and invalid curves"""

    def setup_method(self):
        self.geometry = GeometryService(samples=1024)

    def test_disk_flux_constant(self):
        assert self.geometry.flux_constant(BoundaryCurve.circle()).gamma0 == pytest.approx(0.5, abs=1e-10)

    def test_circle_has_no_wells(self):
        with pytest.raises(NoWellsError):
            self.geometry.analyze(BoundaryCurve.circle())

    def test_polar_wells_symmetric(self):
        table, wells, _ = self.geometry.analyze(BoundaryCurve.polar(1.0, cos_coeffs=(0.15,)))
        assert wells.s_l == pytest.approx(-wells.s_r, abs=1e-6)
        assert wells.symmetric

    def test_sampled_ellipse_matches_analytic(self):
        t = np.linspace(0.0, 2 * np.pi, 720, endpoint=False)
        points = np.column_stack([2.0 * np.cos(t), np.sin(t)])
        table = self.geometry.reparametrize(BoundaryCurve.sampled(points))
        assert table.perimeter == pytest.approx(8.0 * ellipe(0.75), rel=1e-6)

    def test_egg_curve_file(self):
        table, wells, flux = self.geometry.analyze(BoundaryCurve.sampled(path=os.path.join(DATA_DIR, "egg.txt")))
        assert wells.s_r < 0 < wells.s_l
        assert wells.s_l == pytest.approx(-wells.s_r, abs=1e-6)
        assert flux.gamma0 > 0

    def test_clockwise_rejected(self):
        t = np.linspace(0.0, 2 * np.pi, 400, endpoint=False)
        points = np.column_stack([2.0 * np.cos(-t), np.sin(-t)])
        with pytest.raises(CurveValidationError):
            self.geometry.reparametrize(BoundaryCurve.sampled(points))

    def test_asymmetric_rejected(self):
        t = np.linspace(0.0, 2 * np.pi, 400, endpoint=False)
        angle = 0.3
        x, y = 2.0 * np.cos(t), np.sin(t)
        points = np.column_stack([x * np.cos(angle) - y * np.sin(angle), x * np.sin(angle) + y * np.cos(angle)])
        with pytest.raises(TunnelingError):
            self.geometry.reparametrize(BoundaryCurve.sampled(points))

    def test_odd_sample_count_rejected(self):
        with pytest.raises(CurveValidationError):
            self.geometry.reparametrize(BoundaryCurve.ellipse(2.0, 1.0), n=1025)

    def test_negative_polar_radius_rejected(self):
        with pytest.raises(CurveValidationError):
            CurveFactory.create_curve(BoundaryCurve.polar(1.0, cos_coeffs=(1.5,)))
