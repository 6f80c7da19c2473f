"""
Test cases for the de Gennes model operator
"""

import numpy as np
import pytest

from src.core.config import settings
from src.core.errors import (
    DiagnosticError, IllConditionedResolventError, NoInteriorMinimumError, PreconditionError
)
from src.models.schemas import HalfLineGrid
from src.services.degennes import DeGennesSolver


class TestEigenpairs:
    """Spectrum of the discrete operator at fixed xi"""

    def test_mu_at_zero_is_one(self, solver):
        assert solver.mu(0.0) == pytest.approx(1.0, abs=1e-5)

    def test_ground_state_positive_and_normalized(self, solver):
        pair = solver.eigenpair(0.8)
        assert pair.u0 > 0
        assert -pair.u.min() / pair.u.max() <= 1e-12
        assert solver.integrate(pair.u ** 2) == pytest.approx(1.0, abs=1e-12)

    def test_far_frequency_approaches_one_from_below(self, solver):
        far = solver.mu(10.0)
        assert 0.0 <= 1.0 - far <= 1e-4

    def test_second_band_gap(self, solver):
        gaps = [solver.band_gap(x) for x in np.linspace(0.0, 2.0, 21)]
        assert min(gaps) > 0.4

    def test_feynman_hellmann(self, solver):
        numeric = (solver.mu(1.0 + 1e-4) - solver.mu(1.0 - 1e-4)) / 2e-4
        assert solver.mu_prime(1.0) == pytest.approx(numeric, abs=1e-4)

    def test_second_order_convergence(self):
        grid = HalfLineGrid(t_max=20.0, n=1000)
        mus = [DeGennesSolver(grid.refined(f)).mu(0.77) for f in (1, 2, 4)]
        ratio = (mus[0] - mus[1]) / (mus[1] - mus[2])
        assert ratio == pytest.approx(4.0, abs=0.5)

    def test_band_index_out_of_range(self, solver):
        with pytest.raises(PreconditionError):
            solver.eigenpair(0.5, n=0)
        with pytest.raises(PreconditionError):
            solver.eigenpair(0.5, n=4)

    def test_xi_outside_window(self, solver):
        with pytest.raises(PreconditionError):
            solver.mu(10.5)


class TestConstants:
    """Theta0, xi0, C1 and mu'' with their identities"""

    def test_known_values(self, constants):
        assert constants.theta0 == pytest.approx(0.5901061249, abs=1e-6)
        assert constants.xi0 ** 2 == pytest.approx(constants.theta0, abs=1e-6)

    def test_c1_normalization(self, constants):
        assert constants.c1 == pytest.approx(constants.u0 ** 2 / 3.0, rel=1e-12)
        assert constants.c1_literal == pytest.approx(constants.c1 / 2.0, rel=1e-12)

    def test_second_derivative_identity(self, constants):
        expected = 6.0 * constants.c1 * np.sqrt(constants.theta0)
        assert abs(constants.mu2 - expected) / constants.mu2 <= 1e-3

    def test_moment_residuals_at_grid_minimum(self, solver):
        r1, r2 = solver.moment_residuals()
        assert abs(r1) <= 1e-6
        assert abs(r2) <= 1e-3

    def test_c2_is_half_mu2(self, solver, constants):
        assert solver.c2(constants.xi0, constants.theta0) == pytest.approx(0.5 * constants.mu2, rel=1e-3)

    def test_deflated_solution_orthogonal(self, solver, constants):
        w, v, _ = solver.deflated_resolvent(constants.xi0, constants.theta0)
        assert abs(np.dot(w, v)) <= 1e-10

    def test_resolvent_refuses_second_eigenvalue(self, solver, constants):
        mu_second = solver.mu(constants.xi0) + solver.band_gap(constants.xi0)
        with pytest.raises(IllConditionedResolventError):
            solver.deflated_resolvent(constants.xi0, mu_second)
        with pytest.raises(PreconditionError):
            solver.deflated_resolvent(constants.xi0, mu_second + 0.1)

    def test_bracket_without_minimum(self, solver):
        with pytest.raises(NoInteriorMinimumError):
            solver.minimize_mu1((1.0, 1.5))

    def test_c1_override(self, monkeypatch):
        monkeypatch.setattr(settings, "C1_OVERRIDE", 0.2)
        consts = DeGennesSolver(HalfLineGrid(n=2000)).constants()
        assert consts.c1 == 0.2
        assert abs(consts.mu2 - 6.0 * consts.c1 * np.sqrt(consts.theta0)) / consts.mu2 > 1e-2

    def test_coarse_grid_fails_identity(self):
        coarse = DeGennesSolver(HalfLineGrid(n=500))
        try:
            consts = coarse.constants()
        except DiagnosticError:
            return
        assert abs(coarse.mu(0.0) - 1.0) > 1e-5 or abs(consts.xi0 ** 2 - consts.theta0) > 1e-6
