"""
Test cases for the discretized boundary operator
"""

import numpy as np
import pytest

from src.core.errors import ConvergenceError, DiagnosticError, PreconditionError, ResolutionError
from src.models.schemas import EigenSolveResult, OperatorVariant, TubularGrid
from src.services import boundary2d
from src.services.boundary2d import BoundaryOperatorService, reduce_gauge

SMALL = dict(n_s=64, n_tau=60, hbar=0.2, tau_max=12.0)


@pytest.fixture(scope="module")
def service(constants, ellipse):
    table, wells, _ = ellipse
    return BoundaryOperatorService(constants, table, wells)


@pytest.fixture(scope="module")
def two_well(service, ellipse):
    _, _, flux = ellipse
    op = service.assemble(TubularGrid(**SMALL), flux=True, gamma0=flux.gamma0)
    return op, service.lowest_pair(op)


class TestAssembly:
    """Sparse quadratic-form assembly"""

    def test_hermitian(self, service, two_well):
        op, _ = two_well
        assert service.hermiticity_defect(op) <= 1e-12

    def test_shape_and_mass(self, two_well):
        op, _ = two_well
        assert op.shape == (64, 60)
        assert op.K.shape == (op.dim, op.dim)
        assert np.all(op.mass > 0)
        assert np.all(op.weight >= 0.05)

    def test_resolution_guard(self, service):
        grid = TubularGrid(n_s=16, n_tau=60, hbar=0.2)
        with pytest.raises(ResolutionError) as info:
            service.assemble(grid)
        assert info.value.required > 16

    def test_needs_geometry(self, constants):
        with pytest.raises(PreconditionError):
            BoundaryOperatorService(constants).assemble(TubularGrid(**SMALL))

    def test_reduce_gauge(self):
        quantum = 0.2 * np.pi / 3.0
        reduced = reduce_gauge(5.0, 0.2, 3.0, 0.77)
        assert abs(reduced - 0.77) <= quantum / 2 + 1e-12
        assert ((5.0 - reduced) / quantum) == pytest.approx(round((5.0 - reduced) / quantum), abs=1e-9)

    def test_cutoff_keeps_weight(self, service):
        grid = TubularGrid(**SMALL)
        mu = service.cutoff_scale(grid, 2.0)
        assert mu >= grid.hbar ** (0.5 + 2 * grid.eta)


class TestEigenpairs:
    """Shift-invert Lanczos on the two-well and one-well operators"""

    def test_lowest_pair(self, two_well):
        op, result = two_well
        assert result.nu1 <= result.nu2
        assert max(result.residuals) <= 1e-10
        assert result.orthogonality <= 1e-8
        assert op.norm(result.vectors[:, 0]) == pytest.approx(1.0, abs=1e-12)

    def test_gauge_invariance(self, service, ellipse, two_well):
        table, _, flux = ellipse
        _, result = two_well
        quantum = np.pi * 0.2 ** 2 / table.L
        moved = service.lowest_pair(service.assemble(TubularGrid(**SMALL), gamma0=flux.gamma0 + quantum))
        assert moved.nu1 == pytest.approx(result.nu1, abs=1e-8)
        assert moved.nu2 == pytest.approx(result.nu2, abs=1e-8)

    def test_one_well_mirror(self, service):
        grid = TubularGrid(**SMALL)
        right = service.lowest_pair(service.assemble(grid, variant=OperatorVariant.ONE_WELL_RIGHT))
        left = service.lowest_pair(service.assemble(grid, variant=OperatorVariant.ONE_WELL_LEFT))
        assert abs(right.nu1 - left.nu1) <= 1e-10
        assert abs(right.nu2 - left.nu2) <= 1e-10

    def test_flat_strip_recovers_theta0(self, service, constants):
        grid = TubularGrid(n_s=64, n_tau=200, hbar=0.2, tau_max=12.0)
        strip = service.strip_operator(grid, 20.0)
        result = service.lowest_pair(strip, shift=constants.theta0 - 0.05)
        assert result.nu1 == pytest.approx(constants.theta0, abs=2e-3)

    def test_unconverged_pair_raises(self, service, two_well, monkeypatch):
        op, _ = two_well
        monkeypatch.setattr(boundary2d, "RESIDUAL_TOL", 0.0)
        with pytest.raises(ConvergenceError) as info:
            service.lowest_pair(op)
        assert "residuals" in str(info.value)

    def test_resolvable_guard(self):
        fake = EigenSolveResult(nu1=0.5, nu2=0.5, vectors=np.zeros((1, 2)), residuals=[0.0, 0.0],
                                iterations=1, shift=0.4, orthogonality=0.0)
        with pytest.raises(DiagnosticError):
            BoundaryOperatorService.check_resolvable(fake)


class TestDiagnostics:
    def test_decay_report(self, service, two_well, ellipse_model):
        op, result = two_well
        report = service.decay_diagnostics(op, result, ellipse_model.agmon_data())
        assert report.normal_ok
        assert report.tail_mass <= 1e-6
        assert len(report.peak_positions) == 2
        assert report.symmetry_ok

    def test_overlap_keeps_tangential_phase(self, two_well):
        op, result = two_well
        v = result.vectors[:, 0]
        sigma = np.repeat(op.sigma, op.shape[1])
        assert BoundaryOperatorService.quasimode_overlap(op, np.exp(0.7j) * v, v) == pytest.approx(1.0, abs=1e-12)
        # a sign flip on one well leaves |psi| = |v| but is not the ground state
        flipped = np.where(sigma > 0, -1.0, 1.0) * v
        assert np.allclose(np.abs(flipped), np.abs(v))
        assert BoundaryOperatorService.quasimode_overlap(op, flipped, v) < 0.99

    def test_wkb_needs_one_well(self, service, two_well, ellipse_model):
        op, _ = two_well
        with pytest.raises(PreconditionError):
            service.wkb_residual(op, ellipse_model)

    def test_delta1(self, service, constants, ellipse):
        _, wells, _ = ellipse
        hbar = 0.1
        expected = (constants.theta0 - constants.c1 * wells.kappa_max * hbar
                    + constants.c1 * constants.theta0 ** 0.25 * np.sqrt(1.5 * wells.k2) * hbar ** 1.5)
        assert service.delta1(hbar) == pytest.approx(expected, rel=1e-14)


@pytest.mark.slow
class TestWKB:
    """Leading quasimode against the one-well ground state"""

    def test_overlap_and_residual(self, service, ellipse_model, solver):
        residuals = {}
        for hbar in (0.1, 0.05):
            op = service.assemble(TubularGrid(hbar=hbar), variant=OperatorVariant.ONE_WELL_RIGHT)
            ground = service.lowest_pair(op)
            leading = service.wkb_residual(op, ellipse_model, solver, ground=ground)
            corrected = service.wkb_residual(op, ellipse_model, solver, include_corrector=True, ground=ground)
            residuals[hbar] = leading.residual
            if hbar == 0.1:
                assert leading.overlap >= 0.99
                assert corrected.residual < leading.residual
        assert residuals[0.05] < residuals[0.1]

    def test_leading_asymptotics(self, service, constants, ellipse):
        table, wells, flux = ellipse
        hbars = np.array([0.08, 0.11, 0.15, 0.2])
        scaled = []
        for hbar in hbars:
            result = service.lowest_pair(service.assemble(TubularGrid(hbar=float(hbar)), gamma0=flux.gamma0))
            scaled.append((constants.theta0 - result.nu1) / hbar)
        design = np.column_stack([np.ones_like(hbars), np.sqrt(hbars), hbars])
        limit = np.linalg.lstsq(design, np.array(scaled), rcond=None)[0][0]
        target = constants.c1 * wells.kappa_max
        assert abs(limit - target) / target <= 0.05
