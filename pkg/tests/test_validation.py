"""
Test cases for the invariant suite
"""

import numpy as np
import pytest

from src.core.errors import PreconditionError
from src.models.schemas import RunConfig, Severity
from src.services.validation import MODULES, ValidationService


class TestValidation:
    """Fast check groups on the default configuration"""

    def setup_method(self):
        self.config = RunConfig()

    @pytest.mark.parametrize("module", ["geometry", "effective", "splitting", "boundary2d", "cli"])
    def test_fast_module_passes(self, module, constants):
        report = ValidationService(self.config, constants=constants).run(only=module)
        assert report.checks
        assert all(check.module == module for check in report.checks)
        assert report.passed, [c.name for c in report.failed]

    def test_degennes_passes(self):
        report = ValidationService(self.config).run(only="degennes")
        assert report.passed, [c.name for c in report.failed]

    def test_unknown_module(self, constants):
        with pytest.raises(PreconditionError):
            ValidationService(self.config, constants=constants).run(only="plotting")

    def test_refusal_becomes_failed_check(self, constants):
        service = ValidationService(self.config, constants=constants)

        def refuse():
            raise PreconditionError("no data")

        checks = service.run_group("splitting", refuse)
        assert len(checks) == 1
        assert not checks[0].passed
        assert checks[0].name == "refuse completed"
        assert "PreconditionError" in checks[0].detail

    def test_diagnostics_do_not_fail_report(self, constants):
        report = ValidationService(self.config, constants=constants).run(only="effective")
        diagnostics = [c for c in report.checks if c.severity == Severity.DIAGNOSTIC]
        assert diagnostics
        assert report.passed


@pytest.mark.slow
class TestFullValidation:
    """Oracle agreement over the acceptance grids"""

    def test_full_suite(self, constants):
        report = ValidationService(RunConfig(), constants=constants).run(full=True)
        assert {check.module for check in report.checks} == set(MODULES)
        assert report.passed, [c.name for c in report.failed]
        exponents = [c for c in report.checks if c.name.startswith("WKB residual exponent")]
        assert len(exponents) == 2
        assert all(np.isfinite(c.value) and c.detail.startswith("p=") for c in exponents)
