"""
Exception hierarchy shared by the services, the CLI and the HTTP routes
"""

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CHECK_FAILED = 2
EXIT_NUMERICAL = 3


class TunnelingError(Exception):
    """Base class; ``exit_code`` is what the CLI returns for it"""

    exit_code = EXIT_NUMERICAL
    http_status = 422


class PreconditionError(TunnelingError, ValueError):
    exit_code = EXIT_USAGE
    http_status = 400


class ConfigError(TunnelingError, ValueError):
    exit_code = EXIT_USAGE
    http_status = 400


class CurveValidationError(TunnelingError, ValueError):
    http_status = 400


class DegenerateParametrizationError(CurveValidationError):
    pass


class NoWellsError(TunnelingError):
    http_status = 400


class AssumptionViolationError(TunnelingError):
    http_status = 400


class DiagnosticError(TunnelingError, RuntimeError):
    pass


class NoInteriorMinimumError(DiagnosticError):
    pass


class IllConditionedResolventError(DiagnosticError):
    pass


class ConvergenceError(DiagnosticError):
    pass


class ResolutionError(TunnelingError):
    """Grid too coarse; ``required`` carries the minimal admissible size"""

    def __init__(self, message: str, required: int = 0):
        super().__init__(message)
        self.required = required


class InsufficientDataError(TunnelingError):
    pass


class CheckFailure(TunnelingError):
    exit_code = EXIT_CHECK_FAILED

    def __init__(self, message: str, failed_checks=None):
        super().__init__(message)
        self.failed_checks = list(failed_checks or [])
