"""
Error taxonomy for the Casimir library and the exit codes the CLI maps them to.
"""

from typing import Any, Dict, List, Optional

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4
EXIT_FIT = 5
EXIT_VERIFICATION = 6


class CasimirError(Exception):
    """Base class for every error raised by this library"""

    exit_code = EXIT_NUMERICAL

    def __init__(self, message: str, **context: Any):
        super().__init__(message)
        self.message = message
        self.context = context

    def __str__(self) -> str:
        return self.message


class DomainError(CasimirError, ValueError):
    """An argument lies outside the domain of a formula (non-positive length, beta >= 1, ...)"""


class GeometryError(CasimirError, ValueError):
    """The two corrugated surfaces would touch or intersect"""

    def __init__(self, message: str, step: Optional[int] = None, **context: Any):
        super().__init__(message, step=step, **context)
        self.step = step


class NumericalError(CasimirError):
    """A quadrature or iteration failed to converge"""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message, diagnostics=diagnostics or {})
        self.diagnostics = diagnostics or {}


class FitError(CasimirError):
    exit_code = EXIT_FIT


class UnderdeterminedFitError(FitError):
    """The design matrix of a least-squares fit is rank deficient"""


class InconsistentDataError(FitError):
    """The fitted coefficients contradict the physical model"""


class InsufficientDataError(FitError):
    """Too few samples for the requested statistic"""


class NoSolutionError(FitError):
    """No separation reproduces the requested amplitude"""


class ParseError(CasimirError):
    """Malformed input file"""

    exit_code = EXIT_VALIDATION

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[str] = None):
        super().__init__(message, line=line, column=column)
        self.line = line
        self.column = column


class ConfigValidationError(CasimirError):
    """One or more configuration invariants are violated"""

    exit_code = EXIT_VALIDATION

    def __init__(self, violations: List[str]):
        message = "Invalid configuration:\n" + "\n".join(f"  - {v}" for v in violations)
        super().__init__(message, violations=violations)
        self.violations = violations


class OutputError(CasimirError):
    exit_code = EXIT_IO


class VerificationFailed(CasimirError):
    exit_code = EXIT_VERIFICATION
