# cbrlab/errors.py
"""Exception hierarchy shared by the library, the engines and the CLI."""
from typing import List, Optional


class LabError(Exception):
    """Base class for every error raised by cbrlab."""


class ValidationError(LabError, ValueError):
    """A parameter value is out of range, non-finite or inconsistent."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class DomainError(LabError, ValueError):
    """Inputs lie outside the domain where a formula is defined."""


class RegimeError(DomainError):
    """A method is used outside its validity regime."""


class DomainTooSmallError(DomainError):
    """Probability mass reached the boundary of the position grid."""


class InvalidStateError(DomainError):
    """A density matrix or state vector fails its physical invariants."""


class NumericalError(LabError, ArithmeticError):
    """A numerical method failed to meet its tolerance.

    Args:
        message: Human readable description
        best_estimate: Best value obtained before giving up
        error_bound: Estimated absolute error of best_estimate
    """

    def __init__(self, message: str, best_estimate: Optional[float] = None,
                 error_bound: Optional[float] = None):
        self.best_estimate = best_estimate
        self.error_bound = error_bound
        if best_estimate is not None:
            message = f"{message} (best estimate {best_estimate!r}, error bound {error_bound!r})"
        super().__init__(message)


class IntegrationError(NumericalError):
    """Invariant drift during time stepping exceeded the hard limit."""


class QualityError(NumericalError):
    """Too many stochastic trajectories had to be resampled."""


class FitError(NumericalError):
    """A least-squares fit is too poor to report a rate."""


class ScenarioError(LabError):
    """One or more problems with a scenario description.

    All problems found are collected in ``errors`` so a user can fix a
    scenario file in one pass.
    """

    def __init__(self, errors: List[str], name: Optional[str] = None):
        self.errors = list(errors)
        self.name = name
        prefix = f"scenario {name!r}" if name else "scenario"
        listing = "\n  - ".join(self.errors)
        super().__init__(f"{prefix}: {len(self.errors)} problem(s)\n  - {listing}")


class TruncationWarning(UserWarning):
    """The Fock truncation is probably too small for the requested state."""


def exit_code_for(error: BaseException) -> int:
    """Map an exception to the CLI exit code."""
    if isinstance(error, (DomainTooSmallError, InvalidStateError, NumericalError)):
        return 3
    if isinstance(error, (ScenarioError, ValidationError, DomainError)):
        return 2
    return 1
