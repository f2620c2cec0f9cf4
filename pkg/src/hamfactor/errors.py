"""Exception types shared across the package.

The CLI maps ValidationError (and subclasses) to exit code 2 and
NumericalError (and subclasses) to exit code 3.
"""


class HamfactorError(Exception):
    """Base class for all package errors."""


class ValidationError(HamfactorError):
    """Malformed or inconsistent input data."""


class FcidumpParseError(ValidationError):
    """Unparseable FCIDUMP content. Carries the 1-based line number."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class NumericalError(HamfactorError):
    """A numerical procedure failed or produced invalid results."""


class NonPSDTensor(NumericalError):
    """Two-electron tensor has a negative eigenvalue beyond tolerance."""


class InvalidShiftSplit(NumericalError):
    """Shifted core could not be written as P⊗P − Q⊗Q."""


class OptimizationError(NumericalError):
    """Optimizer produced a non-finite cost. Carries the outer iteration."""

    def __init__(self, message: str, iteration: int | None = None):
        self.iteration = iteration
        if iteration is not None:
            message = f"outer iteration {iteration}: {message}"
        super().__init__(message)
