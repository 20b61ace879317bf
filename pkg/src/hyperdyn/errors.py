"""Exception taxonomy shared across the package.

Exit-code mapping for the CLI: UsageError -> 2, DomainError -> 3.
"""


class HyperdynError(Exception):
    """Base class for all package errors."""


class UsageError(HyperdynError):
    """Caller violated a precondition (bad arguments, mismatched spaces)."""


class DomainError(HyperdynError):
    """A dynamics map produced a point outside the phase space."""

    def __init__(self, message, point=None, coords=None):
        super().__init__(message)
        self.point = point
        self.coords = coords


class ResourceError(HyperdynError):
    """A construction would exceed a configured resource cap."""


class FamilyValidationError(HyperdynError):
    """A covering family failed admissibility validation.

    Carries the full ValidationReport so callers can inspect which
    invariant broke and on which pair/point.
    """

    def __init__(self, report):
        super().__init__(f"covering family failed validation: {report.summary()}")
        self.report = report
