"""Exception hierarchy shared across the package.

Every error raised by library code derives from GeostreamError so callers
(CLI, station service) can map failures onto exit codes and diagnostics
without catching bare exceptions.
"""


class GeostreamError(Exception):
    """Base class for all package errors."""


class DomainError(GeostreamError):
    """Input outside the documented domain (bad latitude, negative focal, ...)."""


class RangeError(GeostreamError):
    """Query outside the supported range (time outside trajectory span, ...)."""


class ValidityError(GeostreamError):
    """Data present but flagged invalid (INS status bits not set)."""


class NumericError(GeostreamError):
    """Iterative numeric procedure failed to converge."""

    def __init__(self, message, iterations=None):
        super().__init__(message)
        self.iterations = iterations


class HorizonError(GeostreamError):
    """Viewing ray does not intersect the ground plane usefully."""


class DegenerateGeometryError(GeostreamError):
    """Point/rotation configuration does not constrain the solution."""


class InsufficientDataError(GeostreamError):
    """Too few samples for the requested fit."""


class UnobservableError(GeostreamError):
    """The quantity being solved for leaves no signature in the data."""

    def __init__(self, message, diagnostic=None):
        super().__init__(message)
        self.diagnostic = diagnostic


class ContractError(GeostreamError):
    """A pluggable backend violated its interface contract."""


class BudgetError(GeostreamError):
    """Encoding cannot fit the byte budget; carries the best effort result."""

    def __init__(self, message, best_effort=None):
        super().__init__(message)
        self.best_effort = best_effort


class ParseError(GeostreamError):
    """Malformed input file or layer."""


class FramingError(GeostreamError):
    """Wire frame truncated or missing magic."""


class IntegrityError(GeostreamError):
    """Wire frame failed CRC or length validation."""


class PlanError(GeostreamError):
    """Mission plan is internally inconsistent or infeasible."""


class OutOfBoundsError(GeostreamError):
    """Camera footprint leaves the simulated scene."""


class EmptySupportError(GeostreamError):
    """Metric requested over an empty pixel support."""


class TransitionError(GeostreamError):
    """Illegal triage ledger state transition."""


class SpoolError(GeostreamError):
    """On-disk spool write failed."""
