"""Exception types shared across the package.

Every raisable condition named in the module contracts gets its own class
so callers can discriminate data conditions (e.g. ``OutOfDomain``) from
internal-consistency failures (e.g. ``CertificateViolation``).
"""

from __future__ import annotations


class SawtoothError(Exception):
    """Base class for all package errors."""


class InvalidConfig(SawtoothError):
    """Configuration failed validation; carries field and reason."""

    def __init__(self, field: str, reason: str):
        self.field = field
        self.reason = reason
        super().__init__(f"invalid config field '{field}': {reason}")


class DepthExceeded(SawtoothError):
    """Dyadic subdivision requested beyond the configured maximum depth."""


class EmptyCoreSet(SawtoothError):
    """A sawtooth region operation needs a nonempty core set."""


class ResolutionTooCoarse(SawtoothError):
    """Grid discretization disconnected the two query points."""


class OutOfDomain(SawtoothError):
    """Evaluation point lies outside the source's domain of definition."""


class SingularPoint(SawtoothError):
    """Evaluation at a singular boundary point of a catalog map."""


class CertificateViolation(SawtoothError):
    """A certified bound failed its audit: an implementation bug, not data."""


class DegenerateRange(SawtoothError):
    """Vertical sampling range is empty (floor at or above the top)."""


class UnsupportedSource(SawtoothError):
    """Operation requires an analytic source."""


class CalibrationOutOfRange(SawtoothError):
    """Threshold recalibration left its admissible interval."""


class ScaleUnderflow(SawtoothError):
    """Interval lengths underflowed double precision at some level."""

    def __init__(self, level: int):
        self.level = level
        super().__init__(f"interval length underflow at level {level}")


class DegenerateCarrier(SawtoothError):
    """Measure redistribution hit a zero-length carrier set."""


class GrowthViolation(SawtoothError):
    """A measure growth bound failed; carries the witness interval."""

    def __init__(self, message: str, witness: tuple):
        self.witness = witness
        super().__init__(f"{message} (witness J = {witness})")


class CurveEscape(SawtoothError):
    """A canonical curve left the region at sampling resolution."""


class InequalityViolation(SawtoothError):
    """Pointwise inequality right side vanished while the left did not."""


class NonIntegrableConfiguration(SawtoothError):
    """Test function violates the support assumptions of the integral check."""
