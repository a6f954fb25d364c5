"""Exception types raised across the package."""


class FacilitransError(Exception):
    """Base class for all package-specific errors."""


# --- state construction and bookkeeping

class ZeroVector(FacilitransError):
    """An amplitude list was identically zero."""


class InvalidSites(FacilitransError):
    """A site pair was out of range or degenerate."""


class NonHermitianInput(FacilitransError):
    """A matrix that must be Hermitian failed the Hermiticity check."""


class DimensionMismatch(FacilitransError):
    """Operands act on Hilbert spaces of different dimension."""


class IndexOutOfRange(FacilitransError):
    """A site or pulse index fell outside the valid range."""


# --- geometry, couplings, schedules

class ZeroDistance(FacilitransError):
    """Two atoms coincide; the 1/r^6 coupling diverges."""


class UnreachableWaypoint(FacilitransError):
    """A route waypoint repeats the current site or leaves the chain."""


class InvalidGeometry(FacilitransError):
    """Chain geometry violates its invariants (ordering, spacings)."""


class InvalidParams(FacilitransError):
    """Model parameters violate their invariants."""


class InvalidSchedule(FacilitransError):
    """A pulse schedule is empty or contains invalid tokens."""


# --- time evolution

class ToleranceNotMet(FacilitransError):
    """The adaptive integrator could not satisfy the error tolerance."""


class InvalidState(FacilitransError):
    """A quantum state violates its invariants (norm, trace, positivity)."""


# --- disorder

class ZeroCoupling(FacilitransError):
    """The deviation estimate is undefined for a vanishing coupling."""


class NonPositiveInput(FacilitransError):
    """A physical quantity that must be positive was not."""


# --- command line

class ConfigError(FacilitransError):
    """A run configuration failed schema or invariant validation."""
