class DimensionError(ValueError):
    """Raised when operator shapes or tensor-factor structures do not match."""


class ValidationError(ValueError):
    """Raised when an object violates its invariants beyond tolerance."""


class CoverageError(ValueError):
    """Raised when a rate-distortion curve does not cover a required distortion."""
