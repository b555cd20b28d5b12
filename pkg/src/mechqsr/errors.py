"""Exception types shared across the package."""


class MechQSRError(Exception):
    """Base class for package errors."""


class TruncationError(MechQSRError, ValueError):
    """Fock cutoff too small for the requested state or moment."""


class ResolutionError(MechQSRError, ValueError):
    """Phase-space grid too small or too coarse for the requested computation."""


class OrderingError(MechQSRError, ValueError):
    """Requested s-parameter cannot be reached (would require deconvolution)."""


class NormalizationError(MechQSRError, ValueError):
    """A tabulated density does not integrate to one on its support."""


class AccuracyWarning(UserWarning):
    """Result computed, but outside the regime where truncation error is negligible."""
