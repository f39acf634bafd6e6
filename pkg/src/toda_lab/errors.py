"""Exception types shared across the package."""


class TodaLabError(Exception):
    """Base class for all domain errors raised by toda_lab."""


class InvalidStateError(TodaLabError):
    """A lattice state violates a structural invariant (e.g. a(n) <= 0)."""


class GuardBandError(TodaLabError):
    """The perturbation reached the protected margin at the window edge."""


class GuardBandWarning(RuntimeWarning):
    """Perturbation close enough to the window edge to distort field values."""


class StepFailureError(TodaLabError):
    """The adaptive integrator could not reach the requested tolerance."""


class PositivityError(StepFailureError):
    """An off-diagonal coefficient lost positivity along a trajectory."""


class ReductionInconsistencyError(TodaLabError):
    """The Kac-van Moerbeke embedding produced a nonzero diagonal flow."""


class UnnormalizedBackgroundError(TodaLabError):
    """Operation requires the normalized background (a0=1/2, b0=0)."""


class BandEdgeError(TodaLabError):
    """Scattering quantities are singular at the spectral band edges k = +-1."""


class LocalizationError(TodaLabError):
    """An eigenvector carries too much mass near the truncation edge."""


class InsufficientSignalError(TodaLabError):
    """Reflection data is too small to support a stable fit."""


class BranchTrackingError(TodaLabError):
    """Phase unwrapping along the grid could not resolve the log branch."""


class WindowTooSmallError(TodaLabError):
    """The requested window cannot hold the solution tails at tolerance."""


class InsufficientTailError(TodaLabError):
    """The state has no usable tail above the noise floor."""


class NumericalContradictionError(TodaLabError):
    """A witness run produced the outcome the uniqueness result forbids."""


class LogScaleRequiredError(TodaLabError):
    """A sampled function overflowed; supply log-modulus values instead."""
