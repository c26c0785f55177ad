"""Exception hierarchy for the toolkit.

Every error raised on purpose derives from :class:`ToolkitError`, so callers
(and the CLI) can distinguish validation failures from genuine bugs.
"""


class ToolkitError(Exception):
    """Base class for all toolkit errors."""


# -- measure construction ----------------------------------------------------
class EmptySupport(ToolkitError):
    """Measure has no support points."""


class NegativeWeight(ToolkitError):
    """A weight is negative beyond tolerance."""


class WeightSumMismatch(ToolkitError):
    """Weights do not sum to 1 within tolerance."""


class DuplicatePoint(ToolkitError):
    """Two support points coincide exactly."""


class SupportTooLarge(ToolkitError):
    """Requested support size exceeds the safety cap."""


class DimensionMismatch(ToolkitError):
    """Point dimensions of two measures are incompatible."""


# -- solvers -----------------------------------------------------------------
class NoConvergence(ToolkitError):
    """Iterative solver hit its iteration cap before reaching tolerance."""

    def __init__(self, message, iterations=None):
        super().__init__(message)
        self.iterations = iterations


class EmptyReproduction(ToolkitError):
    """Rate-distortion reproduction alphabet is empty."""


class InfeasibleDistortion(ToolkitError):
    """Distortion budget below what the reproduction alphabet can reach."""


class DegenerateGrid(ToolkitError):
    """Multiplier grid produced no usable spread of distortions."""


class NumericalUnderflow(ToolkitError):
    """Cost-to-regularization ratio exceeds floating point range."""


class BisectionStall(ToolkitError):
    """Dual bisection failed to close the bracket."""


class QuadratureFailure(ToolkitError):
    """Adaptive quadrature did not stabilize, or produced an impossible value."""


# -- types engine ------------------------------------------------------------
class TypeMismatch(ToolkitError):
    """Sequence type does not match the declared count vector."""


class MarginalNotInteger(ToolkitError):
    """Scaled marginals are not integer within tolerance."""


class CodebookTooLarge(ToolkitError):
    """Requested codebook size exceeds the cap."""


class Overflow(ToolkitError):
    """Exact count exceeds the big-integer memory guard."""
