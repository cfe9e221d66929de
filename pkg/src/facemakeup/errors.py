"""Exception hierarchy shared by all pipeline stages."""


class MakeupError(Exception):
    """Base class for all errors raised by this package."""


# --- numerics ---------------------------------------------------------------

class DimensionMismatch(MakeupError):
    pass


class NotConverged(MakeupError):
    """Iterative solver exhausted its iteration budget.

    Carries the final residual (relative for linear solves) so callers can
    decide whether the partial answer is still usable.
    """

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class DegenerateGamut(MakeupError):
    """Color samples are coplanar/collinear/coincident; no 3D hull exists."""


# --- imaging ----------------------------------------------------------------

class ChannelMismatch(MakeupError):
    pass


class ZeroChannel(MakeupError):
    pass


# --- semantics --------------------------------------------------------------

class SchemaError(MakeupError):
    pass


class OutOfBounds(MakeupError):
    pass


class NoContour(MakeupError):
    pass


class SelfIntersecting(MakeupError):
    pass


class EmptyMask(MakeupError):
    pass


# --- matting ----------------------------------------------------------------

class EmptyForeground(MakeupError):
    """Erosion annihilated the mask; the caller should shrink the band."""


class UnconstrainedMatte(MakeupError):
    pass


# --- transfer ---------------------------------------------------------------

class EmptyRegion(MakeupError):
    pass


# --- consistency ------------------------------------------------------------

class InsufficientObservations(MakeupError):
    pass


class NonPositiveIntensity(MakeupError):
    pass


class DisconnectedGraph(MakeupError):
    pass


class UnknownImage(MakeupError):
    pass


# --- plans / assets ---------------------------------------------------------

class PlanError(MakeupError):
    pass


class AssetError(MakeupError):
    pass
