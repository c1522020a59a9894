"""Exception types raised by densityflow."""


class DensityFlowError(Exception):
    """Base class for all errors raised by this package."""


class GridMismatch(DensityFlowError, ValueError):
    """Fields that must share a grid live on different grids."""


class NonPositiveWeight(DensityFlowError, ValueError):
    pass


class NonZeroMean(DensityFlowError, ValueError):
    pass


class NonZeroSum(DensityFlowError, ValueError):
    pass


class SolverDivergence(DensityFlowError, RuntimeError):
    pass


class BaseMismatch(DensityFlowError, ValueError):
    """Two double-tangent vectors are attached to different base points."""


class UnsupportedMetric(DensityFlowError, NotImplementedError):
    """The operation is only implemented for flat metrics."""


class DomainTooSmall(DensityFlowError, ValueError):
    pass


class DensityFloor(DensityFlowError, ValueError):
    """A density dropped below the admissible floor.

    When raised from a time integration, ``states`` and ``report`` carry the
    partial trajectory recorded before the failure.
    """

    def __init__(self, message, states=None, report=None):
        super().__init__(message)
        self.states = states
        self.report = report


class StepRejected(DensityFlowError, RuntimeError):
    def __init__(self, message, states=None, report=None):
        super().__init__(message)
        self.states = states
        self.report = report


class ConfigError(DensityFlowError, ValueError):
    """Invalid run configuration. ``field`` names the offending key."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field
