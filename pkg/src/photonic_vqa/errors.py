"""Exception types raised across the package."""


class InvalidArgument(ValueError):
    """An input violates a documented precondition."""


class CalibrationError(ValueError):
    """Calibration samples cannot determine the fringe parameters."""


class EmptyRecordError(ValueError):
    """A counts record holds zero coincidences."""


class GroupingError(ValueError):
    """Commuting group or measurement basis construction failed."""


class TableLookupError(KeyError):
    """Requested row is absent from a bundled table."""


class NumericalError(RuntimeError):
    """A numerical routine failed (singular kernel, NaN cost, ...)."""


class OptimizationError(NumericalError):
    """Optimizer aborted. The partial trajectory is kept on ``trajectory``."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = list(trajectory or [])
