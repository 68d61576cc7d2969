"""Exception hierarchy shared by all bqlab modules.

Two families matter for the CLI exit codes: contract violations
(PreconditionError and subclasses, exit code 2) and runtime numerical
failures (NumericalError and subclasses, exit code 3).
"""


class LabError(Exception):
    """Base class for all bqlab errors."""


class PreconditionError(LabError, ValueError):
    """An input violated a documented contract (bad value, wrong range)."""


class GridMismatchError(PreconditionError):
    """Operands live on different grids or have inconsistent lengths."""


class UndefinedRatioError(PreconditionError):
    """A ratio probe was asked to normalise by a zero norm."""


class NumericalError(LabError, RuntimeError):
    """A computation failed at runtime for numerical reasons."""


class DivergenceError(NumericalError):
    """Time stepping produced non-finite values.

    Carries the step index and time stamp at which the overflow was seen.
    """

    def __init__(self, message: str, step_index: int, t: float):
        super().__init__(message)
        self.step_index = step_index
        self.t = t


class ContractionFailureError(NumericalError):
    """Picard iteration did not contract within the iteration budget.

    ``ratios`` holds the successive-difference ratios observed before
    giving up; values >= 1 signal that the requested window is too long.
    """

    def __init__(self, message: str, ratios: list[float]):
        super().__init__(message)
        self.ratios = list(ratios)


class EnergyDoublingError(NumericalError):
    """The truncated-energy monitor tripped before the scheduled end time."""

    def __init__(self, message: str, t_start: float, t_fail: float):
        super().__init__(message)
        self.t_start = t_start
        self.t_fail = t_fail


class SlopeFitError(LabError, ValueError):
    """A power-law fit was requested on unusable data (too few points, flat)."""
