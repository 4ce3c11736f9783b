"""Exception hierarchy shared across the package.

The CLI maps these onto its exit codes, so keep the grouping stable:
configuration/IO problems, ill-posed or infeasible problems, and numerical
breakdowns.
"""


class DdlpvError(Exception):
    """Base class for all package errors."""


class DimensionError(DdlpvError, ValueError):
    """Array shapes disagree with the declared dimensions."""


class ScheduleBoxError(DdlpvError, ValueError):
    """A scheduling box is degenerate or a sample falls outside it."""


class IllPosedError(DdlpvError):
    """The data dictionary is not persistently exciting."""


class ConsistencyError(DdlpvError):
    """The consistency condition could not be solved to tolerance."""


class InfeasibleError(DdlpvError):
    """A synthesis program was reported infeasible.

    Attributes:
        diagnosis: mapping of constraint family -> short description of
            whether dropping it restores feasibility.
    """

    def __init__(self, message, diagnosis=None):
        super().__init__(message)
        self.diagnosis = dict(diagnosis or {})


class IllConditionedError(DdlpvError):
    """The Lyapunov certificate Z is numerically singular."""


class NumericalFailure(DdlpvError):
    """The conic solver broke down or its answer failed re-verification."""


class DivergenceError(DdlpvError):
    """A simulation left the finite region (|theta| or |omega| > 1e6)."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step
