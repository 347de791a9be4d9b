"""Exception hierarchy shared by every module."""


class StormacError(Exception):
    pass


class ParameterError(StormacError, ValueError):
    """Invalid argument value or shape."""


class NumericError(StormacError, ArithmeticError):
    """Non-finite input or a numerical routine that failed to converge."""


class StateError(StormacError, RuntimeError):
    """Operation not valid in the object's current state (e.g. empty buffer)."""


class FitError(StormacError, ValueError):
    """Rate fit impossible on the requested window."""


class DivergenceError(NumericError):
    """Training produced a non-finite value.

    ``iteration`` is the iteration at which it was detected and ``records``
    holds the diagnostics logged before that point.
    """

    def __init__(self, iteration, records=None):
        super().__init__(f"non-finite value in theta/Q/h at iteration {iteration}")
        self.iteration = iteration
        self.records = list(records or [])
