"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A config file or run configuration could not be parsed or is inconsistent."""


class GateError(ValueError):
    """A parameter combination violates an admissibility gate (p-range, exponent
    interval, weight range, or a sign/positivity requirement on the data)."""


class ConvergenceError(RuntimeError):
    """An iterative solve failed to reach its tolerance within its budget.

    Carries the last iterate and diagnostics so partial results are not lost.
    """

    def __init__(self, message, last_iterate=None, diagnostics=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.diagnostics = diagnostics or {}
