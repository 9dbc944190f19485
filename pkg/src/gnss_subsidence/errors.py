"""Exception hierarchy shared by all pipeline stages."""


class SubsidenceError(Exception):
    """Base class for every error raised by this package."""


class DomainError(SubsidenceError, ValueError):
    """An argument lies outside the domain an operation is defined on."""


class FormatError(SubsidenceError, ValueError):
    """An input file violates its documented layout."""


class RowError(FormatError):
    """A single data row could not be parsed."""

    def __init__(self, line_number, message):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {message}")


class ConditioningError(SubsidenceError, ArithmeticError):
    """A linear system is singular or too badly conditioned to solve."""


class ConvergenceError(SubsidenceError, ArithmeticError):
    """An iteration stopped before reaching its tolerance.

    ``last_iterate`` holds whatever the iteration had when it gave up.
    """

    def __init__(self, message, last_iterate=None):
        self.last_iterate = last_iterate
        super().__init__(message)


class NumericError(SubsidenceError, ArithmeticError):
    """A series or recurrence failed to converge."""


class FrameError(SubsidenceError, ValueError):
    """A coordinate is tagged with the wrong reference frame."""


class TrainingError(SubsidenceError, RuntimeError):
    """A forecasting model failed to train; ``diagnostics`` describes why."""

    def __init__(self, message, diagnostics=None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)


class UndefinedMetricError(SubsidenceError, ArithmeticError):
    """A metric has a zero denominator for the given data."""


class ConfigError(SubsidenceError, ValueError):
    """A pipeline configuration failed validation."""
