"""Error classes raised across the package.

Every error derives from :class:`FreqSweepError` so the CLI can map any of
them to a nonzero exit code with a one-line diagnostic.
"""


class FreqSweepError(Exception):
    """Base class for all package errors."""


class ConfigurationError(FreqSweepError, ValueError):
    pass


class ValidityError(FreqSweepError, ValueError):
    """A requested window does not fit inside the scene span."""


class AnchorError(ValidityError):
    """A time is not on the scene's native timestamp grid."""


class EmptyInputError(FreqSweepError, ValueError):
    pass


class EmptyDatasetError(EmptyInputError):
    pass


class FrequencyError(FreqSweepError, ValueError):
    pass


class ShapeError(FreqSweepError, ValueError):
    pass


class NumericError(FreqSweepError, ArithmeticError):
    """A non-finite value appeared in a tensor operation."""


class UsageError(FreqSweepError, RuntimeError):
    pass


class DivergenceError(FreqSweepError, RuntimeError):
    def __init__(self, step, message=None):
        self.step = step
        super().__init__(message or f"training diverged at step {step}")
