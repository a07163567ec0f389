"""Exception types raised across the package."""


class YMFlowError(Exception):
    """Base class for all package errors."""


class InvalidParameter(YMFlowError, ValueError):
    pass


class InvalidCell(YMFlowError, IndexError):
    pass


class InvalidDegree(YMFlowError, ValueError):
    pass


class InvalidOperands(YMFlowError, ValueError):
    pass


class LogBranchError(YMFlowError, ValueError):
    """Group logarithm requested at or near the cut locus."""


class DomainViolation(YMFlowError, ValueError):
    """A field does not lie in the boundary-condition subspace an operator requires."""


class SizeLimitExceeded(YMFlowError, ValueError):
    pass


class InsufficientSamples(YMFlowError, ValueError):
    pass


class RangeError(YMFlowError, ValueError):
    pass


class BlowUpDetected(YMFlowError, RuntimeError):
    """Raised when a field norm becomes non-finite or exceeds the blow-up threshold.

    ``last_state`` holds the last state that passed the check.
    """

    def __init__(self, message, last_state=None):
        super().__init__(message)
        self.last_state = last_state


class ConfigError(YMFlowError, ValueError):
    pass


class SchemaMismatch(YMFlowError, ValueError):
    pass


class ChecksumMismatch(YMFlowError, ValueError):
    pass
