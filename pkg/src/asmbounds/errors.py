"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """An argument violates a documented precondition."""


class EvaluationError(ArithmeticError):
    """A user callable produced a non-finite value.

    The offending input is kept on ``point`` so callers can reproduce it.
    """

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class UnsupportedConditionalError(NotImplementedError):
    """No exact conditional sampler exists for the (distribution, split) pair."""


class NoConvergenceError(RuntimeError):
    """An iterative routine hit its cap; ``partial`` holds the last value."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class GammaRangeError(OverflowError):
    """A Gamma-function evaluation left the double range for this ``eps``."""

    def __init__(self, message, eps=None):
        super().__init__(message)
        self.eps = eps
