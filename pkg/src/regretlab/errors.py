"""Exception types shared across the package."""


class ContractViolation(ValueError):
    """An operation was called with arguments outside its precondition."""


class InvalidGenerator(ContractViolation):
    """A data-generating law was configured with impossible parameters."""


class NumericFailure(ArithmeticError):
    """A numerical routine could not reach its requested accuracy.

    ``achieved`` carries the error estimate that was actually obtained.
    """

    def __init__(self, message: str, achieved: float = float("nan")):
        super().__init__(message)
        self.achieved = achieved


class ConvergenceError(NumericFailure):
    """An iterative solver hit its iteration cap; ``achieved`` is the last gap."""


class HypothesisViolated(ContractViolation):
    """A bound was requested outside the regime where it holds."""


class EmptyClassError(ContractViolation):
    """Filtering a distribution class left nothing behind."""
