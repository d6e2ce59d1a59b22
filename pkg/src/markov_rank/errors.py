"""Exception and warning types shared across the package."""


class MarkovRankError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(MarkovRankError):
    """Input file or entry could not be parsed."""


class ValidationError(MarkovRankError):
    """Input parsed but violates a structural requirement (shape, sign, row sums)."""


class NotIrreducible(MarkovRankError):
    """The chain is reducible where an irreducible one is required."""


class ReducibleAfterRemoval(MarkovRankError):
    """Removing the requested states left a reducible substochastic matrix."""


class AperiodicityViolation(MarkovRankError):
    """The chain is periodic where an aperiodic one is required."""


class ConvergenceFailure(MarkovRankError):
    """An iterative solver exhausted its budget without meeting tolerance.

    Carries the best iterate so callers can inspect how close it got.
    """

    def __init__(self, message, best=None, residual=None, iterations=None):
        super().__init__(message)
        self.best = best
        self.residual = residual
        self.iterations = iterations


class DegenerateInit(MarkovRankError):
    """Initial distribution puts no mass outside the hole."""


class RatesNotSeparated(MarkovRankError):
    """The two escape rates are too close to certify a crossing."""


class HorizonTooSmall(MarkovRankError):
    """A requested step index lies beyond the simulation horizon."""


class IllConditioned(UserWarning):
    """Eigenbasis condition number is large; results are returned but suspect."""
