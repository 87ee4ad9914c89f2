"""Exception types shared across the package."""


class SingularityError(ArithmeticError):
    """Rational-function evaluation hit a (near-)zero denominator."""


class UnreachablePatternError(LookupError):
    """A sign pattern selected no piece of a piecewise structure."""


class ConvergenceError(RuntimeError):
    """An iterative solver exhausted its iteration budget.

    The best iterate found so far is attached as ``best`` so callers can
    inspect how close the run got.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class RankDeficiencyError(ValueError):
    """A design matrix that must have full column rank does not."""


class TuningError(RuntimeError):
    """A harness-level failure; the message names the failing instance."""
