"""Exception hierarchy shared by the whole package."""


class WageringError(Exception):
    """Base class for every error raised by :mod:`wagering`."""


class DimensionError(WageringError, ValueError):
    """Mismatched agent counts, outcome counts or wager vectors."""


class InvalidPredictionError(WageringError, ValueError):
    pass


class DegenerateNoiseError(WageringError, ValueError):
    """Error rates with ``e0 + e1 == 1`` carry no information about the outcome."""


class RankError(WageringError, ValueError):
    """Confusion matrix is singular (or numerically so)."""


class EnumerationCapError(WageringError):
    """Exact enumeration would exceed the configured cap; use the sampled form."""


class InvalidBaseMechanismError(WageringError, ValueError):
    """Lottery wrapper received a base mechanism that is not individually rational."""


class AlgorithmInconsistencyError(WageringError, ArithmeticError):
    """Error-rate selection produced a value outside ``(0, 0.5]``."""


class InfeasibleFlipError(WageringError, ValueError):
    """Target surrogate error rates cannot be reached by flipping a noisy outcome."""


class WagerViolationError(WageringError):
    """A payoff distribution lets some agent lose more than its wager.

    The offending distribution (built without validation) is attached as
    ``distribution`` so callers can inspect or rescale it.
    """

    def __init__(self, message, distribution=None):
        super().__init__(message)
        self.distribution = distribution


class ConfigError(WageringError, ValueError):
    pass
