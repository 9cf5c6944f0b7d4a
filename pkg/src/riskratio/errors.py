"""Shared exception types."""


class ValidationError(ValueError):
    """Invalid input: malformed file, bad flag combination, violated precondition."""


class EstimationError(RuntimeError):
    """A model fit or estimator evaluation failed."""


class ConvergenceError(EstimationError):
    """Iterative fit stopped before reaching its tolerance."""


class SeparationError(EstimationError):
    """Logistic fit diverged: the score cannot vanish with bounded coefficients."""


class RankDeficiencyError(EstimationError):
    """Design matrix does not have full column rank."""
