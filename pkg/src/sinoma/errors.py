"""Exception types shared across the receiver pipeline."""


class SinomaError(Exception):
    """Base class for all library errors."""


class InvalidInputError(SinomaError, ValueError):
    """An argument violates a documented precondition."""


class RankDeficiencyError(SinomaError):
    """A least-squares system is numerically rank deficient.

    Carries ``condition``, the ratio of the largest to the smallest
    singular value of the coefficient matrix (``inf`` if the smallest
    is exactly zero).
    """

    def __init__(self, message: str, condition: float):
        super().__init__(message)
        self.condition = condition


class EstimationFailureError(SinomaError):
    """The subspace pipeline cannot produce frequency estimates.

    The Monte-Carlo harness records the affected trial as a total miss
    (empty detected set) instead of aborting a sweep.
    """


class DegenerateGainError(SinomaError):
    """A recovered gain row contains an exact zero, so log-domain
    statistics are undefined for that user."""


class PhaseAmbiguousError(SinomaError):
    """The phase of a user cannot be anchored (vanishing circular
    resultant or zero pilot gain)."""
