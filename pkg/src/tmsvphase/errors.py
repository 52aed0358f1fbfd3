"""Exception types shared across the package."""


class TmsvPhaseError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(TmsvPhaseError, ValueError):
    """A physical or numerical parameter is out of its valid range."""


class TableConstructionError(TmsvPhaseError):
    """A likelihood table could not be built (e.g. sampling grid too coarse)."""


class OracleScaleError(TmsvPhaseError):
    """A brute-force oracle was asked for a photon number beyond its design scale."""


class DegenerateUpdateError(TmsvPhaseError):
    """A Bayes update produced non-positive total probability mass."""


class CapacityError(TmsvPhaseError):
    """Posterior truncation at the order cap would discard non-negligible mass."""


class UndefinedEstimateError(TmsvPhaseError):
    """The posterior carries no phase signal (zero sharpness), so no estimate exists."""


class PrecisionCapError(TmsvPhaseError):
    """Target MSE precision was not reached before the record cap.

    Carries the statistics accumulated so far in ``stats``.
    """

    def __init__(self, message, stats):
        super().__init__(message)
        self.stats = stats


class VerificationError(TmsvPhaseError):
    """A self-verification check failed."""
