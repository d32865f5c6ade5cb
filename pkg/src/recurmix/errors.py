"""Exception hierarchy."""


class RecurmixError(Exception):
    """Base class for all library errors."""


class DomainError(RecurmixError, ValueError):
    """An argument lies outside the domain of the operation."""


class DimensionMismatchError(RecurmixError, ValueError):
    """A subset refers to a component the point does not have."""


class NotComputableError(RecurmixError):
    """No closed form or quadrature route exists for this target/subset pair.

    Callers are expected to fall back to a Monte Carlo estimate.
    """


class UnsupportedError(RecurmixError):
    """The requested operation needs a capability the target lacks."""


class InvalidStateError(RecurmixError, ValueError):
    """The chain state lies outside the support of the target."""


class SequencingError(RecurmixError, ValueError):
    """Observation indices did not increase strictly."""


class NoRecurrenceError(RecurmixError):
    """The chain never completed an A -> B -> A cycle.

    Attributes
    ----------
    n : int
        Number of observed iterations.
    """

    def __init__(self, n, message=None):
        self.n = n
        if message is None:
            message = (
                f"no completed A->B->A recurrence in {n} observed iterations; "
                "increase n_iter or move the subsets closer"
            )
        super().__init__(message)


class InsufficientReplicatesError(RecurmixError, ValueError):
    """Too few replicate groups to estimate a variance."""


class TruncationError(RecurmixError, ValueError):
    """A replicate is shorter than the requested truncation point."""


class DegenerateDataError(RecurmixError, ValueError):
    """Sample has no spread, so the fit is undefined."""


class ObserverError(RecurmixError):
    """An observer raised while consuming chain events."""


class ConfigError(RecurmixError, ValueError):
    """An experiment configuration failed validation."""
