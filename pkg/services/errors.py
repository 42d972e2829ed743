from typing import Optional, Tuple


class OrnamentError(Exception):
    """Base class for every error raised by the ornament toolkit."""


class DimensionMismatch(OrnamentError):
    """Lengths, shapes or ambient dimensions do not fit together."""


class ContractViolation(OrnamentError):
    """A precondition of an operation does not hold."""


class CoincidentTargets(ContractViolation):
    """Trivial-ornament targets are not pairwise distinct."""


class RetryBudgetExceeded(OrnamentError):
    """A genericity retry loop ran out of attempts."""


class NonGenericDirection(OrnamentError):
    """The ray direction is not a regular value of the product map."""

    def __init__(self, facets: Tuple[int, ...], reason: str):
        super().__init__(f"direction is not generic at facet triple {facets}: {reason}")
        self.facets = facets
        self.reason = reason


class NonGenericTrack(OrnamentError):
    """A cell triple of a homotopy track is not in general position."""

    def __init__(self, interval: int, cells: Tuple[int, ...], reason: str):
        super().__init__(f"track is not generic in interval {interval} at cells {cells}: {reason}")
        self.interval = interval
        self.cells = cells
        self.reason = reason


class DocumentError(OrnamentError):
    """An interchange document could not be parsed."""

    def __init__(self, message: str, location: Optional[str] = None):
        super().__init__(f"{location}: {message}" if location else message)
        self.message = message
        self.location = location
