"""Exception hierarchy shared across the package."""


class PlanarIsingError(Exception):
    """Base class for all errors raised by planar_ising."""


class NonPlanar(PlanarIsingError):
    pass


class MissingEdge(PlanarIsingError, KeyError):
    pass


class EmbeddingMismatch(PlanarIsingError):
    pass


class NonZeroField(PlanarIsingError):
    pass


class NumericalFailure(PlanarIsingError):
    pass


class TooLarge(PlanarIsingError):
    pass


class NotRealizable(PlanarIsingError, ValueError):
    pass


class InfiniteDivergence(PlanarIsingError):
    pass


class BadValue(PlanarIsingError, ValueError):
    pass


class BadDims(PlanarIsingError, ValueError):
    pass


class InvalidTargets(PlanarIsingError, ValueError):
    pass


class NotConverged(PlanarIsingError):
    """Raised only on request; fits normally return ``converged=False``."""
