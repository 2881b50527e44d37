"""Shared exception types."""


class CovcurvError(Exception):
    """Base class for all library errors."""


class ChartError(CovcurvError):
    """A manifold chart violates the graph-at-origin requirements."""


class DomainValidityError(CovcurvError):
    """A neighborhood scale or plane is invalid for the given chart."""


class TransversalityError(DomainValidityError):
    """The cylinder plane meets the tangent space degenerately."""


class FitError(CovcurvError):
    """An expansion fit is rank deficient or otherwise unusable."""


class SpectralError(CovcurvError):
    """Eigensolver input is rejected (asymmetry, non-convergence)."""
