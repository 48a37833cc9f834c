"""Exception hierarchy.

Everything raised deliberately by the package derives from ``CyclrfError`` so
the command line front end can map failures onto exit codes.  Invariant
violations of user-supplied models and weights are ``ModelError``; numerical
breakdowns are ``NumericalError``.
"""


class CyclrfError(Exception):
    """Base class for all package errors."""


class ModelError(CyclrfError, ValueError):
    """A model, weight or configuration violates one of its invariants."""


class NumericalError(CyclrfError, ArithmeticError):
    """A numerical procedure could not deliver the requested result."""


class SingularPoint(NumericalError):
    """Density evaluated exactly at a singular frequency."""


class QuadratureFailure(NumericalError):
    """Adaptive quadrature did not reach its tolerance."""


class UnsupportedOrder(ModelError):
    """Bessel order or dimension outside the supported set."""


class NotIntegrable(ModelError):
    """A radial profile fails its L1/L2 or non-degeneracy checks."""


class MassNotFinite(ModelError):
    """The spectral density has infinite total mass."""


class ResolutionTooCoarse(NumericalError):
    """Spatial quadrature cannot resolve the shortest sampled wavelength."""


class IndexMismatch(ModelError):
    """Operation requested for a singularity index where it is undefined."""


class DomainError(ModelError):
    """Argument outside the domain of a closed-form expression."""


class DivergentLimitIntegral(NumericalError):
    """A radial integral defining the limit process diverges."""


class NotPositiveDefinite(NumericalError):
    """Covariance matrix could not be factorised even after jitter."""


class TooFewSamples(CyclrfError, ValueError):
    """Statistical test called with fewer samples than it supports."""
