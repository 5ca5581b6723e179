"""Exception types raised across the package.

Every error derives from :class:`CarkovError` so callers can catch the
package's failures with a single except clause. The command line tool maps
these to exit code 2.
"""


class CarkovError(Exception):
    """Base class for all errors raised by this package."""


# ---------------------------------------------------------------------------
# model construction

class NonPositiveImaginaryPart(CarkovError):
    """A root was given with imaginary part <= 0."""


class UnpairedRoot(CarkovError):
    """The root multiset is not closed under reflection across the imaginary axis."""


class NonPositiveScale(CarkovError):
    """The polynomial scale factor must be strictly positive."""


# ---------------------------------------------------------------------------
# covariance analysis

class NearDegenerateRoots(CarkovError):
    """Two distinct roots are too close for a stable partial-fraction expansion.

    Merge them into a true multiplicity instead.
    """


class OrderTooHigh(CarkovError):
    """A derivative order was requested beyond what exists at the origin."""


class NotConverged(CarkovError):
    """The quadrature oracle could not certify the requested accuracy."""


class SingularGram(CarkovError):
    """The Gram matrix of derivative moments is numerically singular."""


# ---------------------------------------------------------------------------
# Markov system assembly

class NonPositiveDiffusion(CarkovError):
    """The squared diffusion coefficient came out non-positive."""


class NotPositiveDefinite(CarkovError):
    """The stationary covariance matrix is not positive definite."""


# ---------------------------------------------------------------------------
# simulation

class FactorizationFailure(CarkovError):
    """The innovation covariance has a significantly negative eigenvalue."""


class UnstableStep(CarkovError):
    """The Euler update matrix has spectral radius >= 1 at the requested dt."""


class TailTooHeavy(CarkovError):
    """The spectral truncation radius leaves too much mass outside the grid."""


class EqualRates(CarkovError):
    """The two-sided kernel has equal decay rates; use the confluent form."""


# ---------------------------------------------------------------------------
# statistical validation

class PathTooShort(CarkovError):
    """The sample path is too short for the requested empirical check."""


class DegenerateConditioning(CarkovError):
    """The conditioning block of the sample covariance is singular."""
