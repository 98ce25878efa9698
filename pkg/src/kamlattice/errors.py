"""Exception hierarchy.

``ValidationError`` marks malformed input (bad shapes, out-of-range
parameters); ``DomainError`` marks well-formed input on which the
mathematics does not apply (non-generic support, small divisors, complex
spectra where real ones are required). The CLI maps them to exit codes 2
and 3.
"""


class KamLatticeError(Exception):
    """Base class for all package errors."""


class ValidationError(KamLatticeError, ValueError):
    """Input failed a precondition check."""


class DomainError(KamLatticeError):
    """Input is valid but outside the domain where the operation is defined."""


class NonGenericError(DomainError):
    """The support set violates the genericity conditions."""


class AmbiguousClassError(DomainError):
    """A lattice site belongs to more than one resonance locus."""

    def __init__(self, site, classes):
        self.site = site
        self.classes = list(classes)
        super().__init__(f"site {tuple(site)} is in several classes: {self.classes}")


class RepeatedEigenvalueError(DomainError):
    """Eigenvalues closer than the distinctness tolerance."""


class ComplexSpectrumError(DomainError):
    """A block whose eigenvalues must be real has a complex pair."""


class IntractableError(ValidationError):
    """An exhaustive enumeration request is too large."""


class SmallDivisorError(DomainError):
    """A homological divisor fell below the Melnikov guard.

    Attributes
    ----------
    key : tuple
        ``(sigma, ell, m1, m2, n)`` of the offending coefficient.
    value : float
        The divisor.
    threshold : float
        The guard it failed.
    """

    def __init__(self, key, value, threshold):
        self.key = key
        self.value = value
        self.threshold = threshold
        super().__init__(
            f"small divisor {value:.3e} < {threshold:.3e} at key {key}"
        )
