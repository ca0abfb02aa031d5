"""Exception and warning classes."""


class HPZError(Exception):
    """Base class for every error raised by hpzpair."""


class InvalidInput(HPZError, ValueError):
    """Malformed parameters, scenario files or frame tags."""


class FrameError(InvalidInput):
    """A covariance matrix was passed in the wrong phase-space frame."""


class DomainError(HPZError, ValueError):
    """Argument outside the domain where a formula is defined."""


class PoleError(DomainError):
    """Digamma evaluated at a non-positive integer."""


class StabilityError(HPZError):
    """Parameters outside the stable region of the Markovian dynamics."""


class NumericalError(HPZError, ArithmeticError):
    """A numerical procedure failed or produced an untrustworthy result."""


class NonConvergence(NumericalError):
    pass


class DegenerateRootsError(NumericalError):
    """Two roots of the cubic coincide; the closed forms divide by their difference."""


class ConfluentSpectrumError(NumericalError):
    """The drift matrix is not diagonalisable (critical damping or omega_d = 0)."""


class DivergenceError(NumericalError):
    """A t -> infinity limit does not exist."""


class NonPhysicalSpectrum(NumericalError):
    pass


class ImaginaryResidue(NumericalError):
    """A quantity that must be real kept a non-negligible imaginary part."""


class StepSizeError(InvalidInput):
    pass


class RegimeMismatch(UserWarning):
    """Approximate regime requested outside its window of validity."""


class GridTooCoarse(UserWarning):
    """Transition events closer than three grid steps; some may be missed."""
