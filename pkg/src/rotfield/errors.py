"""Exception hierarchy.

Domain errors mean the requested physical configuration has no valid
solution of the requested kind. Verification errors mean a numerical
cross-check disagreed with the constructed solution.
"""


class RotfieldError(Exception):
    """Base class for all package errors."""


class DomainError(RotfieldError):
    """Parameters fall outside the region where the construction applies."""


class VerificationError(RotfieldError):
    """An independent numerical check failed."""


class ForbiddenBand(DomainError):
    """f**2 lies strictly inside [4 g1, 4 g2]; energies are complex."""


class DegenerateBoundary(DomainError):
    """f**2 sits on a band edge, where the Gaussian is not square integrable."""


class NoIntegrableBranch(DomainError):
    """No algebraic root of the coefficient system is square integrable."""


class ComplexEnergy(DomainError):
    """An energy level acquired a non-negligible imaginary part."""


class NonPositiveNorm(DomainError):
    """The normalization constant is not real and positive."""


class ZeroFrequency(DomainError):
    """Rotation frequency is zero, so the wave number and E0 are undefined."""


class NoTwoPositiveRoots(DomainError):
    """The spectral cubic has fewer than two positive real roots."""


class SpectralPole(DomainError):
    """The root coincides with the pole of the d2 coefficient."""


class DenominatorZero(DomainError):
    """The mixing-angle formula has a vanishing denominator."""


class UnphysicalMixing(DomainError):
    """The mixing-angle formula produced |cos 2 theta| > 1."""


class QuadratureNotConverged(VerificationError):
    """Node doubling did not reach the requested tolerance."""


class NoAnnihilatingVariant(VerificationError):
    """No sign convention of the Dirac operator annihilates the state."""


class SolverDiverged(VerificationError):
    """The implicit linear solve inside a time step failed."""
