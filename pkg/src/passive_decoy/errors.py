"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of a numerical function."""


class TruncationError(ArithmeticError):
    """A truncated photon-number distribution lost more mass than allowed."""


class DegenerateBranchError(ArithmeticError):
    """A detector-conditioned branch has zero probability and is undefined."""


class CertificateError(ArithmeticError):
    """A decoy-state estimate divides by a vanishing determinant."""
