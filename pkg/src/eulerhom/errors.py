"""Exception types shared across the package."""


class EulerhomError(Exception):
    """Base class for all package-specific errors."""


class DomainError(EulerhomError, ValueError):
    """Input outside the mathematical domain (bad exponent range, x <= 0, ...)."""


class NoEllipticOrbit(DomainError):
    """Pressure level outside the open range carrying closed orbits."""


class DegenerateOrbit(DomainError):
    """Level too close to the center or the boundary to resolve an orbit."""


class ToleranceNotMet(EulerhomError, RuntimeError):
    """A numerical routine could not reach the requested accuracy."""


class NoSolution(EulerhomError):
    """No 2*pi/n-periodic solution exists for the requested winding."""


class ContinuumCase(EulerhomError):
    """Every level is periodic (isochronous system); a single level must be chosen."""


class ClosureFailure(EulerhomError):
    """Reconstructed profile failed to close up over one angular revolution."""
