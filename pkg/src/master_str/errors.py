"""Exception hierarchy shared by all modules."""


class MasterSTRError(Exception):
    """Base class for every error raised by this package."""


class BadDomain(MasterSTRError, ValueError):
    """An argument lies outside the domain where the formula is defined."""


class NonConvergent(MasterSTRError, ArithmeticError):
    """A series or iteration hit its term/iteration cap before converging."""


class PoleHit(MasterSTRError, ArithmeticError):
    """A denominator vanished (within tolerance) at the requested point."""


class QuadratureNotConverged(NonConvergent):
    """Point doubling changed the quadrature result by more than rel_tol."""


class PoleOnContour(PoleHit):
    """The integrand is singular on (or too close to) the integration contour."""


class LogBranchCross(MasterSTRError, ArithmeticError):
    """A logarithm could not be continued along the integration path."""


class NoConvergence(NonConvergent):
    """Newton iteration failed; ``residual`` carries the last residual."""

    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual


class DegenerateSaddle(MasterSTRError, ArithmeticError):
    """Second derivative of the action vanishes at the stationary point."""


class DegenerateDenominator(MasterSTRError, ZeroDivisionError):
    """A closed-form expression has a vanishing denominator."""


class BranchAmbiguity(MasterSTRError, ArithmeticError):
    """A fractional power base sits on the branch cut."""


class CurveViolation(MasterSTRError, ValueError):
    """A chiral Potts rapidity is not on the algebraic curve."""


class BadInput(MasterSTRError, ValueError):
    """Inputs are individually valid but jointly inconsistent."""


class NotAStar(MasterSTRError, ValueError):
    """A site does not match the star side of a star-triangle move."""


class TooManyInternalSites(MasterSTRError, ValueError):
    """Nested quadrature was requested for more internal sites than allowed."""


class FitUnstable(MasterSTRError, ArithmeticError):
    """An asymptotic extrapolation is not stable across the epsilon sequence."""


class ConfigError(MasterSTRError, ValueError):
    """A CLI configuration could not be parsed or validated."""
