"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of a function."""


class RegimeError(ValueError):
    """A bound was requested outside the parameter regime where it holds."""


class ConvergenceError(ArithmeticError):
    """A series or quadrature did not meet its error target within budget."""


class NonIntegrableError(ConvergenceError):
    """An integrand does not decay at an infinite end of its domain."""
