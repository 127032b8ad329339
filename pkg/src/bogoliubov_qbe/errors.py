"""Exception types shared across the solver."""


class DomainError(ValueError):
    """An argument lies outside the domain of a map (negative momentum, alpha past a pole, ...)."""


class NumericError(ArithmeticError):
    """A numerical procedure produced non-finite values or failed to converge."""


class ConfigurationError(ValueError):
    """Inconsistent configuration: grid/table mismatch, bad sizes, under-resolved quadrature."""
