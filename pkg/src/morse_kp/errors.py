"""Exception types shared across the package."""


class DomainError(ValueError):
    """Input outside the domain where a quantity is defined."""


class NumericalError(ArithmeticError):
    """A numerical kernel produced a non-finite or otherwise unusable result."""


class ConsistencyError(NumericalError):
    """Two independent routes to the same quantity disagree beyond tolerance."""
