class DataError(ValueError):
    """Input data is missing, malformed or violates a data invariant."""


class NumericalError(ArithmeticError):
    """A numerical routine could not produce a trustworthy result."""
