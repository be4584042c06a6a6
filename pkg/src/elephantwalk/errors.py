"""Numerical failure types (mapped to exit code 3 by the CLI)."""
import math


class NumericalError(ArithmeticError):
    pass


class QuadratureError(NumericalError):
    """Adaptive quadrature missed its tolerance; carries the achieved error."""

    def __init__(self, message: str, value: float = math.nan, error: float = math.inf):
        super().__init__(message)
        self.value = value
        self.error = error


class FactorizationError(NumericalError):
    pass
