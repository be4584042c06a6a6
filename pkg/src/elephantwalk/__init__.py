"""Elephant random walks, self-similar Gaussian kernels and LIL diagnostics."""
from .errors import FactorizationError, NumericalError, QuadratureError
from .rng import NORMAL_TRANSFORM, StreamKey, parse_seed

__version__ = "0.1.0"

__all__ = [
    "FactorizationError",
    "NORMAL_TRANSFORM",
    "NumericalError",
    "QuadratureError",
    "StreamKey",
    "parse_seed",
    "__version__",
]
