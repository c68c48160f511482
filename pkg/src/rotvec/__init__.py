"""Rotation vectors of periodic flows on the torus."""
from ._accel import USE_NUMBA

__version__ = "0.1.0"
__all__ = ["USE_NUMBA", "__version__"]
