"""Deformed flat noncommutative calculi, the metrics they induce, and checks on them."""

from .errors import NCWarpError

__version__ = "0.1.0"

__all__ = ["NCWarpError", "__version__"]
