"""Online polarization/disagreement minimisation on Friedkin-Johnsen networks."""

from .kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
