"""Adaptive Hermite spectral solver for the heat equation on the real line.

The scaling factor of the Hermite-function basis can be driven by an exact
law, a fixed schedule, or a regressor trained on synthetic profiles.
"""

from .hermite_core import HermiteBasis, hermite_basis

__version__ = "0.1.0"

__all__ = ["HermiteBasis", "hermite_basis", "__version__"]
