"""Markov processes in random environments.

Combined generators that couple a base process to a randomly evolving
environment, their closed-form invariant measures, and numerical checks of
those measures (exact balance algebra, adjoint and quadrature residuals,
Monte Carlo occupation measures).
"""

from ._common import Divergent, is_divergent

__version__ = "0.1.0"

__all__ = ["Divergent", "is_divergent", "__version__"]
