"""Random feature map surrogates for chaotic dynamics.

Trains one-step surrogate propagators whose hidden weights are drawn from
the data-defined good region via hit-and-run samplers, scores them with
Lyapunov-scaled forecast times, and provides a gradient-descent
single-layer-network baseline plus a config-driven experiment runner.
"""

from goodweights._kernels import HAVE_COMPILED_CORE

__version__ = "0.1.0"

__all__ = ["HAVE_COMPILED_CORE", "__version__"]
