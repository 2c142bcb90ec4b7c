"""Kibble-Zurek benchmarking of digitized quantum annealing.

Trotterized transverse-field Ising anneals on state vectors, a trajectory
noise model, exact spectral oracles and scaling analysis.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND  # noqa: E402

__all__ = ["BACKEND", "__version__"]
