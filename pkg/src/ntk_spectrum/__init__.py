"""Smallest eigenvalues of ReLU neural tangent kernels on the sphere.

Modules:

* ``sphere``: uniform data on the sphere, separation statistics, conditioning
* ``specfun``: Gegenbauer polynomials, harmonic dimensions, Funk-Hecke coefficients
* ``kernel_limit``: infinite-width kernels, Mercer series, harmonic Gram matrices
* ``bounds``: eigenvalue bound formulas, truncation selection, width requirements
* ``ntk``: finite-width shallow and deep NTK Gram matrices and diagnostics
* ``experiments``: seeded verification sweeps behind the ``ntk-spectrum`` CLI
"""

__version__ = "0.1.0"

from .errors import ConfigError, DomainError, GeneralPositionError, QuadratureError
from .linalg import EigenReport, KernelMatrix, min_eigenvalue
from .specfun import Activation
from .sphere import Dataset, SeparationStats, sample_uniform_sphere, separation_stats

__all__ = [
    "Activation", "ConfigError", "Dataset", "DomainError", "EigenReport",
    "GeneralPositionError", "KernelMatrix", "QuadratureError", "SeparationStats",
    "min_eigenvalue", "sample_uniform_sphere", "separation_stats",
]
