"""Risk-averse sample average approximation with explicit deviation bounds.

Submodules: ``dist`` (sources, empirical laws, moments), ``goal`` (goal
functions and envelopes), ``risk`` (risk functionals), ``saa`` (solvers),
``entropy`` and ``bounds`` (deviation bounds), ``harness`` (Monte Carlo
experiments) and ``cli``.
"""

from ._kernels import BACKEND as _BACKEND
from .errors import (
    ConfigurationError,
    DivergenceError,
    DomainError,
    SaarbError,
    UnsupportedProblemError,
)

__version__ = "0.1.0"

KERNEL_BACKEND = _BACKEND.name

__all__ = [
    "ConfigurationError",
    "DivergenceError",
    "DomainError",
    "KERNEL_BACKEND",
    "SaarbError",
    "UnsupportedProblemError",
    "__version__",
]
