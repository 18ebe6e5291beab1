"""Row-wise empirical risk kernels with a compiled core and a numpy fallback.

The compiled extension is used when it imports; ``SAARB_KERNELS=python``
forces the fallback.
"""

import os
from types import SimpleNamespace

import numpy as np

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

PYTHON = SimpleNamespace(name="python", **{k: getattr(_pykernels, k) for k in (
    "row_mean", "row_semideviation", "row_avar", "row_oce_avar", "row_oce_golden", "row_oce_entropic")})


def _c_oce_golden(M, phi_star, lo, hi, tol):
    return _pykernels.row_oce_golden(M, phi_star, lo, hi, tol)


if _ckernels is not None:
    COMPILED = SimpleNamespace(
        name="compiled",
        row_mean=_ckernels.row_mean,
        row_semideviation=_ckernels.row_semideviation,
        row_avar=_ckernels.row_avar,
        row_oce_avar=_ckernels.row_oce_avar,
        row_oce_golden=_c_oce_golden,
        row_oce_entropic=_ckernels.row_oce_entropic,
    )
else:
    COMPILED = None


def available() -> list:
    return [b.name for b in (COMPILED, PYTHON) if b is not None]


def get_backend(name: str = "auto"):
    if name == "python":
        return PYTHON
    if name in ("compiled", "c"):
        if COMPILED is None:
            raise ImportError("compiled kernels are not built; run `pip install -e .`")
        return COMPILED
    return COMPILED if COMPILED is not None else PYTHON


_choice = os.environ.get("SAARB_KERNELS", "auto").lower()
BACKEND = get_backend("python" if _choice == "python" else "auto")


def as_rows(M) -> np.ndarray:
    return np.ascontiguousarray(M, dtype=np.float64)
