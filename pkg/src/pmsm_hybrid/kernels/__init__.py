"""Hot kernels of the post-processor, compiled when available.

The Cython extension ``_ckernels`` is used if it was built; otherwise the
numpy implementation in ``_pykernels`` is selected. Set
``PMSM_HYBRID_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pykernels as python_backend

try:
    if os.environ.get("PMSM_HYBRID_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-python backend requested")
    from . import _ckernels as compiled_backend
except ImportError:
    compiled_backend = None

backend = compiled_backend if compiled_backend is not None else python_backend
BACKEND_NAME = "cython" if compiled_backend is not None else "python"

bilinear = backend.bilinear
best_feasible = backend.best_feasible
limit_search = backend.limit_search
min_loss_search = backend.min_loss_search
short_circuit = backend.short_circuit

__all__ = [
    "BACKEND_NAME",
    "backend",
    "best_feasible",
    "bilinear",
    "compiled_backend",
    "limit_search",
    "min_loss_search",
    "python_backend",
    "short_circuit",
]
