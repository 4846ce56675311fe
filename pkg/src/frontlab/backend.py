"""Kernel backend selection: compiled extension if present, else pure Python.

Set FRONTLAB_PURE=1 to force the Python kernels (used by the benchmark
and the backend-equivalence tests).
"""

import os

from . import _kernels_py

if os.environ.get("FRONTLAB_PURE"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _kernels_py

BACKEND = _impl.BACKEND
HAVE_EXTENSION = BACKEND == "cython"

dijkstra_grid = _impl.dijkstra_grid
fmm_grid = _impl.fmm_grid
hj_step = _impl.hj_step
stationary_step = _impl.stationary_step
effective_step = _impl.effective_step
