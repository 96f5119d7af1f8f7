"""Backend selection for the grid kernels.

The compiled extension is preferred; set ``RHOMBFORM_PURE=1`` to force the
pure-Python implementation (the benchmark and the parity tests do this).
"""
from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("RHOMBFORM_PURE") == "1":
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py
        BACKEND = "python"

label = _impl.label
bfs_distances = _impl.bfs_distances
