"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy
implementation is used. Set ``QUADBELL_PURE_PYTHON=1`` to force the
fallback.
"""

import os

import numpy as np

from quadbell import _kernels_py

if os.environ.get("QUADBELL_PURE_PYTHON", "") not in ("", "0"):
    _compiled = None
else:
    try:
        from quadbell import _kernels as _compiled
    except ImportError:
        _compiled = None

BACKEND = "cython" if _compiled is not None else "numpy"


def family_apply(base, blocks, X, backend=None):
    """Dispatch to the selected backend; see ``_kernels_py.family_apply``."""
    backend = backend or BACKEND
    base = np.ascontiguousarray(base, dtype=np.complex128)
    blocks = np.ascontiguousarray(blocks, dtype=np.complex128)
    X = np.ascontiguousarray(X, dtype=np.complex128)
    if backend == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not available")
        return _compiled.family_apply(base, blocks, X)
    if backend == "numpy":
        return _kernels_py.family_apply(base, blocks, X)
    raise ValueError(f"unknown backend {backend!r}")
