"""Interference kernels: compiled extension with a pure-NumPy fallback.

The compiled backend is picked at import time when the extension built;
set ``D2DSCHED_FORCE_PY=1`` to force the NumPy fallback.
"""

import os

import numpy as np

from . import _interference_py

BACKEND = "python"
_impl = _interference_py
if os.environ.get("D2DSCHED_FORCE_PY") != "1":
    try:
        from . import _interference as _impl  # type: ignore[no-redef]
        BACKEND = "cython"
    except ImportError:
        pass

grouped_interference = _impl.grouped_interference


def backends():
    """Available backend name -> kernel function."""
    found = {"python": _interference_py.grouped_interference}
    try:
        from . import _interference
        found["cython"] = _interference.grouped_interference
    except ImportError:
        pass
    return found


def pack_groups(group, n_groups):
    """Sort source indices by group for the kernel's CSR layout.

    Returns (order, starts, inv) where ``order`` permutes source arrays into
    group-sorted order, ``starts`` has length n_groups+1, and ``inv`` maps an
    original source index to its position in the sorted arrays.
    """
    group = np.asarray(group)
    order = np.argsort(group, kind="stable")
    counts = np.bincount(group, minlength=n_groups)
    starts = np.concatenate(([0], np.cumsum(counts))).astype(np.intp)
    inv = np.empty(group.shape[0], dtype=np.intp)
    inv[order] = np.arange(group.shape[0], dtype=np.intp)
    return order, starts, inv
