"""Kernel backend selection.

The compiled extension is used when it imports; otherwise, or when
``DOMSCHED_PURE_PYTHON=1`` is set, the numpy fallback is used.
"""
import os

import numpy as np

from . import _kernels_py

BACKENDS = {"python": _kernels_py}

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None
else:
    BACKENDS["compiled"] = _compiled

if _compiled is not None and os.environ.get("DOMSCHED_PURE_PYTHON", "") not in ("1", "true", "yes"):
    BACKEND = "compiled"
else:
    BACKEND = "python"

_impl = BACKENDS[BACKEND]


def receiver_sweep(tables, tx_self, tx_int):
    c = np.ascontiguousarray
    return _impl.receiver_sweep(c(tables, dtype=float), c(tx_self, dtype=float), c(tx_int, dtype=float))


def exhaustive_search(finite, dead, partner):
    c = np.ascontiguousarray
    return _impl.exhaustive_search(c(finite, dtype=float), c(dead, dtype=np.int64),
                                   c(partner, dtype=np.int64))


def get_backend(name: str | None = None):
    """Kernel module by name (``"compiled"`` or ``"python"``); default is the active one."""
    if name is None:
        return _impl
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} is not available") from None
