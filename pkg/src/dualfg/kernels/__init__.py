"""Hot per-pixel kernels with a numba path and a pure-numpy fallback.

The numba path is used when numba imports cleanly, unless the
``DUALFG_DISABLE_NUMBA`` environment variable is set to a truthy value
(``1``, ``true``, ``yes``). The choice is made once at import time; both
backends stay importable as :mod:`dualfg.kernels._numpy` and
:mod:`dualfg.kernels._numba` for tests and benchmarks.
"""
import os

from . import _numpy

_DISABLE = os.environ.get("DUALFG_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _DISABLE:
        raise ImportError("numba disabled by DUALFG_DISABLE_NUMBA")
    from . import _numba as _impl
    NUMBA_AVAILABLE = True
except ImportError:
    _impl = _numpy
    NUMBA_AVAILABLE = False

BACKEND = "numba" if NUMBA_AVAILABLE else "numpy"

min_filter = _impl.min_filter
erode = _impl.erode
dilate = _impl.dilate
label8 = _impl.label8
mog_update = _impl.mog_update

__all__ = [
    "BACKEND",
    "NUMBA_AVAILABLE",
    "min_filter",
    "erode",
    "dilate",
    "label8",
    "mog_update",
]
