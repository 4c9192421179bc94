"""Optional numba acceleration.

Kernels in :mod:`aqiforecast.kernels` come in two flavours: a numba ``@njit``
version and a pure-numpy version. The numba path is used when numba imports
cleanly and ``AQIFORECAST_DISABLE_NUMBA`` is unset (or ``0``/``false``).
"""

import os

_FLAG = "AQIFORECAST_DISABLE_NUMBA"


def _disabled_by_env() -> bool:
    return os.environ.get(_FLAG, "").strip().lower() not in ("", "0", "false", "no")


try:
    if _disabled_by_env():
        raise ImportError(f"numba disabled via {_FLAG}")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda fn: fn


def backend() -> str:
    return "numba" if HAVE_NUMBA else "numpy"
