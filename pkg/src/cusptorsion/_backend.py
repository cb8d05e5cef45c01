"""Backend selection for the hot numeric kernels.

The jitted path is used whenever numba imports cleanly; set
``CUSP_TORSION_NUMBA=0`` in the environment to force the pure-numpy
fallback (useful for debugging and for ``scripts/benchmark_backends.py``).
``CUSP_TORSION_THREADS`` caps the numba threading layer.
"""

import os

_flag = os.environ.get("CUSP_TORSION_NUMBA", "1").strip().lower()
_want_numba = _flag not in ("0", "false", "no", "off")

using_numba = False
numba = None
if _want_numba:
    try:
        import numba

        using_numba = True
    except ImportError:
        numba = None

if using_numba:
    _threads = os.environ.get("CUSP_TORSION_THREADS")
    if _threads:
        try:
            numba.set_num_threads(max(1, int(_threads)))
        except (ValueError, RuntimeError):
            pass


def njit(func):
    """Compile with numba when the backend is active, else return as-is."""
    if using_numba:
        return numba.njit(cache=True)(func)
    return func
