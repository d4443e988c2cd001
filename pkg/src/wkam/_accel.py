"""Optional numba acceleration.

Set ``WKAM_DISABLE_NUMBA=1`` to force the pure-numpy code paths.  The two paths
produce bit-identical results (same additions, same tie-breaking), so the flag
only changes speed.
"""

import os

_FLAG = os.environ.get("WKAM_DISABLE_NUMBA", "").strip().lower()
DISABLED_BY_ENV = _FLAG not in ("", "0", "false", "no")

# The TBB layer is probed first and warns on old TBB installs; the workqueue
# layer is always available and results do not depend on the layer.
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None

HAVE_NUMBA = _numba is not None
USE_NUMBA = HAVE_NUMBA and not DISABLED_BY_ENV


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, otherwise the identity decorator."""
    if HAVE_NUMBA:
        kwargs.setdefault("cache", True)
        return _numba.njit(*args, **kwargs)

    def deco(fn):
        return fn

    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return deco


if HAVE_NUMBA:
    prange = _numba.prange
else:  # pragma: no cover
    prange = range


def set_threads(n):
    """Set the numba worker count; a no-op on the numpy path."""
    if USE_NUMBA and n:
        _numba.set_num_threads(min(int(n), _numba.config.NUMBA_NUM_THREADS))


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
