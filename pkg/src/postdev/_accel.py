"""Optional numba acceleration.

Set ``POSTDEV_NUMBA=0`` in the environment to run every kernel through its
pure-numpy twin. The flag is read once, at import time.
"""

import logging
import os

_FLAG = os.environ.get("POSTDEV_NUMBA", "1").strip().lower()
_WANT_NUMBA = _FLAG not in ("0", "false", "no", "off")

try:
    if not _WANT_NUMBA:
        raise ImportError("disabled by POSTDEV_NUMBA")
    import numba

    logging.getLogger("numba").setLevel(logging.WARNING)
    if "NUMBA_THREADING_LAYER" not in os.environ:
        # always available; the default probe warns about old TBB builds
        numba.config.THREADING_LAYER = "workqueue"
    NUMBA_ENABLED = True
    prange = numba.prange
except ImportError:
    numba = None
    NUMBA_ENABLED = False
    prange = range


def njit(func=None, **kwargs):
    """``numba.njit`` when available and enabled, identity otherwise."""
    kwargs.setdefault("cache", True)

    def wrap(f):
        if NUMBA_ENABLED:
            return numba.njit(**kwargs)(f)
        return f

    if func is not None:
        return wrap(func)
    return wrap
