"""Backend selection for the hot kernels.

Kernels are written twice: an explicit-loop version compiled with
``numba.njit`` and a vectorized numpy version.  Set ``PHOTON_ROUTER_NO_NUMBA=1``
(before import) to force the numpy path, e.g. for debugging or on platforms
without numba.
"""

import os

_FLAG = "PHOTON_ROUTER_NO_NUMBA"

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get(_FLAG, "").strip().lower() not in (
    "1",
    "true",
    "yes",
    "on",
)


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, identity otherwise.

    The decorated function is compiled even when the numpy backend is
    selected so tests and the benchmark can compare both paths.
    """
    if not HAVE_NUMBA:
        if args and callable(args[0]):
            return args[0]
        return lambda f: f
    kwargs.setdefault("cache", True)
    return numba.njit(*args, **kwargs)


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
