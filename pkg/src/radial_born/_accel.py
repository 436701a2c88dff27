"""Optional numba acceleration.

The hot kernels in :mod:`radial_born.kernels` exist twice: a numba-compiled
loop version and a vectorized pure-numpy version. Which one runs is decided
at import time by the environment:

``RADIAL_BORN_NUMBA=0``
    force the numpy path even when numba is importable.
``RADIAL_BORN_THREADS=<n>``
    number of threads for the parallel numba kernels.
"""

import os

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False


def _env_flag(name, default=True):
    value = os.environ.get(name)
    if value is None:
        return default
    return value.strip().lower() not in ("0", "false", "no", "off", "")


USE_NUMBA = HAVE_NUMBA and _env_flag("RADIAL_BORN_NUMBA")


def worker_count():
    """Worker count from ``RADIAL_BORN_THREADS``, else the number of cores."""
    value = os.environ.get("RADIAL_BORN_THREADS")
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            pass
    return os.cpu_count() or 1


def njit(*args, **kwargs):
    """``numba.njit`` when available, identity decorator otherwise."""
    if HAVE_NUMBA:
        return numba.njit(*args, **kwargs)

    def wrap(func):
        return func

    return wrap


if HAVE_NUMBA:
    prange = numba.prange
    # the bundled TBB is often too old; try OpenMP first
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
    try:
        numba.set_num_threads(min(worker_count(), numba.config.NUMBA_NUM_THREADS))
    except ValueError:  # pragma: no cover
        pass
else:  # pragma: no cover
    prange = range


def set_workers(n: int) -> int:
    """Set the thread count of the parallel kernels; returns the value in effect."""
    n = max(1, int(n))
    if HAVE_NUMBA:
        n = min(n, numba.config.NUMBA_NUM_THREADS)
        numba.set_num_threads(n)
    return n
