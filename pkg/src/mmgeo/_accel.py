"""Backend selection for the hot kernels.

Set ``MMGEO_DISABLE_NUMBA=1`` to force the pure-numpy/python fallbacks.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

_flag = os.environ.get("MMGEO_DISABLE_NUMBA", "0").strip().lower()
USE_NUMBA = numba is not None and _flag in ("", "0", "false", "no", "off")
BACKEND = "numba" if USE_NUMBA else "numpy"


# lets min/sum reductions vectorize while keeping inf semantics
REDUCE_FLAGS = {"reassoc", "nnan", "nsz"}


def compile_loop(fn, fastmath=False):
    """Compile ``fn`` with numba (``nopython``, cached); requires numba importable."""
    if numba is None:
        raise RuntimeError("numba is not installed")
    return numba.njit(cache=True, nogil=True, fastmath=fastmath)(fn)


def pick(loop_fn, numpy_fn, fastmath=False):
    """Return the compiled loop kernel when numba is active, else the fallback."""
    if USE_NUMBA:
        return compile_loop(loop_fn, fastmath)
    return numpy_fn


def set_threads(n):
    if n and USE_NUMBA:
        import warnings

        with warnings.catch_warnings():
            # the threading layer probe complains about old TBB builds; any layer will do
            warnings.simplefilter("ignore", numba.NumbaWarning)
            numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))
