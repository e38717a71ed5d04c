"""Kernel backend selection.

Hot per-pixel kernels ship in two equivalent implementations: a numba
``@njit`` version and a vectorized pure-numpy fallback.  The default is
numba when importable; setting the environment variable
``AKIRA_KIT_NO_NUMBA=1`` (or installing without numba) selects the numpy
path.  Callers can also force a backend per call, which is what the test
suite uses to compare the two implementations against each other.
"""

import os

_FALSEY = ("", "0", "false", "no", "off")


def _env_disabled() -> bool:
    return os.environ.get("AKIRA_KIT_NO_NUMBA", "").strip().lower() not in _FALSEY


try:
    if _env_disabled():
        raise ImportError("numba disabled via AKIRA_KIT_NO_NUMBA")
    from numba import njit, prange

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via AKIRA_KIT_NO_NUMBA
    njit = None
    prange = range
    HAVE_NUMBA = False

DEFAULT_BACKEND = "numba" if HAVE_NUMBA else "numpy"


def resolve_backend(backend=None) -> str:
    """Map an optional backend request onto {'numba', 'numpy'}.

    ``None`` picks the process default.  Requesting numba when it is
    unavailable raises instead of silently degrading, so benchmark numbers
    always mean what they say.
    """
    if backend is None:
        return DEFAULT_BACKEND
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not available")
    return backend


def set_num_threads(n: int) -> int:
    """Clamp ``n`` to numba's thread ceiling and apply it.

    Returns the thread count actually in effect.  A no-op (returning 1)
    on the pure-numpy path, which is single-threaded by construction.
    """
    if not HAVE_NUMBA:
        return 1
    import numba

    n = max(1, min(int(n), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n)
    return n
