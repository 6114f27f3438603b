"""Switch between the numba kernels and the pure-numpy fallback.

Setting ``CUPCF_DISABLE_NUMBA=1`` (or numba's own ``NUMBA_DISABLE_JIT=1``)
before import routes every kernel through numpy.  Individual calls can also
pick a backend explicitly with ``backend="numba"`` or ``backend="numpy"``.
"""

import os

_FALSE = {"", "0", "false", "no", "off"}


def _flag(name):
    return os.environ.get(name, "").strip().lower() not in _FALSE


try:
    if _flag("CUPCF_DISABLE_NUMBA") or _flag("NUMBA_DISABLE_JIT"):
        raise ImportError("numba disabled by environment")
    import numba

    HAVE_NUMBA = True
    njit = numba.njit(cache=False, nogil=True)
except ImportError:
    HAVE_NUMBA = False

    def njit(func):
        return None


BACKENDS = ("numba", "numpy")


def default_backend():
    return "numba" if HAVE_NUMBA else "numpy"


# Below this many user x item cells the BLAS-backed dense path outruns the
# sparse numba loops for the similarity kernels.
DENSE_CELLS_LIMIT = 20_000_000


def resolve_backend(backend=None, dense_cells=None):
    """Map ``None``/``"auto"``/a name to a concrete backend.

    Pass ``dense_cells`` from kernels that have a dense-matmul numpy path so
    ``auto`` can prefer it for small matrices.
    """
    if backend is None or backend == "auto":
        if dense_cells is not None and dense_cells <= DENSE_CELLS_LIMIT:
            return "numpy"
        return default_backend()
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}; expected one of {BACKENDS}")
    if backend == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is unavailable or disabled")
    return backend
