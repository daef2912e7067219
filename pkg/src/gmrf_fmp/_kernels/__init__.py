"""Synchronous message-sweep kernels.

Two interchangeable implementations of one function, ``run_sweep``: a Cython
extension (built at install time) and a pure-Python fallback.  Both iterate
directed edges in the same ascending order and use the same expression
structure, so their outputs are bit-identical; the extension is just fast.

The default backend is picked at import: the extension when it built,
otherwise the fallback.  Set ``GMRF_FMP_FORCE_PYTHON_KERNEL=1`` to force the
fallback, or pass ``kernel="python"``/``kernel="cython"`` in ``BpOptions``.
"""

import os

from . import _lbp_py

__all__ = ["available_backends", "default_backend", "get_sweep"]

_FORCED = os.environ.get("GMRF_FMP_FORCE_PYTHON_KERNEL") == "1"

try:
    from . import _lbp_cy

    _HAVE_CY = True
except ImportError:  # extension not built; fall back
    _lbp_cy = None
    _HAVE_CY = False


def available_backends() -> tuple[str, ...]:
    return ("python", "cython") if _HAVE_CY else ("python",)


def default_backend() -> str:
    if _FORCED or not _HAVE_CY:
        return "python"
    return "cython"


def get_sweep(backend: str | None = None):
    """The sweep function for a backend name (None = default)."""
    if backend is None:
        backend = default_backend()
    if backend == "python":
        return _lbp_py.run_sweep
    if backend == "cython":
        if not _HAVE_CY:
            raise RuntimeError("cython kernel requested but the extension is not built")
        return _lbp_cy.run_sweep
    raise ValueError(f"unknown kernel backend {backend!r}")
