"""Selection between the compiled kernel extension and the NumPy fallback.

The compiled extension is optional: it is built at install time when a C
compiler is available and silently skipped otherwise. Both backends return
bit-identical results, so the choice only affects speed. Selection order:

* ``RVPANOPTIC_BACKEND`` environment variable (``auto``, ``compiled``,
  ``python``), read once at import;
* :func:`set_backend` at runtime (used by the benchmark to compare both).
"""

from __future__ import annotations

import os

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built; fallback carries the load
    _compiled = None

BACKENDS = ("auto", "compiled", "python")

_requested = "auto"


class BackendUnavailable(RuntimeError):
    """The compiled extension was requested but is not installed."""


def set_backend(name: str) -> None:
    global _requested
    if name not in BACKENDS:
        raise ValueError(f"unknown backend {name!r}; expected one of {BACKENDS}")
    if name == "compiled" and _compiled is None:
        raise BackendUnavailable("compiled kernels are not available in this install")
    _requested = name


def active_backend() -> str:
    """Name of the backend that kernels() will hand out."""
    if _requested == "auto":
        return "compiled" if _compiled is not None else "python"
    return _requested


def compiled_available() -> bool:
    return _compiled is not None


def kernels():
    """Module holding the kernel entry points for the active backend."""
    return _compiled if active_backend() == "compiled" else _kernels_py


set_backend(os.environ.get("RVPANOPTIC_BACKEND", "auto"))
