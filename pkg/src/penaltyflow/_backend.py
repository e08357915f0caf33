"""Kernel backend selection.

The compiled extension is used when it imports; ``PENALTYFLOW_BACKEND=python``
forces the pure-Python kernels (both expose the same API).
"""
import os

from . import _pykernels

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKENDS = ("cython", "python")


def available():
    return ("cython", "python") if _compiled is not None else ("python",)


def get_kernels(name=None):
    """Kernel module for ``name`` (``"cython"``, ``"python"`` or None for the default)."""
    name = name or DEFAULT_BACKEND
    if name == "python":
        return _pykernels
    if name == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not built; reinstall the package "
                               "or use backend='python'")
        return _compiled
    raise ValueError(f"unknown backend {name!r}; expected one of {BACKENDS}")


def _default():
    forced = os.environ.get("PENALTYFLOW_BACKEND", "").strip().lower()
    if forced:
        if forced not in BACKENDS:
            raise ValueError(f"PENALTYFLOW_BACKEND={forced!r}; expected one of {BACKENDS}")
        if forced == "cython" and _compiled is None:
            raise ImportError("PENALTYFLOW_BACKEND=cython but the extension is not built")
        return forced
    return "cython" if _compiled is not None else "python"


DEFAULT_BACKEND = _default()
