"""Kernel backend selection.

The compiled extension is preferred; the numpy fallback loads when the
extension is missing or when VECLIDAR_BACKEND=python is set. Both expose
the same functions (ray_triangle, refit, query_closest) with identical
numeric contracts, so everything above this module is backend-agnostic.
"""

from __future__ import annotations

import os

from . import _kernels_np

_FORCED = os.environ.get("VECLIDAR_BACKEND", "auto").lower()

try:
    from . import _kernels_c
except ImportError:  # extension not built
    _kernels_c = None

if _FORCED == "python" or _kernels_c is None:
    _active = _kernels_np
else:
    _active = _kernels_c


def current():
    """Module implementing the active kernel set."""
    return _active


def current_name() -> str:
    return "compiled" if _active.IS_COMPILED else "python"


def has_compiled() -> bool:
    return _kernels_c is not None


def use(name: str) -> str:
    """Switch backend ('compiled', 'python', 'auto'); returns the active name.

    Not thread safe; intended for benchmarks and tests.
    """
    global _active
    if name == "python":
        _active = _kernels_np
    elif name == "compiled":
        if _kernels_c is None:
            raise RuntimeError("compiled kernel extension is not available")
        _active = _kernels_c
    elif name == "auto":
        _active = _kernels_c if _kernels_c is not None else _kernels_np
    else:
        raise ValueError(f"unknown backend {name!r}")
    return current_name()
