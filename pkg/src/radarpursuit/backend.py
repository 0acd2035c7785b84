"""Kernel backend selection: compiled extension with numpy fallback.

The compiled module radarpursuit._kernels is preferred when importable;
otherwise the numpy implementation in radarpursuit._kernels_py is used.
Set RADARPURSUIT_BACKEND=python or =cython to force a choice at import
time, or call use() to switch at runtime (tests and benchmarks).
"""
from __future__ import annotations

import os
from types import ModuleType

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:
    _compiled = None


def _resolve(name: str) -> ModuleType:
    if name == "python":
        return _kernels_py
    if name == "cython":
        if _compiled is None:
            raise RuntimeError(
                "compiled kernel backend requested but radarpursuit._kernels "
                "is not built; reinstall with Cython available or use the "
                "python backend")
        return _compiled
    if name == "auto":
        return _compiled if _compiled is not None else _kernels_py
    raise ValueError(f"unknown backend {name!r} (expected cython or python)")


_active: ModuleType = _resolve(os.environ.get("RADARPURSUIT_BACKEND", "auto"))


def active() -> ModuleType:
    """Module providing the selection kernels currently in use."""
    return _active


def active_name() -> str:
    return _active.BACKEND_NAME


def available() -> tuple[str, ...]:
    return ("cython", "python") if _compiled is not None else ("python",)


def use(name: str) -> str:
    """Switch the active backend ('cython', 'python' or 'auto'); returns
    the name of the backend now active."""
    global _active
    _active = _resolve(name)
    return active_name()
