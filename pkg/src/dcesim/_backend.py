"""Select the stepping kernels: compiled if importable, numpy otherwise.

Set ``DCESIM_BACKEND=python`` to force the numpy path.
"""
from __future__ import annotations

import os

from . import _pykernels

__all__ = ["available", "get", "DEFAULT"]


def _load_compiled():
    if os.environ.get("DCESIM_BACKEND", "").lower() == "python":
        return None
    try:
        from . import _kernels
    except ImportError:
        return None
    return _kernels


_COMPILED = _load_compiled()
DEFAULT = "compiled" if _COMPILED is not None else "python"


def available() -> list[str]:
    return ["compiled", "python"] if _COMPILED is not None else ["python"]


def get(name: str | None = None):
    name = name or DEFAULT
    if name == "python":
        return _pykernels
    if name == "compiled":
        if _COMPILED is None:
            raise ValueError("compiled kernels are not available in this installation")
        return _COMPILED
    raise ValueError(f"unknown backend {name!r}; choose from {available()}")
