"""Backend selection for the slot loops.

The compiled extension is used when it was built; otherwise the pure-Python
loops take over. Both expose ``policy_one_loop`` and ``policy_two_loop``.
"""
from __future__ import annotations

from types import ModuleType

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

BACKENDS = ("compiled", "python")
DEFAULT_BACKEND = "compiled" if _ckernels is not None else "python"


def available() -> tuple[str, ...]:
    return tuple(b for b in BACKENDS if b == "python" or _ckernels is not None)


def get(name: str | None = None) -> ModuleType:
    """Kernel module for ``name``; None picks the fastest available."""
    name = name or DEFAULT_BACKEND
    if name == "python":
        return _pykernels
    if name == "compiled":
        if _ckernels is None:
            raise RuntimeError("compiled kernels are not built; reinstall with a C compiler")
        return _ckernels
    raise ValueError(f"unknown backend {name!r}, expected one of {BACKENDS}")
