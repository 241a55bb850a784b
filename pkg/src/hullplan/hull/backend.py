"""Kernel backend selection.

The compiled extension is preferred when importable; set HULLPLAN_PURE=1
to force the numpy fallback. Both backends produce identical outputs, so
the switch only affects speed.
"""

from __future__ import annotations

import os

from . import _kernels_py


def _load():
    if os.environ.get("HULLPLAN_PURE"):
        return _kernels_py
    try:
        from . import _kernels  # type: ignore[attr-defined]
        return _kernels
    except ImportError:
        return _kernels_py


kernels = _load()
COMPILED = bool(getattr(kernels, "COMPILED", False))


def get_backend(name: str):
    """Explicit backend lookup, used by the benchmark and parity tests."""
    if name == "python":
        return _kernels_py
    if name == "compiled":
        from . import _kernels  # raises ImportError when not built
        return _kernels
    raise ValueError(f"unknown backend {name!r}")
