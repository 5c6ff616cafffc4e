"""Kernel backend selection.

The compiled extension is preferred when it imported cleanly; setting
``ZRP_PURE_PYTHON=1`` in the environment forces the pure-Python kernels.
Both backends draw the same uniform stream, so results are bit-identical
either way (the compiled one is simply orders of magnitude faster).
"""

from __future__ import annotations

import os

from . import _speedups_py

if os.environ.get("ZRP_PURE_PYTHON", "").strip() not in ("", "0"):
    kernels = _speedups_py
else:
    try:
        from . import _speedups as kernels  # type: ignore[no-redef]
    except ImportError:
        kernels = _speedups_py

BACKEND = "compiled" if kernels.COMPILED else "pure-python"


def get_kernels(pure: bool | None = None):
    """Return the active kernel module, or a specific one when asked."""
    if pure is None:
        return kernels
    return _speedups_py if pure else kernels
