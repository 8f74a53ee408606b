"""Kernel backend selection.

The compiled extension is preferred when it imports cleanly; the numpy
fallback is selected otherwise.  ``FINSLERLAB_PURE_PYTHON=1`` forces the
fallback (useful for the kernel benchmark and for debugging).
"""

from __future__ import annotations

import os

if os.environ.get("FINSLERLAB_PURE_PYTHON"):
    from . import _kernels_py as kernels

    BACKEND = "python"
else:
    try:
        from . import _kernels_cy as kernels  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        from . import _kernels_py as kernels  # type: ignore[no-redef]

        BACKEND = "python"

__all__ = ["kernels", "BACKEND"]
