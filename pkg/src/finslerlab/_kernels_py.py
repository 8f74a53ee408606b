"""Pure numpy implementations of the hot Taylor kernels.

These mirror the compiled versions in ``_kernels_cy`` exactly; the backend is
chosen once at import time in :mod:`finslerlab.backend`.
"""

from __future__ import annotations

import numpy as np


def mul(a, b, ia, ib, iout, n_out):
    """Truncated Cauchy product via the precomputed triple table."""
    out = np.zeros(n_out)
    np.add.at(out, iout, a[ia] * b[ib])
    return out


def div(a, b, ic, ib, out_ptr):
    """Order-by-order quotient c with c * b = a, given b[0] != 0.

    ``(ic, ib)`` pairs are grouped by output slot in graded order, so every
    c-coefficient read for a slot has already been computed.
    """
    n = a.shape[0]
    c = np.empty(n)
    b0 = b[0]
    c[0] = a[0] / b0
    for k in range(1, n):
        lo = out_ptr[k]
        hi = out_ptr[k + 1]
        acc = float(np.dot(b[ib[lo:hi]], c[ic[lo:hi]])) if hi > lo else 0.0
        c[k] = (a[k] - acc) / b0
    return c
