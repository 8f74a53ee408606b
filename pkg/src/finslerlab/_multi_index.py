"""Dense multi-index tables shared by the Taylor arithmetic kernels.

A truncated multivariate Taylor value over ``num_vars`` variables at order
``order`` is stored as a flat coefficient array indexed by the graded
enumeration of all multi-indices of total degree <= order.  The graded layout
has two properties the kernels rely on:

* slots of degree <= k form a prefix, so truncation is a plain slice;
* the degree-1 slots are the unit multi-indices in variable order, so slot
  ``1 + i`` always holds the linear coefficient of variable ``i``.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

# Hard cap on dense table size; C(order + num_vars, num_vars) must stay below.
MAX_TERMS = 250_000


def _enumerate(num_vars: int, order: int) -> list[tuple[int, ...]]:
    out: list[tuple[int, ...]] = []

    def rec(prefix: tuple[int, ...], vars_left: int, degree: int) -> None:
        if vars_left == 1:
            out.append(prefix + (degree,))
            return
        for e in range(degree, -1, -1):
            rec(prefix + (e,), vars_left - 1, degree - e)

    for d in range(order + 1):
        rec((), num_vars, d)
    return out


class TaylorTables:
    """Index tables for one (num_vars, order) dense coefficient layout."""

    def __init__(self, num_vars: int, order: int):
        if num_vars < 1:
            raise ValueError("num_vars must be >= 1")
        if order < 0:
            raise ValueError("order must be >= 0")
        n_terms = math.comb(order + num_vars, num_vars)
        if n_terms > MAX_TERMS:
            raise ValueError(
                f"dense Taylor table with {n_terms} terms exceeds the "
                f"{MAX_TERMS}-term cap (num_vars={num_vars}, order={order})"
            )
        self.num_vars = num_vars
        self.order = order
        self.n_terms = n_terms
        self.midx = np.array(_enumerate(num_vars, order), dtype=np.int64)
        self.degree = self.midx.sum(axis=1)
        self.slot = {tuple(m): i for i, m in enumerate(self.midx.tolist())}
        # number of slots of degree <= k, for truncation slices
        self.terms_through = np.searchsorted(self.degree, np.arange(order + 2), side="left")
        # scale factor turning stored Taylor coefficients into derivatives
        fact = np.ones(n_terms)
        for i, m in enumerate(self.midx.tolist()):
            f = 1.0
            for e in m:
                f *= math.factorial(e)
            fact[i] = f
        self.fact_scale = fact
        self._mul_table = None
        self._div_table = None
        self._deriv_tables: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    # -- lazily built kernel tables ------------------------------------------

    def mul_table(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Triples (ia, ib, iout) of the truncated Cauchy product."""
        if self._mul_table is None:
            ia, ib, iout = [], [], []
            midx = self.midx.tolist()
            deg = self.degree
            for i, mi in enumerate(midx):
                cap = self.order - deg[i]
                for j in range(int(self.terms_through[cap + 1])):
                    mj = midx[j]
                    k = self.slot[tuple(a + b for a, b in zip(mi, mj))]
                    ia.append(i)
                    ib.append(j)
                    iout.append(k)
            self._mul_table = (
                np.array(ia, dtype=np.int32),
                np.array(ib, dtype=np.int32),
                np.array(iout, dtype=np.int32),
            )
        return self._mul_table

    def div_table(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Triples (ic, ib, iout) with deg(ib) >= 1, CSR-grouped by iout.

        Used by the order-by-order quotient recurrence: because the layout is
        graded, every ic referenced for output slot k has degree < deg(k).
        """
        if self._div_table is None:
            ia, ib, iout = self.mul_table()
            keep = self.degree[ib] >= 1
            ic_k = ia[keep]
            ib_k = ib[keep]
            io_k = iout[keep]
            ord_ = np.argsort(io_k, kind="stable")
            ic_k, ib_k, io_k = ic_k[ord_], ib_k[ord_], io_k[ord_]
            out_ptr = np.searchsorted(io_k, np.arange(self.n_terms + 1)).astype(np.int64)
            self._div_table = (ic_k, ib_k, out_ptr)
        return self._div_table

    def deriv_table(self, var: int) -> tuple[np.ndarray, np.ndarray]:
        """(src, factor) arrays mapping coefficients to the d/dx_var series."""
        if var not in self._deriv_tables:
            n_sub = int(self.terms_through[self.order])  # terms of degree <= order-1
            src = np.empty(n_sub, dtype=np.int64)
            fac = np.empty(n_sub, dtype=np.float64)
            midx = self.midx.tolist()
            for j in range(n_sub):
                m = list(midx[j])
                m[var] += 1
                src[j] = self.slot[tuple(m)]
                fac[j] = m[var]
            self._deriv_tables[var] = (src, fac)
        return self._deriv_tables[var]


@lru_cache(maxsize=None)
def tables(num_vars: int, order: int) -> TaylorTables:
    return TaylorTables(num_vars, order)
