"""Truncated multivariate Taylor arithmetic.

``TaylorValue`` carries the Taylor expansion of a scalar around a base point:
the coefficient stored for multi-index m is the scaled derivative
``partial^m f / m!``, so the constant term is the plain value of the function.
Values are immutable after construction and all operations are pure, which
makes per-point evaluations safe to run in parallel.

Multiplication and division dispatch to the selected kernel backend (compiled
extension or numpy fallback, see :mod:`finslerlab.backend`); the remaining
elementary functions are built on top of multiplication via a Horner-form
univariate composition.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence

import numpy as np

from ._multi_index import TaylorTables, tables
from .backend import kernels
from .config import DEFAULT_TOLERANCES
from .errors import DivisionNearZero, DomainError, OrderExceeded, SingularMatrix

_EPS_DIV = DEFAULT_TOLERANCES.epsilon_div


class TaylorValue:
    """Truncated Taylor expansion of a scalar at a base point."""

    __slots__ = ("tab", "coeffs")

    def __init__(self, tab: TaylorTables, coeffs: np.ndarray):
        if coeffs.shape != (tab.n_terms,):
            raise ValueError("coefficient array does not match the index table")
        self.tab = tab
        self.coeffs = coeffs

    # -- basic introspection ---------------------------------------------------

    @property
    def num_vars(self) -> int:
        return self.tab.num_vars

    @property
    def order(self) -> int:
        return self.tab.order

    @property
    def value(self) -> float:
        """Value of the function at the base point (zero multi-index)."""
        return float(self.coeffs[0])

    def coefficient(self, multi_index: Sequence[int]) -> float:
        """Stored Taylor coefficient (derivative / m!) for a multi-index."""
        key = tuple(int(m) for m in multi_index)
        if len(key) != self.num_vars:
            raise ValueError("multi-index length does not match num_vars")
        if sum(key) > self.order:
            raise OrderExceeded(f"multi-index {key} exceeds order {self.order}")
        return float(self.coeffs[self.tab.slot[key]])

    def partial(self, multi_index: Sequence[int]) -> float:
        """True partial derivative at the base point (coefficient * m!)."""
        key = tuple(int(m) for m in multi_index)
        if len(key) != self.num_vars:
            raise ValueError("multi-index length does not match num_vars")
        if sum(key) > self.order:
            raise OrderExceeded(f"multi-index {key} exceeds order {self.order}")
        slot = self.tab.slot[key]
        return float(self.coeffs[slot] * self.tab.fact_scale[slot])

    def gradient(self) -> np.ndarray:
        """All first partial derivatives at the base point."""
        if self.order < 1:
            raise OrderExceeded("order-0 value has no stored gradient")
        return self.coeffs[1 : 1 + self.num_vars].copy()

    # -- structural operations ---------------------------------------------------

    def truncated(self, new_order: int) -> "TaylorValue":
        if new_order > self.order:
            raise OrderExceeded("cannot extend a truncated series")
        if new_order == self.order:
            return self
        sub = tables(self.num_vars, new_order)
        return TaylorValue(sub, self.coeffs[: sub.n_terms].copy())

    def derivative(self, var: int) -> "TaylorValue":
        """Series of d(self)/dx_var, truncated at order - 1."""
        if self.order == 0:
            raise OrderExceeded("cannot differentiate an order-0 series")
        if not 0 <= var < self.num_vars:
            raise ValueError("variable index out of range")
        src, fac = self.tab.deriv_table(var)
        sub = tables(self.num_vars, self.order - 1)
        return TaylorValue(sub, self.coeffs[src] * fac)

    # -- ring operations ---------------------------------------------------------

    def _coerce(self, other) -> "TaylorValue":
        if isinstance(other, TaylorValue):
            if other.tab is not self.tab:
                raise ValueError(
                    "operands must share num_vars and order "
                    f"(got {other.num_vars}/{other.order} vs {self.num_vars}/{self.order})"
                )
            return other
        if isinstance(other, (int, float)):
            c = np.zeros(self.tab.n_terms)
            c[0] = float(other)
            return TaylorValue(self.tab, c)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return TaylorValue(self.tab, self.coeffs + o.coeffs)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return TaylorValue(self.tab, self.coeffs - o.coeffs)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return TaylorValue(self.tab, o.coeffs - self.coeffs)

    def __neg__(self):
        return TaylorValue(self.tab, -self.coeffs)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return TaylorValue(self.tab, self.coeffs * float(other))
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        ia, ib, iout = self.tab.mul_table()
        return TaylorValue(self.tab, kernels.mul(self.coeffs, o.coeffs, ia, ib, iout, self.tab.n_terms))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, float)):
            return TaylorValue(self.tab, self.coeffs / float(other))
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if abs(o.value) < _EPS_DIV:
            raise DivisionNearZero(f"divisor constant term {o.value!r} below {_EPS_DIV}")
        ic, ib, out_ptr = self.tab.div_table()
        return TaylorValue(self.tab, kernels.div(self.coeffs, o.coeffs, ic, ib, out_ptr))

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __repr__(self):
        return f"TaylorValue(num_vars={self.num_vars}, order={self.order}, value={self.value})"


# -- constructors -----------------------------------------------------------------


def constant(value: float, num_vars: int, order: int) -> TaylorValue:
    tab = tables(num_vars, order)
    c = np.zeros(tab.n_terms)
    c[0] = float(value)
    return TaylorValue(tab, c)


def lift_variable(var_index: int, value: float, num_vars: int, order: int) -> TaylorValue:
    """Taylor expansion of the coordinate function x_{var_index} at ``value``."""
    if not 0 <= var_index < num_vars:
        raise ValueError(f"var_index {var_index} out of range for {num_vars} variables")
    tab = tables(num_vars, order)
    c = np.zeros(tab.n_terms)
    c[0] = float(value)
    if order >= 1:
        c[1 + var_index] = 1.0
    return TaylorValue(tab, c)


# -- elementary functions -----------------------------------------------------------


def _compose_univariate(a: TaylorValue, taylor_coeffs: Sequence[float]) -> TaylorValue:
    """Compose f(a) from the univariate coefficients f^(k)(a0)/k!, by Horner."""
    k_max = a.order
    centered = a.coeffs.copy()
    centered[0] = 0.0
    bar = TaylorValue(a.tab, centered)
    result = constant(taylor_coeffs[k_max], a.num_vars, a.order)
    for k in range(k_max - 1, -1, -1):
        result = result * bar + taylor_coeffs[k]
    return result


def exp(a: TaylorValue) -> TaylorValue:
    e0 = math.exp(a.value)
    coefs = [e0 / math.factorial(k) for k in range(a.order + 1)]
    return _compose_univariate(a, coefs)


def sin(a: TaylorValue) -> TaylorValue:
    a0 = a.value
    cycle = (math.sin(a0), math.cos(a0), -math.sin(a0), -math.cos(a0))
    coefs = [cycle[k % 4] / math.factorial(k) for k in range(a.order + 1)]
    return _compose_univariate(a, coefs)


def cos(a: TaylorValue) -> TaylorValue:
    a0 = a.value
    cycle = (math.cos(a0), -math.sin(a0), -math.cos(a0), math.sin(a0))
    coefs = [cycle[k % 4] / math.factorial(k) for k in range(a.order + 1)]
    return _compose_univariate(a, coefs)


def powr(a: TaylorValue, exponent) -> TaylorValue:
    """a**exponent for a rational exponent.

    Integer exponents use binary powering and work for any constant term
    (negative exponents go through division); fractional exponents use the
    binomial recurrence and require a positive constant term.
    """
    r = Fraction(exponent)
    if r.denominator == 1:
        n = r.numerator
        if n == 0:
            return constant(1.0, a.num_vars, a.order)
        base = a if n > 0 else constant(1.0, a.num_vars, a.order) / a
        n = abs(n)
        result = None
        acc = base
        while n:
            if n & 1:
                result = acc if result is None else result * acc
            n >>= 1
            if n:
                acc = acc * acc
        return result
    a0 = a.value
    if a0 < _EPS_DIV:
        raise DomainError(f"fractional power of non-positive constant term {a0!r}")
    rf = float(r)
    # binomial series: coefs[k] = C(r, k) * a0^(r-k)
    coefs = [a0**rf]
    for k in range(1, a.order + 1):
        coefs.append(coefs[k - 1] * (rf - k + 1) / k / a0)
    return _compose_univariate(a, coefs)


def sqrt(a: TaylorValue) -> TaylorValue:
    if a.value < _EPS_DIV:
        raise DomainError(f"sqrt of non-positive constant term {a.value!r}")
    return powr(a, Fraction(1, 2))


# -- matrix inverse -----------------------------------------------------------------


def series_matrix_inverse(mat: Sequence[Sequence[TaylorValue]]) -> list[list[TaylorValue]]:
    """Inverse of a square matrix of Taylor values, exact to the truncation order.

    The constant-term matrix is inverted numerically, then Newton iteration
    X <- X (2I - M X) doubles the number of exact orders per step.
    """
    n = len(mat)
    a00 = mat[0][0]
    num_vars, order = a00.num_vars, a00.order
    m0 = np.array([[mat[i][j].value for j in range(n)] for i in range(n)])
    if not np.all(np.isfinite(m0)) or np.linalg.cond(m0) > DEFAULT_TOLERANCES.matrix_cond_bound:
        raise SingularMatrix("constant-term matrix is numerically singular")
    inv0 = np.linalg.inv(m0)
    x = [[constant(inv0[i][j], num_vars, order) for j in range(n)] for i in range(n)]
    if order == 0:
        return x

    def matmul(p, q):
        return [
            [sum((p[i][k] * q[k][j] for k in range(1, n)), p[i][0] * q[0][j]) for j in range(n)]
            for i in range(n)
        ]

    iterations = max(1, math.ceil(math.log2(order + 1)))
    for _ in range(iterations):
        mx = matmul(mat, x)
        for i in range(n):
            for j in range(n):
                mx[i][j] = -mx[i][j]
            mx[i][i] = mx[i][i] + 2.0
        x = matmul(x, mx)
    return x


# -- first-order composition ----------------------------------------------------------


def compose_linear(inner: TaylorValue, args: Sequence[TaylorValue]) -> TaylorValue:
    """First-order composition inner(args[0], ..., args[v-1]).

    ``args`` are order-1 Taylor values in some outer variable set whose
    constant terms equal the inner base point.  The result is the order-1
    expansion of the composite in the outer variables (linearization of the
    chain rule); ``inner`` must carry at least first-order data.
    """
    if len(args) != inner.num_vars:
        raise ValueError("argument count must match inner num_vars")
    if inner.order < 1:
        raise OrderExceeded("inner series must have order >= 1")
    out = constant(inner.value, args[0].num_vars, args[0].order)
    for v, arg in enumerate(args):
        d = inner.partial(tuple(1 if k == v else 0 for k in range(inner.num_vars)))
        if d != 0.0:
            out = out + d * (arg - arg.value)
    return out
