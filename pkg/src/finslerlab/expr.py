"""Scalar expression ASTs: parsing, printing and Taylor evaluation.

Grammar (documented in the README as EBNF):

    expr     = term { ("+" | "-") term } ;
    term     = unary { ("*" | "/") unary } ;
    unary    = "-" unary | power ;
    power    = atom [ "^" exponent ] ;
    atom     = NUMBER | NAME | NAME "(" expr ")" | "(" expr ")" ;
    exponent = [ "-" ] NUMBER | "(" [ "-" ] NUMBER [ "/" NUMBER ] ")" ;

"^" binds tighter than unary minus, same-precedence binary operators
associate to the left, and whitespace is ignored.  Exponents must be rational
literals.  The unary functions are sqrt, sin, cos and exp.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence, Union

from . import jets
from .errors import (
    EvaluationError,
    ExpressionSyntaxError,
    FinslerError,
    UnknownVariable,
)

UNARY_FUNCTIONS = ("sqrt", "sin", "cos", "exp")


@dataclass(frozen=True)
class Const:
    value: float
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Var:
    name: str
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Unary:
    op: str  # 'neg' | 'sqrt' | 'sin' | 'cos' | 'exp'
    arg: "Expr"
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Binary:
    op: str  # '+' | '-' | '*' | '/'
    left: "Expr"
    right: "Expr"
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: Fraction
    pos: int = field(default=0, compare=False)


Expr = Union[Const, Var, Unary, Binary, Pow]


# -- tokenizer ---------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    i = 0
    while i < len(text):
        m = _TOKEN_RE.match(text, i)
        if m is None:
            stripped = text[i:].lstrip()
            if not stripped:
                break
            pos = len(text) - len(stripped) + 1
            raise ExpressionSyntaxError(pos, f"unexpected character {stripped[0]!r}")
        kind = m.lastgroup
        assert kind is not None
        tokens.append((kind, m.group(kind), m.start(kind) + 1))
        i = m.end()
    tokens.append(("end", "", len(text) + 1))
    return tokens


class _Parser:
    def __init__(self, text: str, declared: Sequence[str]):
        if not text.strip():
            raise ExpressionSyntaxError(1, "empty expression")
        self.tokens = _tokenize(text)
        self.k = 0
        self.declared = set(declared)

    def peek(self):
        return self.tokens[self.k]

    def next(self):
        tok = self.tokens[self.k]
        self.k += 1
        return tok

    def expect_op(self, op: str):
        kind, val, pos = self.next()
        if kind != "op" or val != op:
            raise ExpressionSyntaxError(pos, f"expected {op!r}")

    def parse(self) -> Expr:
        e = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExpressionSyntaxError(pos, f"unexpected {val!r}")
        return e

    def expr(self) -> Expr:
        node = self.term()
        while True:
            kind, val, pos = self.peek()
            if kind == "op" and val in "+-":
                self.next()
                node = Binary(val, node, self.term(), pos=pos)
            else:
                return node

    def term(self) -> Expr:
        node = self.unary()
        while True:
            kind, val, pos = self.peek()
            if kind == "op" and val in "*/":
                self.next()
                node = Binary(val, node, self.unary(), pos=pos)
            else:
                return node

    def unary(self) -> Expr:
        kind, val, pos = self.peek()
        if kind == "op" and val == "-":
            self.next()
            return Unary("neg", self.unary(), pos=pos)
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        kind, val, pos = self.peek()
        if kind == "op" and val == "^":
            self.next()
            return Pow(base, self.exponent(), pos=pos)
        return base

    def exponent(self) -> Fraction:
        kind, val, pos = self.next()
        sign = 1
        if kind == "op" and val == "-":
            sign = -1
            kind, val, pos = self.next()
        if kind == "number":
            return sign * Fraction(val)
        if kind == "op" and val == "(":
            kind, val, pos = self.next()
            if kind == "op" and val == "-":
                sign = -sign
                kind, val, pos = self.next()
            if kind != "number":
                raise ExpressionSyntaxError(pos, "expected a rational exponent")
            num = Fraction(val)
            kind, val, pos = self.next()
            if kind == "op" and val == "/":
                kind, val, pos = self.next()
                if kind != "number":
                    raise ExpressionSyntaxError(pos, "expected exponent denominator")
                num = num / Fraction(val)
                kind, val, pos = self.next()
            if not (kind == "op" and val == ")"):
                raise ExpressionSyntaxError(pos, "expected ')' after exponent")
            return sign * num
        raise ExpressionSyntaxError(pos, "expected a rational exponent")

    def atom(self) -> Expr:
        kind, val, pos = self.next()
        if kind == "number":
            return Const(float(val), pos=pos)
        if kind == "name":
            nkind, nval, _ = self.peek()
            if nkind == "op" and nval == "(":
                if val not in UNARY_FUNCTIONS:
                    raise ExpressionSyntaxError(pos, f"unknown function {val!r}")
                self.next()
                arg = self.expr()
                self.expect_op(")")
                return Unary(val, arg, pos=pos)
            if val not in self.declared:
                raise UnknownVariable(val, pos)
            return Var(val, pos=pos)
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect_op(")")
            return e
        if kind == "end":
            raise ExpressionSyntaxError(pos, "unexpected end of input")
        raise ExpressionSyntaxError(pos, f"unexpected {val!r}")


def parse(text: str, declared_vars: Sequence[str]) -> Expr:
    """Parse expression text against a list of declared variable names."""
    return _Parser(text, declared_vars).parse()


# -- printing ----------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "pow": 4, "atom": 5}


def _prec(e: Expr) -> int:
    if isinstance(e, Binary):
        return _PREC[e.op]
    if isinstance(e, Unary) and e.op == "neg":
        return _PREC["neg"]
    if isinstance(e, Pow):
        return _PREC["pow"]
    return _PREC["atom"]


def pretty(e: Expr) -> str:
    """Render an AST to text that reparses to a structurally identical AST."""
    if isinstance(e, Const):
        return repr(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Unary):
        if e.op == "neg":
            inner = pretty(e.arg)
            if _prec(e.arg) <= _PREC["neg"]:
                inner = f"({inner})"
            return f"-{inner}"
        return f"{e.op}({pretty(e.arg)})"
    if isinstance(e, Pow):
        base = pretty(e.base)
        if _prec(e.base) < _PREC["atom"]:
            base = f"({base})"
        exp = e.exponent
        if exp.denominator == 1 and exp >= 0:
            return f"{base}^{exp.numerator}"
        return f"{base}^({exp.numerator}/{exp.denominator})"
    if isinstance(e, Binary):
        mine = _PREC[e.op]
        left = pretty(e.left)
        right = pretty(e.right)
        if _prec(e.left) < mine:
            left = f"({left})"
        # operators are left-associative, so a right child at equal precedence
        # must keep its parentheses to round-trip structurally
        if _prec(e.right) <= mine:
            right = f"({right})"
        return f"{left} {e.op} {right}"
    raise TypeError(f"not an expression node: {e!r}")


# -- evaluation ----------------------------------------------------------------


def eval_taylor(e: Expr, bindings: Mapping[str, jets.TaylorValue]) -> jets.TaylorValue:
    """Evaluate in Taylor arithmetic; order 0 reproduces plain evaluation."""
    try:
        if isinstance(e, Const):
            sample = next(iter(bindings.values()))
            return jets.constant(e.value, sample.num_vars, sample.order)
        if isinstance(e, Var):
            if e.name not in bindings:
                raise UnknownVariable(e.name, e.pos)
            return bindings[e.name]
        if isinstance(e, Unary):
            a = eval_taylor(e.arg, bindings)
            if e.op == "neg":
                return -a
            return getattr(jets, e.op)(a)
        if isinstance(e, Pow):
            return jets.powr(eval_taylor(e.base, bindings), e.exponent)
        if isinstance(e, Binary):
            a = eval_taylor(e.left, bindings)
            b = eval_taylor(e.right, bindings)
            if e.op == "+":
                return a + b
            if e.op == "-":
                return a - b
            if e.op == "*":
                return a * b
            return a / b
    except (UnknownVariable, EvaluationError):
        raise
    except FinslerError as err:
        raise EvaluationError(e.pos, err) from err
    raise TypeError(f"not an expression node: {e!r}")


def _pow_rational(base: float, r: Fraction) -> float:
    """Rational power by binary powering, bit-identical to the Taylor path."""
    if r.denominator != 1:
        return base ** float(r)
    n = r.numerator
    if n == 0:
        return 1.0
    if n < 0:
        base = 1.0 / base
        n = -n
    acc = base
    result = None
    while n:
        if n & 1:
            result = acc if result is None else result * acc
        n >>= 1
        if n:
            acc = acc * acc
    return result


def eval_plain(e: Expr, bindings: Mapping[str, float]) -> float:
    """Plain recursive float evaluation (reference path for order 0)."""
    import math

    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        if e.name not in bindings:
            raise UnknownVariable(e.name, e.pos)
        return float(bindings[e.name])
    if isinstance(e, Unary):
        a = eval_plain(e.arg, bindings)
        if e.op == "neg":
            return -a
        if e.op == "sqrt":
            return a**0.5
        return getattr(math, e.op)(a)
    if isinstance(e, Pow):
        return _pow_rational(eval_plain(e.base, bindings), e.exponent)
    if isinstance(e, Binary):
        a = eval_plain(e.left, bindings)
        b = eval_plain(e.right, bindings)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        return a / b
    raise TypeError(f"not an expression node: {e!r}")


def variables(e: Expr) -> set[str]:
    """Names of all variables appearing in the tree."""
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Unary):
        return variables(e.arg)
    if isinstance(e, Pow):
        return variables(e.base)
    if isinstance(e, Binary):
        return variables(e.left) | variables(e.right)
    return set()


def substitute(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Replace variables by sub-expressions (used for coordinate changes)."""
    if isinstance(e, Const):
        return e
    if isinstance(e, Var):
        return mapping.get(e.name, e)
    if isinstance(e, Unary):
        return Unary(e.op, substitute(e.arg, mapping), pos=e.pos)
    if isinstance(e, Pow):
        return Pow(substitute(e.base, mapping), e.exponent, pos=e.pos)
    if isinstance(e, Binary):
        return Binary(e.op, substitute(e.left, mapping), substitute(e.right, mapping), pos=e.pos)
    raise TypeError(f"not an expression node: {e!r}")


# -- homogeneity check -----------------------------------------------------------


@dataclass(frozen=True)
class HomogeneityReport:
    degree: int
    scale: float
    max_residual: float
    passed: bool


def check_homogeneity(
    e: Expr,
    s_vars: Sequence[str],
    degree: int,
    sample_points: Sequence[Mapping[str, float]],
    scale: float,
    tol: float = 1e-10,
) -> HomogeneityReport:
    """Check f(t, scale*s) == scale^degree * f(t, s) over sample bindings.

    The residual is |f(t, c*s) - c^degree f(t, s)| / max(1, |f(t, s)|),
    maximized over the samples.
    """
    if scale <= 0:
        raise ValueError("scale must be positive")
    worst = 0.0
    for bindings in sample_points:
        base = eval_plain(e, bindings)
        scaled = dict(bindings)
        for name in s_vars:
            scaled[name] = scale * scaled[name]
        lhs = eval_plain(e, scaled)
        res = abs(lhs - scale**degree * base) / max(1.0, abs(base))
        worst = max(worst, res)
    return HomogeneityReport(degree, scale, worst, worst <= tol)
