"""Parser, printer and Taylor-evaluation tests for the expression module."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import central_fd
from finslerlab import expr as E
from finslerlab import jets as J
from finslerlab.errors import EvaluationError, ExpressionSyntaxError, UnknownVariable

FOUR_VARS = ["t1", "t2", "s1", "s2"]


class TestParse:
    def test_sum_of_squares_shape(self):
        ast = E.parse("s1^2 + s2^2", FOUR_VARS)
        assert isinstance(ast, E.Binary) and ast.op == "+"
        assert isinstance(ast.left, E.Pow) and ast.left.base == E.Var("s1")
        assert ast.left.exponent == Fraction(2)

    def test_randers_style_expression(self):
        ast = E.parse("sqrt(s1^2+s2^2) + 0.3*s1", FOUR_VARS)
        assert isinstance(ast, E.Binary) and ast.op == "+"
        assert isinstance(ast.left, E.Unary) and ast.left.op == "sqrt"

    def test_truncated_input_reports_position(self):
        with pytest.raises(ExpressionSyntaxError) as err:
            E.parse("s1 + ", FOUR_VARS)
        assert err.value.position == 6

    def test_unknown_variable(self):
        with pytest.raises(UnknownVariable):
            E.parse("s1 + q7", ["s1"])

    def test_unknown_function(self):
        with pytest.raises(ExpressionSyntaxError):
            E.parse("tan(s1)", ["s1"])

    def test_pow_binds_tighter_than_unary_minus(self):
        ast = E.parse("-s1^2", ["s1"])
        assert isinstance(ast, E.Unary) and ast.op == "neg"
        assert isinstance(ast.arg, E.Pow)

    def test_rational_exponents(self):
        ast = E.parse("s1^(3/2)", ["s1"])
        assert ast.exponent == Fraction(3, 2)
        ast = E.parse("s1^(-1/2)", ["s1"])
        assert ast.exponent == Fraction(-1, 2)
        ast = E.parse("s1^-2", ["s1"])
        assert ast.exponent == Fraction(-2)

    def test_whitespace_insensitive(self):
        a = E.parse("s1 * s2+ t1", FOUR_VARS)
        b = E.parse("s1*s2+t1", FOUR_VARS)
        assert a == b

    def test_left_associativity(self):
        ast = E.parse("s1 - s2 - t1", FOUR_VARS)
        assert ast.op == "-" and isinstance(ast.left, E.Binary) and ast.left.op == "-"


# random AST generator for the round-trip property
_names = st.sampled_from(FOUR_VARS)
_leaf = st.one_of(
    _names.map(E.Var),
    st.floats(min_value=0.1, max_value=5.0).map(lambda v: E.Const(round(v, 3))),
)


def _exprs(depth):
    if depth == 0:
        return _leaf
    sub = _exprs(depth - 1)
    return st.one_of(
        _leaf,
        st.tuples(st.sampled_from("+-*/"), sub, sub).map(lambda t: E.Binary(t[0], t[1], t[2])),
        st.tuples(st.sampled_from(["neg", "sqrt", "sin", "cos", "exp"]), sub).map(
            lambda t: E.Unary(t[0], t[1])
        ),
        st.tuples(sub, st.sampled_from([1, 2, 3, Fraction(1, 2)])).map(
            lambda t: E.Pow(t[0], Fraction(t[1]))
        ),
    )


class TestPrettyRoundTrip:
    @settings(max_examples=120, deadline=None)
    @given(_exprs(3))
    def test_roundtrip_structurally_identical(self, ast):
        text = E.pretty(ast)
        assert E.parse(text, FOUR_VARS) == ast

    def test_specific_nesting(self):
        text = "s1 - (s2 - s1) * 2 / (s1 + 1)"
        ast = E.parse(text, FOUR_VARS)
        assert E.parse(E.pretty(ast), FOUR_VARS) == ast


class TestEvalTaylor:
    def test_plain_value(self):
        ast = E.parse("s1^2 + s2^2", FOUR_VARS)
        b = {"s1": J.constant(3.0, 2, 0), "s2": J.constant(4.0, 2, 0)}
        assert E.eval_taylor(ast, b).value == 25.0

    def test_euclidean_norm_gradient(self):
        ast = E.parse("sqrt(s1^2 + s2^2)", ["s1", "s2"])
        b = {
            "s1": J.lift_variable(0, 3.0, 2, 1),
            "s2": J.lift_variable(1, 4.0, 2, 1),
        }
        assert math.isclose(E.eval_taylor(ast, b).partial((1, 0)), 3.0 / 5.0)

    def test_mixed_partial(self):
        ast = E.parse("t1*s1", ["t1", "s1"])
        b = {
            "t1": J.lift_variable(0, 0.7, 2, 2),
            "s1": J.lift_variable(1, -0.4, 2, 2),
        }
        assert E.eval_taylor(ast, b).partial((1, 1)) == 1.0

    def test_order_zero_matches_plain_eval_exactly(self):
        rng = np.random.default_rng(17)
        texts = [
            "sqrt(s1^2 + s2^2) + 0.3*cos(t1)*s1",
            "exp(t1*t2) - s1/(1 + s2^2)",
            "(s1^4 + s2^4)^(1/2)",
        ]
        for text in texts:
            ast = E.parse(text, FOUR_VARS)
            for _ in range(10):
                vals = {
                    "t1": rng.uniform(-1, 1),
                    "t2": rng.uniform(-1, 1),
                    "s1": rng.uniform(0.3, 1.5),
                    "s2": rng.uniform(0.3, 1.5),
                }
                taylor = E.eval_taylor(
                    ast, {k: J.constant(v, 1, 0) for k, v in vals.items()}
                ).value
                assert taylor == E.eval_plain(ast, vals)

    def test_derivatives_match_finite_differences(self):
        text = "exp(0.4*t1)*sin(s1) + sqrt(1 + t1^2 + s1^2)"
        ast = E.parse(text, ["t1", "s1"])
        pt = np.array([0.35, 0.75])

        def plain(v):
            return E.eval_plain(ast, {"t1": v[0], "s1": v[1]})

        b = {
            "t1": J.lift_variable(0, pt[0], 2, 3),
            "s1": J.lift_variable(1, pt[1], 2, 3),
        }
        tv = E.eval_taylor(ast, b)
        for m in [(1, 0), (0, 1), (1, 1), (2, 0), (1, 2)]:
            fd = central_fd(plain, pt, m)
            assert abs(tv.partial(m) - fd) <= 1e-5 * max(1.0, abs(fd))

    def test_error_carries_position(self):
        ast = E.parse("sqrt(s1 - 10)", ["s1"])
        with pytest.raises(EvaluationError) as err:
            E.eval_taylor(ast, {"s1": J.constant(1.0, 1, 2)})
        assert err.value.position == 1


class TestSubstitute:
    def test_linear_substitution(self):
        ast = E.parse("s1^2 + t1", FOUR_VARS)
        sub = E.substitute(ast, {"s1": E.parse("2*s2", FOUR_VARS)})
        vals = {"t1": 0.5, "t2": 0.0, "s1": 9.0, "s2": 1.5}
        assert E.eval_plain(sub, vals) == (2 * 1.5) ** 2 + 0.5


class TestHomogeneity:
    def _samples(self, seed=4, count=8):
        rng = np.random.default_rng(seed)
        return [
            {
                "t1": rng.uniform(-1, 1),
                "t2": rng.uniform(-1, 1),
                "s1": rng.uniform(0.3, 1.4),
                "s2": rng.uniform(0.3, 1.4),
            }
            for _ in range(count)
        ]

    def test_euclidean_degree_two_exact(self):
        ast = E.parse("s1^2 + s2^2", FOUR_VARS)
        rep = E.check_homogeneity(ast, ["s1", "s2"], 2, self._samples(), 2.0)
        assert rep.passed and rep.max_residual == 0.0

    def test_quartic_minkowski(self):
        ast = E.parse("(s1^4 + s2^4)^(1/2)", FOUR_VARS)
        rep = E.check_homogeneity(ast, ["s1", "s2"], 2, self._samples(), 3.0, tol=1e-12)
        assert rep.passed

    def test_broken_structure_fails(self):
        ast = E.parse("s1^2 + t1", FOUR_VARS)
        rep = E.check_homogeneity(ast, ["s1", "s2"], 2, self._samples(), 2.0)
        assert not rep.passed and rep.max_residual > 0.1
