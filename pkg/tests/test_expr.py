import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fermisig.errors import EvaluationError, ExprSyntaxError, UnknownFunction
from fermisig.expr import BinOp, Call, Neg, Num, Var, parse_expression, to_text


def test_difference_of_squares():
    assert parse_expression("t^2 - x^2")(2.0, 1.0) == 3.0


def test_min_of_distances():
    assert parse_expression("min(x, 1-x)")(0.0, 0.7) == pytest.approx(0.3, abs=1e-15)


def test_division_by_zero_is_an_evaluation_error():
    e = parse_expression("1/(x-x)")  # parses fine
    with pytest.raises(EvaluationError):
        e(0.0, 0.3)


def test_power_is_right_associative():
    assert parse_expression("2^3^2")(0, 0) == 512.0


def test_unary_minus_binds_below_power():
    assert parse_expression("-2^2")(0, 0) == -4.0
    assert parse_expression("(-2)^2")(0, 0) == 4.0


def test_product_before_sum():
    assert parse_expression("1 + 2*3 - 4/2")(0, 0) == 5.0


def test_vectorized_evaluation():
    x = np.linspace(0, 1, 5)
    out = parse_expression("sin(x) + t")(np.zeros_like(x), x)
    np.testing.assert_allclose(out, np.sin(x))


def test_constant_broadcasts_to_input_shape():
    out = parse_expression("2")(np.zeros(3), np.zeros(3))
    assert out.shape == (3,)


@pytest.mark.parametrize("text, fn", [
    ("log(x)", lambda x: math.log(x)), ("sqrt(x)", math.sqrt), ("exp(x)", math.exp),
    ("abs(x - 1)", lambda x: abs(x - 1)), ("cos(x)", math.cos), ("max(x, 0.5, 0.2)", lambda x: max(x, 0.5)),
])
def test_functions(text, fn):
    assert parse_expression(text)(0.0, 0.3) == pytest.approx(fn(0.3), rel=1e-15)


@pytest.mark.parametrize("text", ["log(x - 1)", "sqrt(x - 1)", "(x - 1)^0.5"])
def test_domain_errors_at_evaluation(text):
    e = parse_expression(text)
    with pytest.raises(EvaluationError):
        e(0.0, 0.5)


@pytest.mark.parametrize("text", ["1 +", "(x", "x y", "2 ** 3", "sin()", "x $ 2", ""])
def test_syntax_errors(text):
    with pytest.raises(ExprSyntaxError):
        parse_expression(text)


def test_syntax_error_reports_column():
    with pytest.raises(ExprSyntaxError) as info:
        parse_expression("1 + * 2")
    assert info.value.position == 5


def test_unknown_function():
    with pytest.raises(UnknownFunction) as info:
        parse_expression("tan(x)")
    assert info.value.name == "tan"


def test_unknown_variable_is_rejected():
    with pytest.raises((ExprSyntaxError, UnknownFunction)):
        parse_expression("y + 1")


def test_derivative_of_product():
    d = parse_expression("t^2*sin(x)").diff("t")
    assert d(1.5, 0.4) == pytest.approx(2 * 1.5 * math.sin(0.4), rel=1e-14)


def test_second_derivative_of_gaussian():
    e = parse_expression("exp(-t^2)")
    dd = e.diff("t").diff("t")
    t = 0.7
    assert dd(t, 0.0) == pytest.approx((4 * t * t - 2) * math.exp(-t * t), rel=1e-13)


# ---------------------------------------------------------------- round trip

numbers = st.floats(min_value=0, max_value=1e6, allow_nan=False, allow_infinity=False).map(Num)
leaves = st.one_of(numbers, st.sampled_from([Var("t"), Var("x")]))


def _extend(children):
    unary = st.sampled_from(["sin", "cos", "exp", "log", "sqrt", "abs"])
    return st.one_of(
        children.map(Neg),
        st.builds(BinOp, st.sampled_from(["+", "-", "*", "/", "^"]), children, children),
        st.builds(lambda f, a: Call(f, (a,)), unary, children),
        st.builds(lambda f, a: Call(f, tuple(a)), st.sampled_from(["min", "max"]),
                  st.lists(children, min_size=2, max_size=3)),
    )


trees = st.recursive(leaves, _extend, max_leaves=12)


@settings(max_examples=300, deadline=None)
@given(trees)
def test_print_parse_round_trip(node):
    assert parse_expression(to_text(node)).node == node


@settings(max_examples=100, deadline=None)
@given(trees)
def test_printing_is_idempotent(node):
    text = to_text(node)
    assert str(parse_expression(text)) == text
