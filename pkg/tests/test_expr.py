import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from resonance import expr as ex

VARS = ["x", "t"]


def value(src, **bindings):
    return ex.evaluate(ex.parse(src, list(bindings) or VARS), bindings)


@pytest.mark.parametrize("src, expected", [
    ("2*sin(t)+1", 1.0),
    ("-2^2", -4.0),
    ("2^3^2", 512.0),
    ("8-3-2", 3.0),
    ("12/3/2", 2.0),
    ("pi", math.pi),
    ("e^1", math.e),
    ("abs(-3) + sign(-2) + sign(0)", 2.0),
    ("sqrt(16) * ln(e)", 4.0),
    ("tanh(0) + atan(1)*4", math.pi),
    ("1e-3 * 2.5E2", 0.25),
])
def test_precedence_and_constants(src, expected):
    assert value(src, t=0.0) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("src, offset", [("2t", 1), ("sin(t", 5), ("foo(t)", 0), ("t + y", 4), ("1 +", 3), ("(t))", 3)])
def test_syntax_errors_report_offset(src, offset):
    with pytest.raises(ex.ExpressionSyntaxError) as info:
        ex.parse(src, ["t"])
    assert info.value.position == offset


def test_reserved_variable_names_rejected():
    with pytest.raises(ex.ExpressionError):
        ex.parse("pi + 1", ["pi"])


@pytest.mark.parametrize("src, x", [("ln(x)", -1.0), ("ln(x)", 0.0), ("sqrt(x)", -2.0), ("1/x", 0.0), ("exp(x)", 1e4)])
def test_domain_errors_name_the_subexpression(src, x):
    with pytest.raises(ex.DomainError) as info:
        value(src, x=x)
    assert info.value.subexpression is not None
    assert str(info.value).count(" in '") == 1


def test_compiled_forms_raise_on_domain_failure():
    e = ex.parse("ln(x)", ["x"])
    with pytest.raises(ex.DomainError):
        ex.compile_scalar(e, ["x"])(-1.0)
    with pytest.raises(ex.DomainError):
        ex.compile_array(e, ["x"])(np.array([1.0, -1.0]))


def test_compile_array_broadcasts_constants():
    f = ex.compile_array(ex.parse("3", ["t"]), ["t"])
    assert f(np.zeros(5)).shape == (5,)


def test_derivative_of_abs_is_sign():
    d = ex.differentiate(ex.parse("abs(x)", ["x"]), "x")
    assert str(d) == "sign(x)"
    assert ex.evaluate(d, {"x": 0.0}) == 0.0


def test_substitute_folds_constants():
    e = ex.substitute(ex.parse("nu + sin(t)", ["nu", "t"]), {"nu": 0.5})
    assert ex.free_variables(e) == {"t"}
    assert ex.evaluate(e, {"t": 0.0}) == 0.5


# random expression trees --------------------------------------------------

_leaves = st.one_of(
    st.sampled_from(["x", "t", "pi"]),
    st.floats(0.1, 3.0).map(lambda v: f"{v:.3f}"),
)


def _extend(children):
    return st.one_of(
        st.tuples(children, st.sampled_from(["+", "-", "*"]), children).map(lambda p: f"({p[0]} {p[1]} {p[2]})"),
        st.tuples(st.sampled_from(["sin", "cos", "atan", "tanh"]), children).map(lambda p: f"{p[0]}({p[1]})"),
        children.map(lambda c: f"-{c}"),
        children.map(lambda c: f"({c})^2"),
    )


expressions = st.recursive(_leaves, _extend, max_leaves=12)


@pytest.mark.property
@settings(max_examples=150, deadline=None)
@given(expressions, st.floats(-2, 2), st.floats(-2, 2))
def test_print_parse_round_trip(src, x, t):
    e = ex.parse(src, VARS)
    again = ex.parse(str(e), VARS)
    assert again == e
    assert ex.evaluate(again, {"x": x, "t": t}) == ex.evaluate(e, {"x": x, "t": t})


@pytest.mark.property
@settings(max_examples=150, deadline=None)
@given(expressions, st.floats(-2, 2), st.floats(-2, 2))
def test_compiled_matches_interpreted(src, x, t):
    e = ex.parse(src, VARS)
    ref = ex.evaluate(e, {"x": x, "t": t})
    assert ex.compile_scalar(e, VARS)(x, t) == pytest.approx(ref, rel=1e-12, abs=1e-12)
    arr = ex.compile_array(e, VARS)(np.array([x, x]), np.array([t, t]))
    assert np.allclose(arr, ref, rtol=1e-12, atol=1e-12)


@pytest.mark.property
@settings(max_examples=150, deadline=None)
@given(expressions, st.floats(-2, 2), st.floats(-2, 2))
def test_derivative_matches_central_difference(src, x, t):
    e = ex.parse(src, VARS)
    d = ex.differentiate(e, "x")
    f = ex.compile_scalar(e, VARS)
    h = 1e-5
    fd = (f(x + h, t) - f(x - h, t)) / (2 * h)
    scale = max(1.0, abs(f(x + h, t)), abs(f(x - h, t)))
    assert ex.evaluate(d, {"x": x, "t": t}) == pytest.approx(fd, abs=1e-5 * scale * 10)
