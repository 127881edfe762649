import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dnni import expr
from dnni.expr import (
    BinOp,
    Call,
    Const,
    DomainError,
    ParseError,
    UnboundVariableError,
    Var,
    evaluate,
    evaluate_array,
    free_vars,
    parse,
    to_source,
)


class TestParse:
    def test_monomial_ast(self):
        assert parse("x^6") == BinOp("^", Var("x"), Const(6.0))

    def test_oscillatory_ast(self):
        tree = parse("x*sin(1/x^10)")
        assert tree == BinOp(
            "*", Var("x"),
            Call("sin", BinOp("/", Const(1.0), BinOp("^", Var("x"), Const(10.0)))))

    def test_unary_minus_exponent_rejected(self):
        with pytest.raises(ParseError):
            parse("x^-x")
        # the parenthesized form is the accepted spelling
        assert evaluate(parse("x^(-x)"), {"x": 1.0}) == 1.0

    def test_power_right_associative(self):
        assert evaluate(parse("2^3^2"), {}) == 512.0

    def test_precedence(self):
        assert evaluate(parse("2+3*4"), {}) == 14.0
        assert evaluate(parse("-2^2"), {}) == -4.0  # unary minus binds weaker than ^

    def test_parentheses_override(self):
        assert evaluate(parse("(2+3)*4"), {}) == 20.0

    def test_syntax_error_offset(self):
        with pytest.raises(ParseError) as err:
            parse("1 + * 2")
        assert err.value.offset == 4

    def test_unknown_function(self):
        with pytest.raises(ParseError, match="unknown function"):
            parse("foo(x)")

    def test_trailing_input(self):
        with pytest.raises(ParseError):
            parse("1 2")

    def test_number_forms(self):
        assert evaluate(parse("1.5e2"), {}) == 150.0
        assert evaluate(parse(".5"), {}) == 0.5
        assert evaluate(parse("2."), {}) == 2.0

    def test_non_ascii_rejected(self):
        with pytest.raises(ParseError):
            parse("x²")

    def test_pi_constant(self):
        assert evaluate(parse("pi"), {}) == math.pi
        assert free_vars(parse("sin(pi*x)")) == ["x"]


class TestEvaluate:
    def test_monomial(self):
        # direct arithmetic: 2^6
        assert evaluate(parse("x^6"), {"x": 2.0}) == 64.0

    def test_self_power(self):
        assert evaluate(parse("x^(-x)"), {"x": 1.0}) == 1.0

    def test_sqrt_identity(self):
        assert evaluate(parse("sqrt(1+x^2)"), {"x": 0.0}) == 1.0

    def test_unbound_variable(self):
        with pytest.raises(UnboundVariableError, match="'y'"):
            evaluate(parse("x+y"), {"x": 1.0})

    @pytest.mark.parametrize("source,binding", [
        ("log(x)", 0.0),
        ("log(x)", -1.0),
        ("sqrt(x)", -4.0),
        ("1/x", 0.0),
        ("x^0.5", -2.0),
        ("exp(x)", 1000.0),
        ("cosh(x)", 1000.0),
    ])
    def test_domain_errors(self, source, binding):
        with pytest.raises(DomainError):
            evaluate(parse(source), {"x": binding})

    def test_zero_to_zero_is_one(self):
        assert evaluate(parse("x^(-x)"), {"x": 0.0}) == 1.0

    def test_negative_base_integer_exponent(self):
        assert evaluate(parse("x^3"), {"x": -2.0}) == -8.0

    def test_pure(self):
        tree = parse("sin(x)*exp(x/3)+x^2")
        a = evaluate(tree, {"x": 0.7342342})
        b = evaluate(tree, {"x": 0.7342342})
        assert a == b

    def test_erf(self):
        assert evaluate(parse("erf(x)"), {"x": 0.0}) == 0.0
        assert evaluate(parse("erf(x)"), {"x": 1.0}) == pytest.approx(math.erf(1.0), abs=0)

    def test_function_values_match_libm(self):
        for source, fn in [("sin(x)", math.sin), ("tan(x)", math.tan),
                           ("sinh(x)", math.sinh), ("abs(x)", abs)]:
            assert evaluate(parse(source), {"x": 0.83}) == fn(0.83)


class TestEvaluateArray:
    def test_matches_scalar(self):
        # the vectorized path may differ from libm by a few ulps, nothing more
        tree = parse("x*sin(1/x^10)")
        xs = np.linspace(0.3, 1.0, 57)
        vec = evaluate_array(tree, {"x": xs})
        scalars = np.array([evaluate(tree, {"x": float(x)}) for x in xs])
        np.testing.assert_allclose(vec, scalars, rtol=0, atol=1e-9)

    def test_domain_trouble_yields_nonfinite(self):
        out = evaluate_array(parse("1/x"), {"x": np.array([0.0, 1.0])})
        assert not np.isfinite(out[0]) and out[1] == 1.0

    def test_as_array_function_with_params(self):
        f = expr.as_array_function(parse("a*x+b"), "x", {"a": 2.0, "b": 1.0})
        np.testing.assert_allclose(f(np.array([0.0, 3.0])), [1.0, 7.0])


class TestFreeVars:
    def test_x_only(self):
        assert free_vars(parse("x^6")) == ["x"]

    def test_lexicographic_without_x(self):
        assert free_vars(parse("sqrt(a^2-(a^2-b^2)*sin(t)^2)")) == ["a", "b", "t"]

    def test_constant(self):
        assert free_vars(parse("3.14")) == []

    def test_x_first(self):
        assert free_vars(parse("q*x^q/(exp(x-eta)+1)")) == ["x", "eta", "q"]


# random but parseable trees: nonnegative constants only, since a literal
# cannot carry a sign in the grammar
_leaf = st.one_of(
    st.floats(min_value=0.0, max_value=1e6, allow_nan=False),
    st.sampled_from(["x", "y", "z_1", "long_name"]),
)


def _to_tree(spec):
    if isinstance(spec, float):
        return Const(spec)
    if isinstance(spec, str):
        return Var(spec)
    kind = spec[0]
    if kind == "call":
        return Call(spec[1], _to_tree(spec[2]))
    return BinOp(spec[1], _to_tree(spec[2]), _to_tree(spec[3]))


_tree_spec = st.recursive(
    _leaf,
    lambda children: st.one_of(
        st.tuples(st.just("call"),
                  st.sampled_from(["neg", "sin", "cos", "tanh", "exp", "log",
                                   "sqrt", "erf", "abs"]),
                  children),
        st.tuples(st.just("bin"), st.sampled_from(list("+-*/^")), children, children),
    ),
    max_leaves=25,
)


@given(_tree_spec)
@settings(max_examples=200, deadline=None)
def test_to_source_round_trip(spec):
    tree = _to_tree(spec)
    assert parse(to_source(tree)) == tree


@given(st.floats(min_value=-50, max_value=50, allow_nan=False))
def test_round_trip_preserves_value(x):
    source = "x^2-3*x/(1+abs(x))"
    tree = parse(source)
    again = parse(to_source(tree))
    assert evaluate(tree, {"x": x}) == evaluate(again, {"x": x})


@pytest.mark.parametrize("source", [
    "x^6",
    "x*sin(1/x^10)",
    "sin(1/x)/(x+1)",
    "x^(-x)",
    "4*sqrt(a^2-(a^2-b^2)*sin(x)^2)",
    "x^q/(exp(x-eta)+1)",
    "x^q*sqrt(1+beta*x/2)/(exp(x-eta)+1)",
    "exp(-x^2/2)/sqrt(2*pi)",
    "(x^2+2*x+1+(3*x+1)*sqrt(x+log(x)))/(x*sqrt(x+log(x))*(x+sqrt(x+log(x))))",
    "-x^2+(-3)",
])
def test_source_round_trip_on_real_integrands(source):
    tree = parse(source)
    assert parse(to_source(tree)) == tree
