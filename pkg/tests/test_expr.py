import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from subflow.corpus import EXPRESSIONS
from subflow.errors import ArityError, DomainError, ParseError
from subflow.expr import (
    Bin, Call, Lit, Neg, Pow, ScalarExpr, Var, compose, constant, derivative, dual_evaluate,
    emit, evaluate, gradient, parse, partial, variable,
)

from .helpers import arity_of, in_domain_points, random_expression


# parse

def test_parse_builds_expected_tree():
    e = parse("x1*x1 + x2", 2)
    assert e.node == Bin("+", Bin("*", Var(1), Var(1)), Var(2))
    assert e.arity == 2


def test_incomplete_input_reports_offset():
    with pytest.raises(ParseError) as info:
        parse("x1 +", 1)
    assert info.value.position == 4
    assert "offset 4" in str(info.value)


def test_variable_beyond_arity():
    with pytest.raises(ArityError):
        parse("x3", 2)


@pytest.mark.parametrize("src, pos", [("x1 * * x2", 5), ("sin x1", 4), ("(x1", 3), ("x1 $ 2", 3),
                                      ("x0", 0), ("foo(x1)", 0), ("x1^x2", 2)])
def test_syntax_errors_carry_positions(src, pos):
    with pytest.raises(ParseError) as info:
        parse(src, 2)
    assert info.value.position == pos


def test_power_is_right_associative_and_binds_tighter_than_negation():
    assert parse("2^3^2", 1).node == Pow(Lit(2.0), Pow(Lit(3.0), Lit(2.0)))
    assert parse("-x1^2", 1).node == Neg(Pow(Var(1), Lit(2.0)))
    assert evaluate(parse("2^3^2", 1), [0.0]) == 512.0


def test_subtraction_and_division_are_left_associative():
    assert evaluate(parse("8 - 3 - 2", 1), [0.0]) == 3.0
    assert evaluate(parse("8 / 4 / 2", 1), [0.0]) == 1.0


# eval

def test_eval_examples():
    assert evaluate(parse("x1*x1 + x2", 2), (3, 2)) == 11.0
    assert evaluate(parse("sin(x1)", 1), (0,)) == 0.0


def test_log_of_negative_names_subexpression():
    with pytest.raises(DomainError) as info:
        evaluate(parse("1 + log(x1)", 1), (-1,))
    assert info.value.subexpr == "log(x1)"


@pytest.mark.parametrize("src, x", [("sqrt(x1)", -1.0), ("1/x1", 0.0), ("x1^0.5", -2.0),
                                    ("x1^-1", 0.0), ("exp(x1)", 1e4), ("log(x1 - x1)", 3.0)])
def test_domain_violations_raise(src, x):
    with pytest.raises(DomainError):
        evaluate(parse(src, 1), (x,))


def test_integer_power_of_negative_base_is_allowed():
    assert evaluate(parse("x1^3", 1), (-2,)) == -8.0
    assert evaluate(parse("x1^0", 1), (0,)) == 1.0


def test_point_length_must_match_arity():
    with pytest.raises(ArityError):
        evaluate(parse("x1", 2), (1.0,))


# partial / gradient

def test_partial_examples():
    e = parse("x1*x1 + x2", 2)
    assert partial(e, 1, (3, 2)) == 6.0
    assert partial(parse("x1", 1), 1, (-7.5,)) == 1.0


def test_partial_matches_central_difference_on_exp_sin():
    e = parse("exp(x1)*sin(x1)", 1)
    x, h = 0.7, 1e-5
    fd = (evaluate(e, (x + h,)) - evaluate(e, (x - h,))) / (2 * h)
    ad = partial(e, 1, (x,))
    assert abs(ad - fd) <= 1e-6 * abs(ad)
    assert ad == pytest.approx(math.exp(x) * (math.sin(x) + math.cos(x)), rel=1e-15)


def test_gradient_examples():
    assert gradient(parse("x1*x2", 2), (2, 3)).tolist() == [3.0, 2.0]
    assert gradient(constant(5.0, 3), (1, 2, 3)).tolist() == [0.0, 0.0, 0.0]
    assert gradient(parse("x1 + x2", 2), (0.3, -9)).tolist() == [1.0, 1.0]


def test_dual_value_has_one_partial_per_variable():
    dv = dual_evaluate(parse("x1*x3", 4), (1, 2, 3, 4))
    assert dv.value == 3.0
    assert dv.partials.tolist() == [3.0, 0.0, 1.0, 0.0]


def test_product_rule_at_expression_level():
    rng = np.random.default_rng(3)
    a, b = parse("sin(x1)*x2", 2), parse("exp(x1 - x2)", 2)
    for x in rng.uniform(-2, 2, size=(50, 2)):
        lhs = gradient(a * b, x)
        rhs = gradient(a, x) * evaluate(b, x) + evaluate(a, x) * gradient(b, x)
        assert np.all(np.abs(lhs - rhs) <= 1e-12 * (1 + np.abs(lhs)))


def test_ad_agrees_with_finite_differences_on_corpus():
    rng = np.random.default_rng(11)
    h = 1e-5
    for src in EXPRESSIONS:
        e = parse(src, arity_of(src))
        for x in in_domain_points(e, rng, 100):
            g = gradient(e, x)
            for i in range(e.arity):
                step = np.zeros(e.arity)
                step[i] = h
                fd = (evaluate(e, x + step) - evaluate(e, x - step)) / (2 * h)
                assert abs(g[i] - fd) <= 1e-6 * (1 + abs(g[i])), (src, x, i)


def test_second_derivative_through_nested_diff():
    d = derivative(parse("x1^3 * x2", 2), 1)
    dd = derivative(d, 1)
    assert evaluate(dd, (2.0, 5.0)) == pytest.approx(6 * 2.0 * 5.0, rel=1e-14)
    assert partial(d, 2, (2.0, 5.0)) == pytest.approx(12.0, rel=1e-14)


def test_evaluation_is_deterministic():
    e = parse("tanh(x1)*exp(x2)/(1 + x3*x3)", 3)
    x = (0.123, -0.456, 0.789)
    assert evaluate(e, x) == evaluate(e, x)
    assert gradient(e, x).tobytes() == gradient(e, x).tobytes()


# compose

def test_compose_substitutes():
    F = parse("x1*x2", 2)
    e = compose(F, [variable(1, 1), variable(1, 1)])
    assert e.node == Bin("*", Var(1), Var(1))
    g = parse("sin(x1) + x2", 2)
    assert compose(parse("x1", 1), [g]) == g


def test_compose_checks_arities():
    with pytest.raises(ArityError):
        compose(parse("x1*x2", 2), [variable(1, 1)])
    with pytest.raises(ArityError):
        compose(parse("x1 + x2", 2), [variable(1, 1), variable(1, 2)])


def test_compose_gradient_obeys_chain_rule():
    rng = np.random.default_rng(5)
    outer = [parse(s, 2) for s in ("x1*x2", "sin(x1) + x2^2", "exp(x1 - x2)")]
    inner = [parse(s, 3) for s in ("x1*x1", "x1 + x2*x3", "cos(x3)", "tanh(x2)")]
    for _ in range(100):
        F = outer[rng.integers(len(outer))]
        fs = [inner[i] for i in rng.integers(len(inner), size=2)]
        x = rng.uniform(-1.5, 1.5, 3)
        lhs = gradient(compose(F, fs), x)
        dF = gradient(F, [evaluate(f, x) for f in fs])
        rhs = dF[0] * gradient(fs[0], x) + dF[1] * gradient(fs[1], x)
        assert np.all(np.abs(lhs - rhs) <= 1e-10 * (1 + np.abs(lhs)))


# emit

def test_emit_examples():
    assert emit(ScalarExpr(Bin("+", Var(1), Lit(2.0)), 1)) == "x1 + 2"
    assert emit(ScalarExpr(Bin("-", Var(1), Bin("-", Var(2), Var(3))), 3)) == "x1 - (x2 - x3)"
    assert emit(ScalarExpr(Pow(Neg(Var(1)), Lit(2.0)), 1)) == "(-x1)^2"
    assert emit(ScalarExpr(Call("exp", Neg(Var(1))), 1)) == "exp(-x1)"


@pytest.mark.parametrize("src", EXPRESSIONS)
def test_round_trip_on_corpus(src):
    e = parse(src, arity_of(src))
    assert parse(emit(e), e.arity) == e
    assert parse(emit(parse(emit(e), e.arity)), e.arity) == e


def test_round_trip_on_generated_trees():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        e = ScalarExpr(random_expression(rng, 3, depth=5), 3)
        assert parse(emit(e), 3) == e, emit(e)


@st.composite
def trees(draw, depth=4):
    seed = draw(st.integers(0, 2**32 - 1))
    return random_expression(np.random.default_rng(seed), 2, depth=depth)


@settings(max_examples=200, deadline=None)
@given(trees())
def test_round_trip_property(node):
    e = ScalarExpr(node, 2)
    assert parse(emit(e), 2) == e


def test_diff_nodes_round_trip():
    d = derivative(parse("sin(x1*x2)", 2), 2)
    assert emit(d) == "diff(sin(x1 * x2), x2)"
    assert parse(emit(d), 2) == d


def test_literals_must_be_finite_and_non_negative():
    with pytest.raises(ValueError):
        Lit(-1.0)
    with pytest.raises(ValueError):
        Lit(math.inf)
