from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from gvbundle.expr import ExprSyntaxError, UndeclaredSymbolError
from gvbundle.scalar import CoeffExpr, DomainError, differentiate, evaluate, parse

x, y = CoeffExpr.symbol("x"), CoeffExpr.symbol("y")


def test_canonical_cancellation():
    assert parse("(x^2 - 1)/(x - 1)", ["x"]) == x + 1
    assert parse("(2*x + 2)/(4*x + 4)", ["x"]) == CoeffExpr.const(Fraction(1, 2))


def test_structural_equality_of_equal_rationals():
    a = parse("1/(x + 1) - 1/(x - 1)", ["x"])
    b = parse("-2/(x^2 - 1)", ["x"])
    assert a == b and hash(a) == hash(b)


def test_monic_denominator():
    e = parse("1/(2*x + 4)", ["x"])
    assert e.den == (x + 2).num
    assert e.num == {(): Fraction(1, 2)}
    assert str(e) == "(1/2)/(x + 2)"


def test_derivative_quotient_rule():
    e = parse("x/(1 + x^2)", ["x"])
    assert differentiate(e, "x") == parse("(1 - x^2)/(1 + x^2)^2", ["x"])


def test_evaluate_and_pole():
    e = parse("1/(x - 1)", ["x"])
    assert evaluate(e, {"x": 3}) == Fraction(1, 2)
    with pytest.raises(DomainError):
        evaluate(e, {"x": 1})


def test_compose():
    e = parse("x^2 + 1", ["x"])
    assert e.compose({"x": y + 1}) == parse("y^2 + 2*y + 2", ["y"])


def test_parse_errors_carry_positions():
    with pytest.raises(ExprSyntaxError) as err:
        parse("x + * 2", ["x"])
    assert err.value.pos == 4
    with pytest.raises(UndeclaredSymbolError) as err:
        parse("x + z", ["x"])
    assert err.value.name == "z" and err.value.pos == 4


def test_render_roundtrip_examples():
    for text in ["2*x/(x^2 + 1)", "-x + 1", "(x - 1)/(x*y + 2)", "1/3"]:
        e = parse(text, ["x", "y"])
        assert parse(str(e), ["x", "y"]) == e


small = st.integers(-3, 3)
polys = st.builds(lambda a, b, c: CoeffExpr.const(a) + x * b + x * x * c, small, small, small)


@given(polys, polys, polys)
def test_field_laws(a, b, c):
    assert (a + b) * c == a * c + b * c
    assert a * b == b * a
    if not c.is_zero():
        assert (a / c) * c == a
        assert parse(str(a / c), ["x"]) == a / c
