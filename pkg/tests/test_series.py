import random

import pytest
from hypothesis import given, strategies as st

from gvbundle.series import (
    DegreeError,
    GeneratorSignature,
    GradedFunction,
    NotInvertibleError,
    body_value,
    enumerate_multiindices,
    fiber_weight_parts,
    is_fiber_linear,
    koszul_sign,
    parse_function,
    partial_derivative,
    reciprocal,
    series_mul,
    substitute,
)
from oracles import brute_multiindices, koszul_oracle, word_product
from randgen import rand_function, rand_homogeneous, rand_signature

SIG = GeneratorSignature.build([("theta", -1), ("xi", 1), ("p", 2)], coeff_symbols=["x"])


def f(text, sig=SIG, W=6):
    return parse_function(text, sig, W)


def test_multiindex_examples():
    odd = GeneratorSignature.build([("a", 1), ("b", -1)])
    assert enumerate_multiindices(odd, 0, 4) == [(0, 0), (1, 1)]
    even = GeneratorSignature.build([("a", 2), ("b", -2)])
    assert enumerate_multiindices(even, 0, 4) == [(0, 0), (1, 1), (2, 2)]


@given(st.lists(st.integers(-3, 3).filter(bool), min_size=1, max_size=4), st.integers(-4, 4), st.integers(0, 5))
def test_multiindices_match_brute_force(degrees, k, W):
    sig = GeneratorSignature.build([(f"g{i}", d) for i, d in enumerate(degrees)])
    assert sorted(enumerate_multiindices(sig, k, W)) == brute_multiindices(degrees, k, W)


def test_koszul_example():
    sig = GeneratorSignature.build([("a", 1), ("b", 1)])
    assert koszul_sign(sig, (0, 1), (1, 0)) == -1


@given(st.lists(st.integers(-3, 3), min_size=1, max_size=4), st.data())
def test_koszul_matches_oracle(degrees, data):
    sig = GeneratorSignature.build([(f"g{i}", d) for i, d in enumerate(degrees)], coeff_symbols=[])
    exps = st.tuples(*[st.integers(0, 1 if d % 2 else 2) for d in degrees])
    r, s = data.draw(exps), data.draw(exps)
    assert koszul_sign(sig, r, s) == koszul_oracle(degrees, r, s)


def test_unit_times_inverse():
    a = f("1 + theta*xi")
    b = f("1 - theta*xi")
    assert series_mul(a, b) == GradedFunction.const(SIG, 1, 6)


def test_odd_square_vanishes():
    xi = f("xi")
    assert series_mul(xi, xi).is_zero()
    assert series_mul(f("theta*xi"), f("theta*xi")).is_zero()


def test_body_of_nonzero_degree_is_zero():
    g = f("x*xi*p")
    assert g.degree == 3
    assert body_value(g, {"x": 5}) == 0
    assert body_value(f("x^2 + theta*xi"), {"x": 3}) == 9


def test_derivative_example():
    assert partial_derivative(f("theta*xi"), "xi") == -f("theta")
    assert partial_derivative(f("theta*xi"), "theta") == f("xi")


def test_derivative_lowers_weight():
    g = f("p^3")
    assert partial_derivative(g, "p").W == 5
    assert partial_derivative(g, "x").W == 6


def test_reciprocal_example():
    assert reciprocal(f("1 + theta*xi")) == f("1 - theta*xi")
    g = f("1 + x + theta*xi")
    r = reciprocal(g)
    assert series_mul(g, r).truncate(6) == GradedFunction.const(SIG, 1, 6)
    with pytest.raises(NotInvertibleError):
        reciprocal(f("theta*xi"))


def test_substitute_example():
    g = f("xi*theta")
    images = {"xi": f("(1 + x^2)*xi"), "theta": f("theta"), "p": f("p")}
    assert substitute(g, images, {}, SIG) == f("(1 + x^2)*xi*theta")


def test_substitute_coefficient_symbol_by_series():
    # x -> x + theta*xi: Taylor expansion of 1/(1+x^2) to first order
    g = f("1/(1 + x^2)")
    out = substitute(g, {}, {"x": f("x + theta*xi")}, SIG)
    assert out == f("1/(1 + x^2) - 2*x/(1 + x^2)^2*theta*xi")


def test_degree_mismatch_raises():
    with pytest.raises(DegreeError):
        f("xi") + f("p")
    assert (f("xi") + GradedFunction.zero(SIG, 0, 6)) == f("xi")


def test_render_parse_examples():
    for text in ["3*x^2*theta*xi", "-x*p + p/(x + 1)", "theta*xi - 2*x^2", "theta*p*xi", "0"]:
        g = f(text)
        assert f(str(g)) == g


def test_fiber_weight_parts():
    sig = GeneratorSignature.build([("xi", 1), ("k", 0), ("l", -1)], fiber=["k", "l"], coeff_symbols=["x"])
    lin = parse_function("x*k + xi*l", sig, 4)
    assert is_fiber_linear(lin)
    assert list(fiber_weight_parts(lin)) == [1]
    mixed = parse_function("x + k*k + xi*l", sig, 4)
    assert not is_fiber_linear(mixed)
    assert sorted(fiber_weight_parts(mixed)) == [0, 1, 2]


# -- randomized laws against the word-sorting oracle ---------------------------------------

@pytest.mark.parametrize("seed", range(25))
def test_mul_matches_word_oracle(seed):
    rng = random.Random(seed)
    sig = rand_signature(rng, max_gens=4)
    W = 5
    a = rand_homogeneous(rng, sig, W)
    b = rand_homogeneous(rng, sig, W)
    got = series_mul(a, b)
    want = word_product(dict(a.terms), dict(b.terms), sig.degrees, W)
    assert {p: c for p, c in got.terms.items()} == want


@pytest.mark.parametrize("seed", range(25))
def test_commutativity_associativity_leibniz(seed):
    rng = random.Random(100 + seed)
    sig = rand_signature(rng, max_gens=4)
    W = 5
    a, b, c = (rand_homogeneous(rng, sig, W) for _ in range(3))
    sign = -1 if (a.degree * b.degree) % 2 else 1
    assert series_mul(a, b) == series_mul(b, a) * sign
    assert series_mul(series_mul(a, b), c) == series_mul(a, series_mul(b, c))
    name, d = rng.choice(sig.generators)
    lhs = partial_derivative(series_mul(a, b), name)
    s2 = -1 if (d * a.degree) % 2 else 1
    rhs = series_mul(partial_derivative(a, name), b) + series_mul(a, partial_derivative(b, name)) * s2
    assert lhs.truncate(W - 1) == rhs.truncate(W - 1)


@pytest.mark.parametrize("seed", range(10))
def test_reciprocal_random(seed):
    rng = random.Random(200 + seed)
    sig = rand_signature(rng, max_gens=3)
    g = rand_function(rng, sig, 0, 5) + GradedFunction.const(sig, rng.choice([1, 2, -3]), 5)
    if body_value(g, {"x": 0}) == 0:
        return
    assert series_mul(g, reciprocal(g)) == GradedFunction.const(sig, 1, 5)
