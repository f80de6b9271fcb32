"""Seeded random builders for signatures, series and matrices."""

from __future__ import annotations

import random
from fractions import Fraction

from gvbundle.scalar import CoeffExpr
from gvbundle.series import GeneratorSignature, GradedFunction, enumerate_multiindices

X = CoeffExpr.symbol("x")


def rand_coeff(rng: random.Random, rational=False) -> CoeffExpr:
    c = CoeffExpr.const(Fraction(rng.randint(-3, 3), rng.randint(1, 2)))
    if rng.random() < 0.3:
        c = c + X * rng.randint(-2, 2)
    if rational and rng.random() < 0.2:
        c = c / (X * X + 1)
    return c


def rand_signature(rng: random.Random, max_gens=5, deg_range=(-3, 3), allow_zero=False) -> GeneratorSignature:
    n = rng.randint(1, max_gens)
    degs = []
    for _ in range(n):
        d = rng.randint(*deg_range)
        while d == 0 and not allow_zero:
            d = rng.randint(*deg_range)
        degs.append(d)
    return GeneratorSignature.build([(f"g{i}", d) for i, d in enumerate(degs)], coeff_symbols=["x"])


def rand_function(rng: random.Random, sig, degree, W, max_terms=4, rational=False) -> GradedFunction:
    idx = enumerate_multiindices(sig, degree, W)
    terms = {}
    for p in rng.sample(idx, min(len(idx), rng.randint(1, max_terms))) if idx else []:
        terms[p] = rand_coeff(rng, rational)
    return GradedFunction(sig, degree, W, terms)


def rand_homogeneous(rng, sig, W, max_terms=4, degrees=None):
    """A nonzero homogeneous function of some reachable degree, if any."""
    degrees = degrees or list(range(-4, 5))
    rng.shuffle(degrees)
    for d in degrees:
        f = rand_function(rng, sig, d, W, max_terms)
        if not f.is_zero():
            return f
    return GradedFunction.const(sig, 1, W)


def rand_nilpotent_noise(rng, sig, degree, W, max_terms=3) -> GradedFunction:
    """Random function of the given degree with no weight-0 part."""
    f = rand_function(rng, sig, degree, W, max_terms)
    zero = sig.zero_index()
    return GradedFunction(sig, degree, W, {p: c for p, c in f.terms.items() if p != zero})


def rand_unipotent_matrix(rng, sig, W, n, deg_range=(-2, 2)):
    """Square graded matrix whose degree-zero block is I plus weight >= 1 noise."""
    from gvbundle.matrix import GradedMatrix

    degs = [rng.randint(*deg_range) for _ in range(n)]
    rows = []
    for i in range(n):
        row = []
        for k in range(n):
            g = rand_nilpotent_noise(rng, sig, degs[i] - degs[k], W)
            if i == k:
                g = g + GradedFunction.const(sig, 1, W)
            row.append(g)
        rows.append(row)
    return GradedMatrix(degs, degs, rows, sig, W)
