"""Independent reference implementations used to cross-check the kernel."""

from __future__ import annotations

import itertools
from fractions import Fraction


def expand_monomial(p):
    """Monomial g^p as the ordered list of generator indices it multiplies."""
    return [i for i, e in enumerate(p) for _ in range(e)]


def sort_sign(word, degrees):
    """Bubble-sort word by generator index; count swaps of two odd letters."""
    word = list(word)
    sign = 1
    for i in range(len(word)):
        for j in range(len(word) - 1 - i):
            if word[j] > word[j + 1]:
                if degrees[word[j]] % 2 and degrees[word[j + 1]] % 2:
                    sign = -sign
                word[j], word[j + 1] = word[j + 1], word[j]
    return sign


def koszul_oracle(degrees, r, s):
    return sort_sign(expand_monomial(r) + expand_monomial(s), degrees)


def brute_multiindices(degrees, k, W):
    out = []
    for p in itertools.product(range(W + 1), repeat=len(degrees)):
        if sum(p) > W:
            continue
        if any(e > 1 for e, d in zip(p, degrees) if d % 2):
            continue
        if sum(e * d for e, d in zip(p, degrees)) == k:
            out.append(p)
    return sorted(out)


def word_product(f_terms, g_terms, degrees, W):
    """Multiply two series by expanding every monomial into a word and sorting it."""
    out = {}
    for r, a in f_terms.items():
        for s, b in g_terms.items():
            word = expand_monomial(r) + expand_monomial(s)
            p = tuple(word.count(i) for i in range(len(degrees)))
            if sum(p) > W or any(e > 1 for e, d in zip(p, degrees) if d % 2):
                continue
            v = a * b * sort_sign(word, degrees)
            out[p] = out.get(p, 0) + v
    return {p: c for p, c in out.items() if c != 0}


def rank(rows):
    """Rank of a list of rational rows by plain elimination."""
    m = [[Fraction(x) for x in r] for r in rows]
    rk = 0
    cols = len(m[0]) if m else 0
    for c in range(cols):
        piv = next((i for i in range(rk, len(m)) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[rk], m[piv] = m[piv], m[rk]
        for i in range(len(m)):
            if i != rk and m[i][c] != 0:
                f = m[i][c] / m[rk][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[rk])]
        rk += 1
    return rk
