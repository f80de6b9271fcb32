"""Exact rational-function coefficients in degree-zero base coordinates.

A :class:`CoeffExpr` is a reduced fraction ``num/den`` of sparse polynomials
with :class:`fractions.Fraction` coefficients. Polynomials are dicts keyed by
monomials, a monomial being a name-sorted tuple of ``(symbol, exponent)``
pairs, so expressions over different symbol sets mix without conversion.

Canonical form: ``gcd(num, den) == 1`` and ``den`` is monic with respect to the
graded order ``(total degree, monomial tuple)``. Two equal rational functions
therefore have identical ``num`` and ``den`` dicts.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from itertools import chain
from typing import Iterable, Mapping, Union

from .expr import UndeclaredSymbolError, fold, parse_ast, symbols_of

Monomial = tuple  # tuple[tuple[str, int], ...]
Poly = dict  # dict[Monomial, Fraction]

ONE_MONO: Monomial = ()


class DomainError(ArithmeticError):
    """Evaluation point lies on a pole of the expression."""


# -- sparse polynomial helpers -------------------------------------------------

def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    acc = dict(a)
    for name, e in b:
        acc[name] = acc.get(name, 0) + e
    return tuple(sorted(acc.items()))


def _mono_key(m: Monomial):
    return (sum(e for _, e in m), m)


def _padd(a: Poly, b: Poly, sign: int = 1) -> Poly:
    out = dict(a)
    for m, c in b.items():
        v = out.get(m, 0) + sign * c
        if v:
            out[m] = v
        else:
            out.pop(m, None)
    return out


def _pmul(a: Poly, b: Poly) -> Poly:
    if len(a) == 1 and ONE_MONO in a:
        c = a[ONE_MONO]
        return {m: c * v for m, v in b.items()}
    if len(b) == 1 and ONE_MONO in b:
        c = b[ONE_MONO]
        return {m: c * v for m, v in a.items()}
    out: Poly = {}
    for ma, ca in a.items():
        for mb, cb in b.items():
            m = _mono_mul(ma, mb)
            v = out.get(m, 0) + ca * cb
            if v:
                out[m] = v
            else:
                out.pop(m, None)
    return out


def _pscale(a: Poly, c: Fraction) -> Poly:
    if c == 1:
        return dict(a)
    return {m: c * v for m, v in a.items()} if c else {}


def _is_const(p: Poly) -> bool:
    return not p or (len(p) == 1 and ONE_MONO in p)


def _psymbols(p: Poly) -> set[str]:
    return {name for m in p for name, _ in m}


def _pdiff(p: Poly, s: str) -> Poly:
    out: Poly = {}
    for m, c in p.items():
        d = dict(m)
        e = d.get(s, 0)
        if not e:
            continue
        if e == 1:
            del d[s]
        else:
            d[s] = e - 1
        key = tuple(sorted(d.items()))
        out[key] = out.get(key, 0) + c * e
    return {m: c for m, c in out.items() if c}


def _pleading(p: Poly) -> Fraction:
    return p[max(p, key=_mono_key)]


@lru_cache(maxsize=256)
def _sympy_ring(names: tuple[str, ...]):
    from sympy import QQ
    from sympy.polys.rings import ring

    return ring(",".join(names), QQ)[0] if names else None


def _to_sympy(p: Poly, names: tuple[str, ...], R):
    from sympy import QQ

    index = {n: i for i, n in enumerate(names)}
    terms = {}
    for m, c in p.items():
        exps = [0] * len(names)
        for name, e in m:
            exps[index[name]] = e
        terms[tuple(exps)] = QQ(c.numerator, c.denominator)
    return R.from_dict(terms)


def _from_sympy(q, names: tuple[str, ...]) -> Poly:
    out = {}
    for exps, c in q.terms():
        mono = tuple((n, e) for n, e in zip(names, exps) if e)
        out[mono] = Fraction(int(c.numerator), int(c.denominator))
    return out


def _cancel(num: Poly, den: Poly) -> tuple[Poly, Poly]:
    """Remove the polynomial gcd (delegated to sympy's multivariate gcd)."""
    shared = _psymbols(num) & _psymbols(den)
    if not shared:
        return num, den
    names = tuple(sorted(_psymbols(num) | _psymbols(den)))
    R = _sympy_ring(names)
    _, n2, d2 = _to_sympy(num, names, R).cofactors(_to_sympy(den, names, R))
    return _from_sympy(n2, names), _from_sympy(d2, names)


# -- CoeffExpr -------------------------------------------------------------------

Scalar = Union[int, Fraction, "CoeffExpr"]


class CoeffExpr:
    """Immutable exact rational function in named degree-zero symbols."""

    __slots__ = ("num", "den", "_hash")

    def __init__(self, num: Poly, den: Poly | None = None, *, _canonical: bool = False):
        if den is None:
            den = {ONE_MONO: Fraction(1)}
        if not _canonical:
            num, den = _canonicalize(num, den)
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, key, value):
        raise AttributeError("CoeffExpr is immutable")

    # constructors
    @classmethod
    def const(cls, value) -> "CoeffExpr":
        value = Fraction(value)
        if value == 0:
            return ZERO
        if value == 1:
            return ONE
        return cls({ONE_MONO: value}, {ONE_MONO: Fraction(1)}, _canonical=True)

    @classmethod
    def symbol(cls, name: str) -> "CoeffExpr":
        return cls({((name, 1),): Fraction(1)}, {ONE_MONO: Fraction(1)}, _canonical=True)

    @classmethod
    def coerce(cls, value: Scalar) -> "CoeffExpr":
        if isinstance(value, CoeffExpr):
            return value
        if isinstance(value, (int, Fraction)):
            return cls.const(value)
        return NotImplemented

    # predicates
    def is_zero(self) -> bool:
        return not self.num

    def is_constant(self) -> bool:
        return _is_const(self.num) and _is_const(self.den)

    def is_polynomial(self) -> bool:
        return _is_const(self.den)

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError(f"{self} is not constant")
        return self.num.get(ONE_MONO, Fraction(0))

    def symbols(self) -> set[str]:
        return _psymbols(self.num) | _psymbols(self.den)

    # arithmetic
    def __add__(self, other):
        other = CoeffExpr.coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if other.is_zero():
            return self
        if self.is_zero():
            return other
        if self.den == other.den:
            if _is_const(self.den):
                return CoeffExpr(_padd(self.num, other.num), self.den, _canonical=True)
            return CoeffExpr(_padd(self.num, other.num), self.den)
        num = _padd(_pmul(self.num, other.den), _pmul(other.num, self.den))
        return CoeffExpr(num, _pmul(self.den, other.den))

    __radd__ = __add__

    def __neg__(self):
        return CoeffExpr({m: -c for m, c in self.num.items()}, self.den, _canonical=True)

    def __sub__(self, other):
        other = CoeffExpr.coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = CoeffExpr.coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if self.is_zero() or other.is_zero():
            return ZERO
        if _is_const(self.den) and _is_const(other.den):
            return CoeffExpr(_pmul(self.num, other.num), self.den, _canonical=True)
        return CoeffExpr(_pmul(self.num, other.num), _pmul(self.den, other.den))

    __rmul__ = __mul__

    def inverse(self) -> "CoeffExpr":
        if self.is_zero():
            raise ZeroDivisionError("inverse of the zero expression")
        return CoeffExpr(self.den, self.num)

    def __truediv__(self, other):
        other = CoeffExpr.coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        return CoeffExpr.coerce(other) * self.inverse()

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        result, base = ONE, self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    # equality / hashing
    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = CoeffExpr.const(other)
        if not isinstance(other, CoeffExpr):
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self):
        h = self._hash
        if h is None:
            h = hash((frozenset(self.num.items()), frozenset(self.den.items())))
            object.__setattr__(self, "_hash", h)
        return h

    # calculus / evaluation
    def diff(self, s: str) -> "CoeffExpr":
        dn = _pdiff(self.num, s)
        dd = _pdiff(self.den, s)
        if not dd:
            return CoeffExpr(dn, self.den)
        num = _padd(_pmul(dn, self.den), _pmul(self.num, dd), -1)
        return CoeffExpr(num, _pmul(self.den, self.den))

    def evaluate(self, point: Mapping[str, Scalar]) -> Fraction:
        d = _peval(self.den, point)
        if d == 0:
            raise DomainError(f"denominator of {self} vanishes at {dict(point)}")
        return _peval(self.num, point) / d

    def compose(self, images: Mapping[str, "CoeffExpr"]) -> "CoeffExpr":
        """Substitute symbols by expressions; unmapped symbols stay as they are."""
        if not (self.symbols() & set(images)):
            return self
        return _pcompose(self.num, images) / _pcompose(self.den, images)

    def __str__(self):
        n = _pstr(self.num)
        if _is_const(self.den):
            return n
        if len(self.num) > 1 or n.startswith("-") or "/" in n:
            n = f"({n})"
        d = _pstr(self.den)
        if len(self.den) > 1 or len(next(iter(self.den))) > 1:
            d = f"({d})"
        return f"{n}/{d}"

    def leading_sign(self) -> int:
        """Sign of the numerator's leading coefficient (0 for zero)."""
        if not self.num:
            return 0
        return 1 if _pleading(self.num) > 0 else -1

    def __repr__(self):
        return f"CoeffExpr({str(self)!r})"


def _canonicalize(num: Poly, den: Poly) -> tuple[Poly, Poly]:
    num = {m: Fraction(c) for m, c in num.items() if c}
    den = {m: Fraction(c) for m, c in den.items() if c}
    if not den:
        raise ZeroDivisionError("zero denominator")
    if not num:
        return {}, {ONE_MONO: Fraction(1)}
    if _is_const(den):
        return _pscale(num, 1 / den[ONE_MONO]), {ONE_MONO: Fraction(1)}
    if not _is_const(num):
        num, den = _cancel(num, den)
        if _is_const(den):
            return _pscale(num, 1 / den[ONE_MONO]), {ONE_MONO: Fraction(1)}
    lc = _pleading(den)
    return _pscale(num, 1 / lc), _pscale(den, 1 / lc)


def _peval(p: Poly, point: Mapping[str, Scalar]) -> Fraction:
    total = Fraction(0)
    for m, c in p.items():
        term = c
        for name, e in m:
            if name not in point:
                raise ValueError(f"no value given for symbol {name!r}")
            v = point[name]
            if isinstance(v, CoeffExpr):
                v = v.constant_value()
            term *= Fraction(v) ** e
        total += term
    return total


def _pcompose(p: Poly, images: Mapping[str, CoeffExpr]) -> CoeffExpr:
    total = ZERO
    for m, c in p.items():
        term = CoeffExpr.const(c)
        for name, e in m:
            if name in images:
                term = term * images[name] ** e
            else:
                term = term * CoeffExpr({((name, e),): Fraction(1)}, _canonical=True)
        total = total + term
    return total


def _fmt_frac(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def _pstr(p: Poly) -> str:
    if not p:
        return "0"
    parts = []
    for m in sorted(p, key=_mono_key, reverse=True):
        c = p[m]
        mono = "*".join(name if e == 1 else f"{name}^{e}" for name, e in m)
        mag = abs(c)
        if not mono:
            body = _fmt_frac(mag)
        elif mag == 1:
            body = mono
        else:
            body = f"{_fmt_frac(mag)}*{mono}"
        parts.append(("-" if c < 0 else "+", body))
    out = ("-" if parts[0][0] == "-" else "") + parts[0][1]
    for sign, body in parts[1:]:
        out += f" {sign} {body}"
    return out


ZERO = CoeffExpr({}, {ONE_MONO: Fraction(1)}, _canonical=True)
ONE = CoeffExpr({ONE_MONO: Fraction(1)}, {ONE_MONO: Fraction(1)}, _canonical=True)


# -- module-level API ----------------------------------------------------------------

def parse(text: str, symbols: Iterable[str]) -> CoeffExpr:
    """Parse ``text`` into canonical form; every identifier must be declared."""
    declared = set(symbols)
    ast = parse_ast(text)
    for name, pos in symbols_of(ast):
        if name not in declared:
            raise UndeclaredSymbolError(name, pos)
    return fold(ast, num=CoeffExpr.const, sym=lambda name, pos: CoeffExpr.symbol(name))


def differentiate(e: CoeffExpr, s: str) -> CoeffExpr:
    return e.diff(s)


def evaluate(e: CoeffExpr, point: Mapping[str, Scalar]) -> Fraction:
    return e.evaluate(point)


def all_symbols(exprs: Iterable[CoeffExpr]) -> set[str]:
    return set(chain.from_iterable(e.symbols() for e in exprs))
