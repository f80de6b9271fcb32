"""Weight-truncated graded-commutative series.

A :class:`GradedFunction` is a homogeneous element of the function algebra of
a graded domain: a finite sum ``sum_p f_p * g^p`` over multi-indices ``p`` of a
fixed degree, each coefficient a :class:`~gvbundle.scalar.CoeffExpr` in the
degree-zero coefficient symbols. Everything is exact through the truncation
weight ``W`` (the total exponent of all generators).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Iterable, Mapping, Sequence

from .expr import UndeclaredSymbolError, fold, parse_ast, symbols_of
from .scalar import ONE, ZERO, CoeffExpr

DEFAULT_WEIGHT = 8


class SignatureError(ValueError):
    pass


class DegreeError(ValueError):
    pass


@dataclass(frozen=True)
class GeneratorSignature:
    """Ordered generators ``(name, degree)`` plus the coefficient symbols.

    ``fiber`` marks which generators are fiber coordinates; the remaining ones
    are base generators. Coefficient symbols are degree-zero base coordinates
    that live inside the coefficients rather than as series generators.
    """

    generators: tuple[tuple[str, int], ...]
    fiber: frozenset[str] = frozenset()
    coeff_symbols: tuple[str, ...] = ()
    index: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        names = [n for n, _ in self.generators]
        everything = names + list(self.coeff_symbols)
        if len(set(everything)) != len(everything):
            raise SignatureError(f"duplicate names in signature: {everything}")
        unknown = set(self.fiber) - set(names)
        if unknown:
            raise SignatureError(f"fiber names not among generators: {sorted(unknown)}")
        object.__setattr__(self, "index", {n: i for i, n in enumerate(names)})

    @classmethod
    def build(cls, generators: Iterable[tuple[str, int]], fiber: Iterable[str] = (), coeff_symbols: Iterable[str] = ()):
        return cls(tuple((str(n), int(d)) for n, d in generators), frozenset(fiber), tuple(coeff_symbols))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.generators)

    @property
    def degrees(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.generators)

    def __len__(self):
        return len(self.generators)

    def degree_of(self, name: str) -> int:
        if name in self.index:
            return self.generators[self.index[name]][1]
        if name in self.coeff_symbols:
            return 0
        raise SignatureError(f"unknown generator {name!r}")

    def is_odd(self, i: int) -> bool:
        return self.generators[i][1] % 2 == 1

    def mono_degree(self, p: Sequence[int]) -> int:
        return sum(e * d for e, (_, d) in zip(p, self.generators))

    def fiber_weight(self, p: Sequence[int]) -> int:
        return sum(e for e, (n, _) in zip(p, self.generators) if n in self.fiber)

    def zero_index(self) -> tuple[int, ...]:
        return (0,) * len(self.generators)

    def unit_index(self, name: str) -> tuple[int, ...]:
        p = [0] * len(self.generators)
        p[self.index[name]] = 1
        return tuple(p)

    def extend(self, generators: Iterable[tuple[str, int]], fiber: Iterable[str] = ()) -> "GeneratorSignature":
        """Append generators (e.g. fiber coordinates after base ones)."""
        return GeneratorSignature.build(
            list(self.generators) + list(generators), set(self.fiber) | set(fiber), self.coeff_symbols
        )

    def symbols(self) -> set[str]:
        return set(self.names) | set(self.coeff_symbols)


def weight(p: Sequence[int]) -> int:
    return sum(p)


def enumerate_multiindices(sig: GeneratorSignature, k: int, W: int) -> list[tuple[int, ...]]:
    """All multi-indices of degree ``k`` and weight at most ``W``.

    Odd generators get exponent at most 1. Ordered by weight, then
    lexicographically with larger leading exponents first.
    """
    n = len(sig)
    degs = sig.degrees
    out: list[tuple[int, ...]] = []

    def rec(i, remaining, deg, acc):
        if i == n:
            if deg == k:
                out.append(tuple(acc))
            return
        top = 1 if degs[i] % 2 else remaining
        for e in range(min(top, remaining), -1, -1):
            acc.append(e)
            rec(i + 1, remaining - e, deg + e * degs[i], acc)
            acc.pop()

    rec(0, W, 0, [])
    out.sort(key=_index_key)
    return out


def _index_key(p):
    return (sum(p), tuple(-e for e in p))


def koszul_sign(sig: GeneratorSignature, r: Sequence[int], s: Sequence[int]) -> int:
    """Sign of reordering ``g^r g^s`` into ``g^(r+s)``.

    Closed form: product over i < j of (-1)^(deg_i deg_j s_i r_j), parities only.
    """
    odd_s = 0  # number of odd-degree factors of s seen so far with odd exponent
    flips = 0
    for i, (_, d) in enumerate(sig.generators):
        if d % 2 == 0:
            continue
        if r[i] % 2:
            flips += odd_s
        if s[i] % 2:
            odd_s += 1
    return -1 if flips % 2 else 1


def _add_index(a, b):
    return tuple(x + y for x, y in zip(a, b))


class GradedFunction:
    """Homogeneous weight-truncated series; immutable."""

    __slots__ = ("sig", "degree", "W", "terms")

    def __init__(self, sig: GeneratorSignature, degree: int, W: int, terms: Mapping | None = None, *, _clean=False):
        self.sig = sig
        self.degree = degree
        self.W = W
        if terms is None:
            terms = {}
        elif not _clean:
            clean = {}
            for p, c in terms.items():
                p = tuple(p)
                if len(p) != len(sig):
                    raise SignatureError(f"multi-index {p} does not fit signature of length {len(sig)}")
                c = CoeffExpr.coerce(c)
                if c.is_zero() or sum(p) > W:
                    continue
                if any(e > 1 for e, (_, d) in zip(p, sig.generators) if d % 2):
                    continue
                if sig.mono_degree(p) != degree:
                    raise DegreeError(f"term {p} has degree {sig.mono_degree(p)}, expected {degree}")
                clean[p] = c
            terms = clean
        self.terms = terms

    # constructors
    @classmethod
    def zero(cls, sig, degree=0, W=DEFAULT_WEIGHT):
        return cls(sig, degree, W, {}, _clean=True)

    @classmethod
    def const(cls, sig, value, W=DEFAULT_WEIGHT):
        c = CoeffExpr.coerce(value)
        terms = {} if c.is_zero() else {sig.zero_index(): c}
        return cls(sig, 0, W, terms, _clean=True)

    @classmethod
    def generator(cls, sig, name, W=DEFAULT_WEIGHT):
        if name in sig.index:
            terms = {sig.unit_index(name): ONE} if W >= 1 else {}
            return cls(sig, sig.degree_of(name), W, terms, _clean=True)
        if name in sig.coeff_symbols:
            return cls.const(sig, CoeffExpr.symbol(name), W)
        raise SignatureError(f"unknown generator {name!r}")

    # inspection
    def is_zero(self) -> bool:
        return not self.terms

    def body(self) -> CoeffExpr:
        if self.degree != 0:
            return ZERO
        return self.terms.get(self.sig.zero_index(), ZERO)

    def body_value(self, point: Mapping) -> Fraction:
        """Value at a point: the evaluated body; zero for nonzero degree."""
        for name, v in point.items():
            if name in self.sig.index and Fraction(v) != 0:
                raise ValueError(f"formal generator {name!r} can only be evaluated at 0")
        if self.degree != 0:
            return Fraction(0)
        coeff = self.body()
        if coeff.is_zero():
            return Fraction(0)
        return coeff.evaluate(point)

    def min_weight(self) -> int:
        return min((sum(p) for p in self.terms), default=self.W + 1)

    def truncate(self, W: int) -> "GradedFunction":
        if W >= self.W:
            return self if W == self.W else GradedFunction(self.sig, self.degree, W, self.terms, _clean=True)
        return GradedFunction(self.sig, self.degree, W, {p: c for p, c in self.terms.items() if sum(p) <= W}, _clean=True)

    def with_degree(self, degree: int) -> "GradedFunction":
        """Retag a zero function with another degree."""
        if self.terms and degree != self.degree:
            raise DegreeError(f"cannot retag nonzero function of degree {self.degree} as {degree}")
        return GradedFunction(self.sig, degree, self.W, self.terms, _clean=True)

    def coefficients(self):
        return self.terms.values()

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda t: _index_key(t[0]))

    # arithmetic
    def _check_sig(self, other):
        if other.sig is not self.sig and other.sig != self.sig:
            raise SignatureError("operands live over different signatures")

    def _lift(self, other):
        if isinstance(other, GradedFunction):
            self._check_sig(other)
            return other
        if isinstance(other, (int, Fraction, CoeffExpr)):
            return GradedFunction.const(self.sig, other, self.W)
        return NotImplemented

    def __add__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return NotImplemented
        W = min(self.W, other.W)
        if not other.terms:
            return self.truncate(W)
        if not self.terms:
            return other.truncate(W)
        if self.degree != other.degree:
            raise DegreeError(f"cannot add functions of degree {self.degree} and {other.degree}")
        out = {p: c for p, c in self.terms.items() if sum(p) <= W}
        for p, c in other.terms.items():
            if sum(p) > W:
                continue
            v = out.get(p)
            v = c if v is None else v + c
            if v.is_zero():
                out.pop(p, None)
            else:
                out[p] = v
        return GradedFunction(self.sig, self.degree, W, out, _clean=True)

    __radd__ = __add__

    def __neg__(self):
        return GradedFunction(self.sig, self.degree, self.W, {p: -c for p, c in self.terms.items()}, _clean=True)

    def __sub__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "GradedFunction":
        c = CoeffExpr.coerce(c)
        if c.is_zero():
            return GradedFunction(self.sig, self.degree, self.W, {}, _clean=True)
        if c == ONE:
            return self
        return GradedFunction(self.sig, self.degree, self.W, {p: c * v for p, v in self.terms.items()}, _clean=True)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, CoeffExpr)):
            return self.scale(other)
        if not isinstance(other, GradedFunction):
            return NotImplemented
        return series_mul(self, other)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction, CoeffExpr)):
            return self.scale(other)
        return NotImplemented

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            return NotImplemented
        result = GradedFunction.const(self.sig, 1, self.W)
        for _ in range(n):
            result = series_mul(result, self)
            if result.is_zero():
                return result.with_degree(self.degree * n)
        return result

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction, CoeffExpr)):
            return self.scale(CoeffExpr.coerce(other).inverse())
        if isinstance(other, GradedFunction):
            return series_mul(self, reciprocal(other))
        return NotImplemented

    def __rtruediv__(self, other):
        return series_mul(self._lift(other), reciprocal(self))

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, CoeffExpr)):
            other = GradedFunction.const(self.sig, other, self.W)
        if not isinstance(other, GradedFunction):
            return NotImplemented
        if not self.terms and not other.terms:
            return True
        return self.degree == other.degree and self.terms == other.terms

    def __hash__(self):
        return hash((self.degree, frozenset(self.terms.items())))

    # calculus
    def diff(self, name: str) -> "GradedFunction":
        return partial_derivative(self, name)

    def substitute(self, images=None, coeff_images=None, target=None):
        return substitute(self, images or {}, coeff_images or {}, target)

    def __str__(self):
        return render(self)

    def __repr__(self):
        return f"GradedFunction(deg={self.degree}, W={self.W}, {render(self)!r})"


def series_add(f: GradedFunction, g: GradedFunction) -> GradedFunction:
    return f + g


def series_scale(c, f: GradedFunction) -> GradedFunction:
    return f.scale(c)


def series_mul(f: GradedFunction, g: GradedFunction) -> GradedFunction:
    """Product with Koszul signs; exact through min(f.W, g.W)."""
    if f.sig is not g.sig and f.sig != g.sig:
        raise SignatureError("operands live over different signatures")
    sig = f.sig
    W = min(f.W, g.W)
    degree = f.degree + g.degree
    if not f.terms or not g.terms:
        return GradedFunction(sig, degree, W, {}, _clean=True)
    odd = [i for i, (_, d) in enumerate(sig.generators) if d % 2]
    out: dict = {}
    gt = [(s, sum(s), c) for s, c in g.terms.items()]
    for r, a in f.terms.items():
        wr = sum(r)
        if wr > W:
            continue
        for s, ws, b in gt:
            if wr + ws > W:
                continue
            # odd generators square to zero; compute the reordering sign on the fly
            flips = 0
            seen = 0
            dead = False
            for i in odd:
                ri, si = r[i], s[i]
                if ri and si:
                    dead = True
                    break
                if ri:
                    flips += seen
                if si:
                    seen += 1
            if dead:
                continue
            p = tuple(x + y for x, y in zip(r, s))
            v = a * b
            if flips & 1:
                v = -v
            prev = out.get(p)
            if prev is not None:
                v = prev + v
                if v.is_zero():
                    del out[p]
                    continue
            out[p] = v
    return GradedFunction(sig, degree, W, out, _clean=True)


def body_value(f: GradedFunction, point: Mapping) -> Fraction:
    return f.body_value(point)


def partial_derivative(f: GradedFunction, name: str) -> GradedFunction:
    """Left derivative by a generator, or plain derivative by a coefficient symbol.

    Differentiating by a generator lowers the exact weight by one: terms of
    weight W in the result would come from unknown terms of weight W + 1.
    """
    sig = f.sig
    if name in sig.coeff_symbols:
        out = {}
        for p, c in f.terms.items():
            d = c.diff(name)
            if not d.is_zero():
                out[p] = d
        return GradedFunction(sig, f.degree, f.W, out, _clean=True)
    if name not in sig.index:
        raise SignatureError(f"unknown generator {name!r}")
    mu = sig.index[name]
    dmu = sig.generators[mu][1]
    out = {}
    for p, c in f.terms.items():
        e = p[mu]
        if not e:
            continue
        flips = 0
        if dmu % 2:
            flips = sum(p[nu] for nu in range(mu) if sig.generators[nu][1] % 2)
        q = list(p)
        q[mu] -= 1
        v = c * e
        if sum(q) < f.W:
            out[tuple(q)] = -v if flips % 2 else v
    return GradedFunction(sig, f.degree - dmu, max(f.W - 1, 0), out, _clean=True)


class NotInvertibleError(ArithmeticError):
    pass


def reciprocal(f: GradedFunction, W: int | None = None) -> GradedFunction:
    """Multiplicative inverse of a degree-0 function with nonzero body."""
    if W is not None:
        f = f.truncate(W)
    if f.degree != 0 and f.terms:
        raise NotInvertibleError(f"a function of nonzero degree {f.degree} is never invertible")
    c = f.body()
    if c.is_zero():
        raise NotInvertibleError("function has zero body and cannot be inverted")
    cinv = c.inverse()
    u = f.scale(cinv) - 1
    neg_u = -u
    total = GradedFunction.const(f.sig, 1, f.W)
    power = total
    for _ in range(f.W):
        power = series_mul(power, neg_u)
        if power.is_zero():
            break
        total = total + power
    return total.scale(cinv)


def _taylor(c: CoeffExpr, bodies: dict, nilp: list, sig, W) -> GradedFunction:
    """Expand c(b + n) = sum over alpha of d^alpha c(b) n^alpha / alpha!."""
    if not nilp:
        return GradedFunction.const(sig, c.compose(bodies) if bodies else c, W)
    (s, n), rest = nilp[0], nilp[1:]
    total = GradedFunction.zero(sig, 0, W)
    power = GradedFunction.const(sig, 1, W)
    deriv = c
    j = 0
    while True:
        if not deriv.is_zero():
            inner = _taylor(deriv, bodies, rest, sig, W)
            total = total + series_mul(inner, power).scale(Fraction(1, factorial(j)))
        j += 1
        power = series_mul(power, n)
        if power.is_zero():
            break
        deriv = deriv.diff(s)
    return total


def substitute(
    f: GradedFunction,
    images: Mapping[str, GradedFunction],
    coeff_images: Mapping[str, object] | None = None,
    target: GeneratorSignature | None = None,
) -> GradedFunction:
    """Ring-homomorphic substitution of generators and coefficient symbols.

    Generators without an image map to the same-named generator of the target
    signature. Coefficient images may be CoeffExpr (or numbers) or degree-0
    GradedFunctions; in the latter case the nilpotent/weighted part is
    Taylor-expanded.
    """
    coeff_images = dict(coeff_images or {})
    if target is None:
        sample = next(iter(images.values()), None)
        if sample is None:
            sample = next((v for v in coeff_images.values() if isinstance(v, GradedFunction)), None)
        target = sample.sig if sample is not None else f.sig
    W = min([f.W] + [g.W for g in images.values()] + [g.W for g in coeff_images.values() if isinstance(g, GradedFunction)])

    gen_imgs = []
    for name, d in f.sig.generators:
        img = images.get(name)
        if img is None:
            img = GradedFunction.generator(target, name, W)
        else:
            if img.sig is not target and img.sig != target:
                raise SignatureError(f"image of {name!r} lives over a different signature")
            if img.terms and img.degree != d:
                raise DegreeError(f"image of {name!r} has degree {img.degree}, expected {d}")
            img = img.with_degree(d) if not img.terms else img
        gen_imgs.append(img)

    bodies: dict = {}
    nilp: list = []
    for s, v in coeff_images.items():
        if isinstance(v, GradedFunction):
            if v.terms and v.degree != 0:
                raise DegreeError(f"image of coefficient symbol {s!r} must have degree 0")
            b = v.body()
            bodies[s] = b
            rest = v - b
            if rest.terms:
                nilp.append((s, rest))
        else:
            bodies[s] = CoeffExpr.coerce(v)
    nilp.sort(key=lambda t: t[0])
    nilp_names = {s for s, _ in nilp}

    powers: dict = {}

    def power(i, e):
        key = (i, e)
        if key not in powers:
            powers[key] = gen_imgs[i] ** e
        return powers[key]

    result = GradedFunction.zero(target, f.degree, W)
    coeff_cache: dict = {}
    for p, c in f.sorted_terms():
        if sum(p) > W:
            continue
        if c not in coeff_cache:
            if nilp_names & c.symbols():
                coeff_cache[c] = _taylor(c, bodies, [t for t in nilp if t[0] in c.symbols()], target, W)
            else:
                coeff_cache[c] = GradedFunction.const(target, c.compose(bodies) if bodies else c, W)
        term = coeff_cache[c]
        for i, e in enumerate(p):
            if e:
                term = series_mul(term, power(i, e))
                if not term.terms:
                    break
        if term.terms:
            result = result + term
    return result.with_degree(f.degree) if not result.terms else result


def embed(f: GradedFunction, target: GeneratorSignature) -> GradedFunction:
    """Re-home f in a larger signature containing its generators by name."""
    if target is f.sig or target == f.sig:
        return f
    idx = [target.index[n] for n in f.sig.names]
    out = {}
    for p, c in f.terms.items():
        q = [0] * len(target)
        for i, e in zip(idx, p):
            q[i] = e
        out[tuple(q)] = c
    return GradedFunction(target, f.degree, f.W, out, _clean=True)


def fiber_weight_parts(f: GradedFunction) -> dict[int, GradedFunction]:
    parts: dict[int, dict] = {}
    for p, c in f.terms.items():
        parts.setdefault(f.sig.fiber_weight(p), {})[p] = c
    return {w: GradedFunction(f.sig, f.degree, f.W, t, _clean=True) for w, t in sorted(parts.items())}


def is_fiber_linear(f: GradedFunction) -> bool:
    return all(w == 1 for w in fiber_weight_parts(f))


def homothety(f: GradedFunction, lam) -> GradedFunction:
    """Pull back along fiber scaling k -> lam*k."""
    gens = {n: GradedFunction.generator(f.sig, n, f.W) * lam for n in f.sig.names if n in f.sig.fiber}
    return substitute(f, gens, {}, f.sig)


def euler_field(f: GradedFunction) -> GradedFunction:
    """sum_a k^a d f / d k^a, valid through weight W-1."""
    out = GradedFunction.zero(f.sig, f.degree, f.W - 1)
    for n in f.sig.names:
        if n in f.sig.fiber:
            out = out + series_mul(GradedFunction.generator(f.sig, n, f.W), partial_derivative(f, n))
    return out.truncate(f.W - 1)


# -- rendering and parsing -------------------------------------------------------------

def _mono_str(sig, p) -> str:
    return "*".join(n if e == 1 else f"{n}^{e}" for (n, _), e in zip(sig.generators, p) if e)


def _coeff_str(c: CoeffExpr) -> tuple[str, str, str | None]:
    """(sign, numerator text, denominator text or None) for a term coefficient."""
    sign = "-" if c.leading_sign() < 0 else "+"
    if sign == "-":
        c = -c
    if c.is_polynomial():
        s = str(c)
        if len(c.num) > 1:
            s = f"({s})"
        return sign, s, None
    num = str(CoeffExpr(c.num))
    den = str(CoeffExpr(c.den))
    if len(c.num) > 1:
        num = f"({num})"
    if len(c.den) > 1 or len(next(iter(c.den))) > 1:
        den = f"({den})"
    return sign, num, den


def render(f: GradedFunction) -> str:
    if not f.terms:
        return "0"
    pieces = []
    for p, c in f.sorted_terms():
        sign, num, den = _coeff_str(c)
        factors = [x for x in (num, _mono_str(f.sig, p)) if x]
        if len(factors) > 1 and factors[0] == "1":
            factors = factors[1:]
        body = "*".join(factors)
        if den is not None:
            body = f"{body}/{den}"
        elif sign == "+" and len(factors) == 1 and body.startswith("("):
            body = body[1:-1]
        pieces.append((sign, body))
    out = ("-" if pieces[0][0] == "-" else "") + pieces[0][1]
    for sign, body in pieces[1:]:
        out += f" {sign} {body}"
    return out


def parse_function(text: str, sig: GeneratorSignature, W: int = DEFAULT_WEIGHT, degree: int | None = None) -> GradedFunction:
    """Parse an expression over generators and coefficient symbols.

    Products follow the written order; ``/`` divides by a degree-0 function
    with nonzero body.
    """
    ast = parse_ast(text)
    known = sig.symbols()
    for name, pos in symbols_of(ast):
        if name not in known:
            raise UndeclaredSymbolError(name, pos)
    f = fold(
        ast,
        num=lambda v: GradedFunction.const(sig, v, W),
        sym=lambda name, pos: GradedFunction.generator(sig, name, W),
    )
    if degree is not None:
        if f.terms and f.degree != degree:
            raise DegreeError(f"expression {text!r} has degree {f.degree}, expected {degree}")
        f = f.with_degree(degree)
    return f
