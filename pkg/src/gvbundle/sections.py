"""Sections as compatible per-chart component tuples.

A section of shift ``l`` of a bundle with fiber coordinates ``k^a`` has
components ``s^a`` of degree ``|k^a| + l`` in every chart, related on
overlaps by ``s_B = T_AB s_A``. Dual sections are sections of the dual bundle.
Global functions on the base are per-chart tuples checked the same way.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .bundle import Bundle, BundleMorphism, GeometryError, dual_bundle
from .matrix import GradedMatrix, mat_mul
from .report import Check, matrix_residual
from .series import GradedFunction, embed, partial_derivative, series_mul, substitute

ChartFunction = Mapping[str, GradedFunction]


@dataclass
class Section:
    bundle: Bundle
    shift: int
    components: dict[str, tuple[GradedFunction, ...]]

    def __post_init__(self):
        for A, comps in self.components.items():
            if len(comps) != len(self.bundle.fiber):
                raise GeometryError(f"section on {A} has {len(comps)} components, expected {len(self.bundle.fiber)}")
            fixed = []
            for (name, d), f in zip(self.bundle.fiber, comps):
                if f.terms and f.degree != d + self.shift:
                    raise GeometryError(
                        f"component {name} on {A} has degree {f.degree}, expected {d + self.shift}"
                    )
                fixed.append(f if f.degree == d + self.shift else f.with_degree(d + self.shift))
            self.components[A] = tuple(fixed)

    @property
    def degree(self) -> int:
        return self.shift

    def column(self, A: str) -> GradedMatrix:
        c = self.components[A]
        sig = self.bundle.atlas.chart(A).sig
        return GradedMatrix(self.bundle.degrees, [-self.shift], [[f] for f in c], sig, min(f.W for f in c))

    def __eq__(self, other):
        if not isinstance(other, Section):
            return NotImplemented
        return self.shift == other.shift and self.components == other.components


def zero_section(E: Bundle, shift: int = 0) -> Section:
    return Section(E, shift, {
        A: tuple(GradedFunction.zero(c.sig, d + shift, E.W) for d in E.degrees) for A, c in E.atlas.charts.items()
    })


def frame_section(E: Bundle, a: int, chart: str) -> Section:
    """delta_a in the frame of ``chart``: components delta_a^b there, transported elsewhere."""
    sig = E.atlas.chart(chart).sig
    shift = -E.degrees[a]
    comps = tuple(
        GradedFunction.const(sig, 1, E.W) if b == a else GradedFunction.zero(sig, d + shift, E.W)
        for b, d in enumerate(E.degrees)
    )
    return transport(E, shift, chart, comps)


def transport(E: Bundle, shift: int, chart: str, comps) -> Section:
    """Extend components given on one chart to every chart overlapping it.

    Components on chart B are T_{A B} s_A written in chart-B variables, which
    needs the overlap map B -> A.
    """
    atlas = E.atlas
    out = {chart: tuple(comps)}
    col = GradedMatrix(E.degrees, [-shift], [[f] for f in comps], atlas.chart(chart).sig, E.W)
    for B in atlas.charts:
        if B == chart:
            continue
        if (chart, B) not in E.transitions or (B, chart) not in atlas.overlaps:
            raise GeometryError(f"cannot transport section from {chart} to {B}")
        moved = mat_mul(E.transition(chart, B), col)
        moved = atlas.reexpress_matrix(moved, chart, B)
        out[B] = tuple(row[0] for row in moved.entries)
    return Section(E, shift, out)


def section_check(s: Section) -> list[Check]:
    E = s.bundle
    checks = []
    for A in E.atlas.charts:
        if A not in s.components:
            checks.append(Check(f"components on {A}", False, "missing"))
    for (A, B) in sorted(E.transitions):
        if A not in s.components or B not in s.components:
            continue
        lhs = E.atlas.reexpress_matrix(s.column(B), B, A)
        rhs = mat_mul(E.transition(A, B), s.column(A))
        residual = matrix_residual(lhs - rhs)
        checks.append(Check(f"section transforms on {A}->{B}", residual is None, residual))
    return checks


def function_check(f: ChartFunction, atlas) -> list[Check]:
    checks = []
    for (A, B) in sorted(atlas.overlaps):
        if A in f and B in f:
            diff = atlas.reexpress(f[B], B, A) - f[A]
            checks.append(Check(f"function agrees on {A}->{B}", diff.is_zero(), None if diff.is_zero() else str(diff)))
    return checks


def module_action(f: ChartFunction, s: Section) -> Section:
    """(f . s)^a = (-1)^(|f| l) s^a f."""
    comps = {}
    deg = None
    for A, cs in s.components.items():
        fa = f[A]
        deg = fa.degree
        sign = -1 if (fa.degree * s.shift) % 2 else 1
        comps[A] = tuple(series_mul(c, fa) * sign for c in cs)
    return Section(s.bundle, s.shift + (deg or 0), comps)


def section_add(s: Section, t: Section) -> Section:
    if s.bundle is not t.bundle and s.bundle.name != t.bundle.name:
        raise GeometryError("sections of different bundles")
    if s.shift != t.shift:
        raise GeometryError(f"cannot add sections of degree {s.shift} and {t.shift}")
    return Section(s.bundle, s.shift, {A: tuple(a + b for a, b in zip(s.components[A], t.components[A])) for A in s.components})


def section_value(s: Section, chart: str, point) -> dict[str, Fraction]:
    pt = s.bundle.atlas.chart(chart).point(point)
    return {name: f.body_value(pt) for (name, _), f in zip(s.bundle.fiber, s.components[chart])}


def value_consistency(s: Section, chart: str, point) -> list[Check]:
    """At a point of ``chart`` lying in other charts, values transform by the evaluated transition."""
    E = s.bundle
    atlas = E.atlas
    pt = atlas.chart(chart).point(point)
    here = section_value(s, chart, pt)
    checks = []
    for B in atlas.charts:
        if B == chart or (chart, B) not in E.transitions:
            continue
        there_pt = atlas.map_point(chart, B, pt)
        if there_pt is None:
            continue
        there = {n: f.body_value(there_pt) for (n, _), f in zip(E.fiber, s.components[B])}
        T = E.transition(chart, B)
        predicted = {}
        for i, (n, _) in enumerate(E.fiber):
            predicted[n] = sum((T.entries[i][k].body_value(pt) * here[m] for k, (m, _) in enumerate(E.fiber)), Fraction(0))
        ok = predicted == there
        checks.append(Check(
            f"value at {chart}{_fmt_point(pt)} matches {B}", ok,
            None if ok else f"expected {_fmt_vec(predicted)}, got {_fmt_vec(there)}",
        ))
    return checks


def _fmt_point(pt):
    return "(" + ", ".join(f"{k}={v}" for k, v in sorted(pt.items())) + ")"


def _fmt_vec(v):
    return "{" + ", ".join(f"{k}: {x}" for k, x in v.items()) + "}"


def apply_morphism(Phi: BundleMorphism, s: Section) -> Section:
    if s.bundle is not Phi.source and s.bundle.name != Phi.source.name:
        raise GeometryError(f"morphism {Phi.name} does not act on sections of {s.bundle.name}")
    F = Phi.target_over_source()
    comps = {}
    for A in s.components:
        col = mat_mul(Phi.matrix(A), s.column(A))
        comps[A] = tuple(row[0] for row in col.entries)
    return Section(F, s.shift, comps)


def pair(lam: Section, s: Section) -> dict[str, GradedFunction]:
    """Per-chart sum over a of s^a lam^a: the linear function of lam pulled back along s."""
    if len(lam.bundle.fiber) != len(s.bundle.fiber):
        raise GeometryError("pairing needs a bundle and its dual")
    out = {}
    for A in s.components:
        sig = s.bundle.atlas.chart(A).sig
        acc = GradedFunction.zero(sig, s.shift + lam.shift, min(s.bundle.W, lam.bundle.W))
        for a, b in zip(s.components[A], lam.components[A]):
            if a.terms and b.terms:
                acc = acc + series_mul(a, b)
        out[A] = acc
    return out


def dual_frame_section(D: Bundle, a: int, chart: str) -> Section:
    """s^a as a section of the dual bundle D: component 1 at a, degree |k^a| = -|s_a|."""
    return frame_section(D, a, chart)


def fiber_signature(E: Bundle, A: str):
    """Chart-A base signature followed by E's fiber coordinates as generators."""
    return E.atlas.chart(A).sig.extend(E.fiber, fiber=E.fiber_names)


def linear_function_of(lam: Section, E: Bundle) -> dict[str, GradedFunction]:
    """f = sum_a k^a lam^a on each chart, k^a the fiber coordinates of E.

    Relative to lam^a k^a this carries the sign (-1)^(|k^a|(l+1)), l the shift
    of lam; for l = 0 that is (-1)^|k^a|.
    """
    out = {}
    W = E.W
    for A, comps in lam.components.items():
        sig = fiber_signature(E, A)
        Wx = W + 1
        acc = GradedFunction.zero(sig, lam.shift, Wx)
        for (name, _), c in zip(E.fiber, comps):
            if c.terms:
                k = GradedFunction.generator(sig, name, Wx)
                acc = acc + series_mul(k, GradedFunction(sig, c.degree, Wx, embed(c, sig).terms, _clean=True))
        out[A] = acc
    return out


def dual_section_of(f: Mapping[str, GradedFunction], E: Bundle, D: Bundle | None = None) -> Section:
    """Inverse of linear_function_of; f must be fiber-linear on every chart."""
    D = D or dual_bundle(E)
    comps = {}
    shift = None
    for A, g in f.items():
        base = E.atlas.chart(A).sig
        nb = len(base)
        shift = g.degree
        parts = []
        for a, (name, d) in enumerate(E.fiber):
            target = tuple(1 if b == a else 0 for b in range(len(E.fiber)))
            terms = {p[:nb]: c for p, c in g.terms.items() if p[nb:] == target and sum(p[:nb]) <= E.W}
            comp_deg = g.degree - d
            left = GradedFunction(base, comp_deg, E.W, terms, _clean=True)
            parts.append(-left if (d * comp_deg) % 2 else left)
        leftovers = [p for p in g.terms if sum(p[nb:]) != 1]
        if leftovers:
            raise GeometryError(f"function on {A} is not linear in the fibers")
        comps[A] = tuple(parts)
    return Section(D, shift, comps)


def fiber_transition_images(E: Bundle, A: str, B: str) -> tuple[dict, dict]:
    """Substitution data rewriting fiber-extended chart-B expressions in chart A."""
    atlas = E.atlas
    sigA = fiber_signature(E, A)
    Wx = E.W + 1
    gens, coeffs = atlas.images(A, B)
    gens = {n: GradedFunction(sigA, g.degree, min(g.W, Wx), embed(g, sigA).terms, _clean=True) for n, g in gens.items()}
    coeffs = {n: GradedFunction(sigA, g.degree, min(g.W, Wx), embed(g, sigA).terms, _clean=True) for n, g in coeffs.items()}
    T = E.transition(A, B)
    for i, (name, d) in enumerate(E.fiber):
        acc = GradedFunction.zero(sigA, d, Wx)
        for j, (mname, _) in enumerate(E.fiber):
            t = T.entries[i][j]
            if t.terms:
                lifted = GradedFunction(sigA, t.degree, Wx, embed(t, sigA).terms, _clean=True)
                acc = acc + series_mul(lifted, GradedFunction.generator(sigA, mname, Wx))
        gens[name] = acc
    return gens, coeffs


def linear_function_check(f: Mapping[str, GradedFunction], E: Bundle) -> list[Check]:
    checks = []
    for (A, B) in sorted(E.transitions):
        if A not in f or B not in f:
            continue
        gens, coeffs = fiber_transition_images(E, A, B)
        moved = substitute(f[B], gens, coeffs, fiber_signature(E, A))
        diff = moved.truncate(E.W) - f[A].truncate(E.W)
        checks.append(Check(f"linear function agrees on {A}->{B}", diff.is_zero(), None if diff.is_zero() else str(diff)))
    return checks


# -- calculus on the base ----------------------------------------------------------------

def exterior_derivative(f: ChartFunction, T: Bundle) -> Section:
    """df as a section of the dual of the tangent bundle T: components (-1)^|x^j| d_j f."""
    D = dual_bundle(T)
    comps = {}
    shift = None
    for A, g in f.items():
        chart = T.atlas.chart(A)
        shift = g.degree
        parts = []
        for x, d in chart.coords:
            dg = partial_derivative(g, x)
            parts.append(-dg if d % 2 else dg)
        comps[A] = tuple(parts)
    return Section(D, shift, comps)


def vector_field_apply(X: Section, f: ChartFunction) -> dict[str, GradedFunction]:
    """X(f) = sum_i (-1)^(|X^i||x^i|) X^i d_i f for a section X of the tangent bundle."""
    out = {}
    for A, comps in X.components.items():
        chart = X.bundle.atlas.chart(A)
        g = f[A]
        acc = GradedFunction.zero(chart.sig, g.degree + X.shift, min(g.W, X.bundle.W))
        for (x, d), c in zip(chart.coords, comps):
            if not c.terms:
                continue
            term = series_mul(c, partial_derivative(g, x))
            acc = acc + (-term if (c.degree * d) % 2 else term)
        out[A] = acc
    return out


def form_value(lam: Section, X: Section) -> dict[str, GradedFunction]:
    """Evaluate a 1-form on a vector field so that df(X) = (-1)^(|f||X|) X(f)."""
    out = {}
    lx, ll = X.shift, lam.shift
    for A, comps in X.components.items():
        sig = X.bundle.atlas.chart(A).sig
        acc = GradedFunction.zero(sig, lx + ll, min(X.bundle.W, lam.bundle.W))
        for d, a, b in zip(X.bundle.degrees, comps, lam.components[A]):
            if a.terms and b.terms:
                term = series_mul(a, b)
                acc = acc + (-term if (lx * (ll + d)) % 2 else term)
        out[A] = acc
    return out


def coordinate_field(T: Bundle, j: int, chart: str) -> Section:
    """The coordinate vector field d/dx^j of ``chart`` as a tangent section."""
    return frame_section(T, j, chart)
