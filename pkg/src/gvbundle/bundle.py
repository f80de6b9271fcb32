"""Symbolic atlases, graded vector bundles given by transition matrices, and
bundle morphisms.

Conventions, fixed once here:

* ``atlas.overlaps[(A, B)]`` expresses every chart-B coordinate as a function
  of the chart-A coordinates.
* ``bundle.transitions[(A, B)]`` is the matrix T with ``k_B = T k_A`` for the
  fiber coordinates, entries written in chart-A variables. Cocycle:
  ``T_AC = T_BC|_A T_AB``.
* A section's chart-B components are ``T_AB`` applied to its chart-A ones.
* A morphism matrix ``Phi_A`` acts on section components: ``(Phi s)^I = Phi^I_a s^a``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .grading import GradedDimension, gdim_dual
from .matrix import (
    GradedMatrix,
    block_ranks,
    dual_transpose,
    evaluate_at,
    identity,
    invert,
    mat_mul,
    pivots,
)
from .report import Check, matrix_residual
from .scalar import DomainError
from .series import (
    DEFAULT_WEIGHT,
    GeneratorSignature,
    GradedFunction,
    embed,
    partial_derivative,
    series_mul,
    substitute,
)


class GeometryError(ValueError):
    pass


Point = Mapping[str, Fraction]


@dataclass
class Chart:
    name: str
    coords: tuple[tuple[str, int], ...]
    base: tuple[str, ...] = ()
    points: dict[str, dict[str, Fraction]] = field(default_factory=dict)

    def __post_init__(self):
        names = [n for n, _ in self.coords]
        for b in self.base:
            if b not in names:
                raise GeometryError(f"chart {self.name}: base symbol {b!r} is not a coordinate")
            if dict(self.coords)[b] != 0:
                raise GeometryError(f"chart {self.name}: base symbol {b!r} must have degree 0")
        self.sig = GeneratorSignature.build(
            [(n, d) for n, d in self.coords if n not in self.base], coeff_symbols=self.base
        )

    @property
    def coord_names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.coords)

    @property
    def degrees(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.coords)

    def coordinate(self, name: str, W: int) -> GradedFunction:
        return GradedFunction.generator(self.sig, name, W)

    def point(self, where) -> dict[str, Fraction]:
        """Resolve a point name or an explicit assignment of base symbols."""
        if isinstance(where, str):
            if where not in self.points:
                raise GeometryError(f"chart {self.name} has no point named {where!r}")
            where = self.points[where]
        pt = {k: Fraction(v) for k, v in where.items()}
        missing = [b for b in self.base if b not in pt]
        if missing:
            raise GeometryError(f"point in chart {self.name} lacks values for {missing}")
        extra = [k for k in pt if k not in self.coord_names]
        if extra:
            raise GeometryError(f"point in chart {self.name} assigns unknown coordinates {extra}")
        return pt


@dataclass
class Atlas:
    name: str
    charts: dict[str, Chart]
    overlaps: dict[tuple[str, str], dict[str, GradedFunction]] = field(default_factory=dict)
    W: int = DEFAULT_WEIGHT

    @property
    def image_weight(self) -> int:
        """Overlap maps carry one guard order, consumed when Jacobians are taken."""
        return self.W + 1

    def chart(self, name: str) -> Chart:
        if name not in self.charts:
            raise GeometryError(f"manifold {self.name} has no chart {name!r}")
        return self.charts[name]

    def gdim(self) -> GradedDimension:
        first = next(iter(self.charts.values()))
        return GradedDimension.from_degrees(first.degrees)

    def has_overlap(self, A: str, B: str) -> bool:
        return A == B or (A, B) in self.overlaps

    def images(self, A: str, B: str):
        """Substitution data turning chart-B expressions into chart-A ones."""
        if (A, B) not in self.overlaps:
            raise GeometryError(f"manifold {self.name} has no overlap {A} -> {B}")
        cb = self.chart(B)
        imgs = self.overlaps[(A, B)]
        gens = {n: imgs[n] for n in cb.sig.names}
        coeffs = {n: imgs[n] for n in cb.base}
        return gens, coeffs

    def reexpress(self, f: GradedFunction, B: str, A: str) -> GradedFunction:
        """Rewrite f, given in chart-B variables, in chart-A variables."""
        if A == B:
            return f
        gens, coeffs = self.images(A, B)
        return substitute(f, gens, coeffs, self.chart(A).sig)

    def reexpress_matrix(self, M: GradedMatrix, B: str, A: str) -> GradedMatrix:
        if A == B:
            return M
        gens, coeffs = self.images(A, B)
        sig = self.chart(A).sig
        return GradedMatrix(
            M.row_degrees,
            M.col_degrees,
            [[substitute(f, gens, coeffs, sig) for f in row] for row in M.entries],
            sig,
            M.W,
        )

    def map_point(self, A: str, B: str, point: Point) -> dict[str, Fraction] | None:
        """Chart-B coordinates of a chart-A point, or None if it is outside the overlap."""
        if A == B:
            return dict(point)
        imgs = self.overlaps[(A, B)]
        out = {}
        try:
            for n, d in self.chart(B).coords:
                if d != 0:
                    continue
                v = imgs[n].body_value(point)
                if n in self.chart(B).base:
                    out[n] = v
                elif v != 0:
                    return None
        except (DomainError, ZeroDivisionError):
            return None
        return out

    def overlap_points(self, A: str, B: str) -> list[dict[str, Fraction]]:
        ca = self.chart(A)
        pts = []
        for pname in sorted(ca.points):
            pt = ca.point(pname)
            if self.map_point(A, B, pt) is not None:
                pts.append(pt)
        return pts


def atlas_check(atlas: Atlas) -> list[Check]:
    checks = []
    names = list(atlas.charts)
    dims = {n: GradedDimension.from_degrees(c.degrees) for n, c in atlas.charts.items()}
    first = dims[names[0]]
    checks.append(Check(
        "charts share graded dimension",
        all(d == first for d in dims.values()),
        None if all(d == first for d in dims.values()) else "; ".join(f"{n}: {d}" for n, d in dims.items()),
    ))
    for (A, B), imgs in sorted(atlas.overlaps.items()):
        ca, cb = atlas.chart(A), atlas.chart(B)
        missing = [n for n in cb.coord_names if n not in imgs]
        bad = [
            f"{n} has degree {imgs[n].degree}, expected {d}"
            for n, d in cb.coords
            if n in imgs and imgs[n].terms and imgs[n].degree != d
        ]
        problem = "; ".join(([f"missing images {missing}"] if missing else []) + bad)
        checks.append(Check(f"overlap {A}->{B} images well-typed", not problem, problem or None))
        if problem:
            continue
        for n, d in cb.coords:
            if d == 0 and n not in cb.base and imgs[n].body() != 0:
                checks.append(Check(
                    f"overlap {A}->{B} formal coordinate {n} centered at 0", False,
                    f"body of the image of {n} is {imgs[n].body()}",
                ))
        if (B, A) not in atlas.overlaps:
            checks.append(Check(f"overlap {B}->{A} declared", False, "inverse transition missing"))
            continue
        for n, _ in ca.coords:
            back = atlas.overlaps[(B, A)][n]
            composed = atlas.reexpress(back, B, A)
            diff = composed - ca.coordinate(n, atlas.image_weight)
            checks.append(Check(
                f"overlap {A}->{B}->{A} returns {n}", diff.is_zero(), None if diff.is_zero() else str(diff)
            ))
    return checks


# -- bundles ----------------------------------------------------------------------------

@dataclass
class Bundle:
    name: str
    atlas: Atlas
    fiber: tuple[tuple[str, int], ...]
    transitions: dict[tuple[str, str], GradedMatrix] = field(default_factory=dict)

    @property
    def W(self) -> int:
        return self.atlas.W

    @property
    def degrees(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.fiber)

    @property
    def fiber_names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.fiber)

    def rank(self) -> GradedDimension:
        """(r_j): number of frame elements of degree j, i.e. fiber coordinates of degree -j."""
        return gdim_dual(GradedDimension.from_degrees(self.degrees))

    def transition(self, A: str, B: str) -> GradedMatrix:
        if A == B:
            return identity(self.degrees, self.atlas.chart(A).sig, self.W)
        if (A, B) not in self.transitions:
            raise GeometryError(f"bundle {self.name} has no transition {A} -> {B}")
        return self.transitions[(A, B)]

    def fill_reverse(self) -> "Bundle":
        """Supply T_BA = (T_AB)^-1 re-expressed in chart B wherever only T_AB was declared."""
        for (A, B), T in list(self.transitions.items()):
            if (B, A) not in self.transitions:
                inv = invert(T, sample_points=self.atlas.overlap_points(A, B))
                self.transitions[(B, A)] = self.atlas.reexpress_matrix(inv, A, B)
        return self

    def ordered_pairs(self):
        return sorted(self.transitions)

    def default_triples(self):
        charts = list(self.atlas.charts)
        out = []
        for a in charts:
            for b in charts:
                for c in charts:
                    if a == b or b == c:
                        continue
                    if all(self.atlas.has_overlap(x, y) for x, y in ((a, b), (b, c), (a, c))):
                        out.append((a, b, c))
        return out


def _same_atlas(E: Bundle, F: Bundle):
    if E.atlas is not F.atlas and E.atlas.name != F.atlas.name:
        raise GeometryError(f"bundles {E.name} and {F.name} live over different manifolds")


def bundle_cocycle_check(E: Bundle, triples: Iterable[tuple[str, str, str]] | None = None) -> list[Check]:
    checks = []
    atlas = E.atlas
    for (A, B) in sorted(atlas.overlaps):
        if (A, B) not in E.transitions:
            checks.append(Check(f"transition {A}->{B} present", False, "missing transition matrix"))
    for (A, B), T in sorted(E.transitions.items()):
        if T.row_degrees != E.degrees or T.col_degrees != E.degrees:
            checks.append(Check(f"transition {A}->{B} degrees", False, f"{T.row_degrees} / {T.col_degrees}"))
    for A, B, C in (E.default_triples() if triples is None else triples):
        for x, y in ((A, B), (B, C), (A, C)):
            if not atlas.has_overlap(x, y):
                raise GeometryError(f"triple ({A},{B},{C}) needs overlap {x}->{y}")
        try:
            lhs = E.transition(A, C)
            rhs = mat_mul(atlas.reexpress_matrix(E.transition(B, C), B, A), E.transition(A, B))
        except GeometryError as exc:
            checks.append(Check(f"cocycle {A},{B},{C}", False, str(exc)))
            continue
        residual = matrix_residual(rhs - lhs)
        label = f"pair {A},{B}" if A == C else f"cocycle {A},{B},{C}"
        checks.append(Check(label, residual is None, residual))
    return checks


def tangent_bundle(atlas: Atlas, name: str | None = None) -> Bundle:
    """Fiber coordinate k_i per coordinate x^i, with |k_i| = |x^i|; transitions are signed Jacobians."""
    charts = list(atlas.charts.values())
    degs = charts[0].degrees
    for c in charts:
        if c.degrees != degs:
            raise GeometryError(f"chart {c.name} lists coordinate degrees {c.degrees}, expected {degs}")
    fiber = tuple((f"k_{n}", d) for n, d in charts[0].coords)
    trans = {}
    for (A, B), imgs in atlas.overlaps.items():
        ca, cb = atlas.chart(A), atlas.chart(B)
        rows = []
        for i, (yi, di) in enumerate(cb.coords):
            row = []
            for j, (xj, dj) in enumerate(ca.coords):
                f = partial_derivative(imgs[yi], xj)
                row.append(-f if (di * (di - dj)) % 2 else f)
            rows.append(row)
        M = GradedMatrix(degs, degs, rows, ca.sig, atlas.image_weight)
        trans[(A, B)] = M.truncate(atlas.W)
    return Bundle(name or f"T{atlas.name}", atlas, fiber, trans)


def _dual_name(n: str) -> str:
    return n[:-2] if n.endswith("_d") else n + "_d"


def dual_bundle(E: Bundle, name: str | None = None) -> Bundle:
    fiber = tuple((_dual_name(n), -d) for n, d in E.fiber)
    trans = {
        (A, B): dual_transpose(T, sample_points=E.atlas.overlap_points(A, B))
        for (A, B), T in E.transitions.items()
    }
    return Bundle(name or f"{E.name}_dual", E.atlas, fiber, trans)


def shift_bundle(E: Bundle, shift: int, name: str | None = None) -> Bundle:
    """Same transition matrices, fiber degrees raised by ``shift``."""
    fiber = tuple((n, d + shift) for n, d in E.fiber)
    degs = tuple(d for _, d in fiber)
    trans = {key: GradedMatrix(degs, degs, T.entries, T.sig, T.W) for key, T in E.transitions.items()}
    return Bundle(name or f"{E.name}_shift{shift}", E.atlas, fiber, trans)


def direct_sum(E: Bundle, F: Bundle, name: str | None = None) -> Bundle:
    _same_atlas(E, F)
    if set(E.fiber_names) & set(F.fiber_names):
        raise GeometryError("direct sum needs disjoint fiber coordinate names")
    fiber = E.fiber + F.fiber
    degs = tuple(d for _, d in fiber)
    n, m = len(E.fiber), len(F.fiber)
    trans = {}
    for key in sorted(set(E.transitions) | set(F.transitions)):
        T, S = E.transition(*key), F.transition(*key)
        rows = [list(r) + [0] * m for r in T.entries] + [[0] * n + list(r) for r in S.entries]
        trans[key] = GradedMatrix(degs, degs, rows, T.sig, min(T.W, S.W))
    return Bundle(name or f"{E.name}_plus_{F.name}", E.atlas, fiber, trans)


def tensor_bundle(E: Bundle, F: Bundle, name: str | None = None) -> Bundle:
    """Fiber coordinates k^a l^B; transitions read off from (T k)^a (S l)^B.

    The products are expanded in a signature holding base generators first and
    fiber generators after, so the coefficient of k^b l^C is its left
    coefficient and all Koszul signs come from series_mul.
    """
    _same_atlas(E, F)
    pairs = [(a, b) for a in range(len(E.fiber)) for b in range(len(F.fiber))]
    fiber = tuple((f"{E.fiber[a][0]}_{F.fiber[b][0]}", E.fiber[a][1] + F.fiber[b][1]) for a, b in pairs)
    degs = tuple(d for _, d in fiber)
    kE = [(f"__k{a}", d) for a, (_, d) in enumerate(E.fiber)]
    kF = [(f"__l{b}", d) for b, (_, d) in enumerate(F.fiber)]
    W = min(E.W, F.W)
    trans = {}
    for key in sorted(set(E.transitions) | set(F.transitions)):
        T, S = E.transition(*key), F.transition(*key)
        base = T.sig
        ext = base.extend(kE + kF, fiber=[n for n, _ in kE + kF])
        Wx = W + 2
        gen = {n: GradedFunction.generator(ext, n, Wx) for n, _ in kE + kF}

        def lift(f):
            return GradedFunction(ext, f.degree, Wx, embed(f, ext).terms, _clean=True)

        Tk = []
        for a in range(len(E.fiber)):
            acc = GradedFunction.zero(ext, E.fiber[a][1], Wx)
            for b in range(len(E.fiber)):
                if T.entries[a][b].terms:
                    acc = acc + series_mul(lift(T.entries[a][b]), gen[kE[b][0]])
            Tk.append(acc)
        Sl = []
        for a in range(len(F.fiber)):
            acc = GradedFunction.zero(ext, F.fiber[a][1], Wx)
            for b in range(len(F.fiber)):
                if S.entries[a][b].terms:
                    acc = acc + series_mul(lift(S.entries[a][b]), gen[kF[b][0]])
            Sl.append(acc)
        nb = len(base)
        rows = []
        for a, b in pairs:
            prod = series_mul(Tk[a], Sl[b])
            row = []
            for c, d in pairs:
                target = [0] * (len(kE) + len(kF))
                target[c] = 1
                target[len(kE) + d] = 1
                target = tuple(target)
                terms = {p[:nb]: v for p, v in prod.terms.items() if p[nb:] == target and sum(p[:nb]) <= W}
                row.append(GradedFunction(base, degs[pairs.index((a, b))] - degs[pairs.index((c, d))], W, terms, _clean=True))
            rows.append(row)
        trans[key] = GradedMatrix(degs, degs, rows, base, W)
    return Bundle(name or f"{E.name}_x_{F.name}", E.atlas, fiber, trans)


# -- base maps and pullbacks -------------------------------------------------------------

@dataclass
class BaseMap:
    """Graded smooth map given chartwise: source chart -> (target chart, pullbacks)."""

    name: str
    source: Atlas
    target: Atlas
    assignments: dict[str, tuple[str, dict[str, GradedFunction]]]

    def chart_of(self, A: str) -> str:
        if A not in self.assignments:
            raise GeometryError(f"map {self.name} assigns no target chart to {A}")
        return self.assignments[A][0]

    def pullback(self, A: str, f: GradedFunction) -> GradedFunction:
        """phi_A^* f for f written in the assigned target chart's variables."""
        tgt, imgs = self.assignments[A]
        tc = self.target.chart(tgt)
        gens = {n: imgs[n] for n in tc.sig.names}
        coeffs = {n: imgs[n] for n in tc.base}
        return substitute(f, gens, coeffs, self.source.chart(A).sig)

    def pullback_matrix(self, A: str, M: GradedMatrix) -> GradedMatrix:
        sig = self.source.chart(A).sig
        return GradedMatrix(
            M.row_degrees, M.col_degrees, [[self.pullback(A, f) for f in row] for row in M.entries], sig, M.W
        )


def basemap_check(phi: BaseMap) -> list[Check]:
    checks = []
    for A in phi.source.charts:
        if A not in phi.assignments:
            checks.append(Check(f"map {phi.name} covers chart {A}", False, "no assignment"))
            continue
        tgt, imgs = phi.assignments[A]
        tc = phi.target.chart(tgt)
        bad = [
            f"{n}: degree {imgs[n].degree}, expected {d}" if n in imgs else f"{n}: missing"
            for n, d in tc.coords
            if n not in imgs or (imgs[n].terms and imgs[n].degree != d)
        ]
        checks.append(Check(f"map {phi.name} on {A} preserves degrees", not bad, "; ".join(bad) or None))
    for (A, B) in sorted(phi.source.overlaps):
        if A not in phi.assignments or B not in phi.assignments:
            continue
        a, b = phi.chart_of(A), phi.chart_of(B)
        if a != b and (a, b) not in phi.target.overlaps:
            checks.append(Check(f"map {phi.name} on {A}->{B}", False, f"target overlap {a}->{b} missing"))
            continue
        tb = phi.target.chart(b)
        bad = []
        for n, _ in tb.coords:
            via_B = phi.source.reexpress(phi.assignments[B][1][n], B, A)
            if a == b:
                via_A = phi.assignments[A][1][n]
            else:
                via_A = phi.pullback(A, phi.target.overlaps[(a, b)][n])
            diff = via_B - via_A
            if not diff.is_zero():
                bad.append(f"{n}: {diff}")
        checks.append(Check(f"map {phi.name} compatible on {A}->{B}", not bad, "; ".join(bad) or None))
    return checks


def pullback_bundle(E: Bundle, phi: BaseMap, name: str | None = None) -> Bundle:
    if E.atlas is not phi.target and E.atlas.name != phi.target.name:
        raise GeometryError(f"map {phi.name} does not land in the base of {E.name}")
    M = phi.source
    trans = {}
    for (A, B) in sorted(M.overlaps):
        a, b = phi.chart_of(A), phi.chart_of(B)
        sig = M.chart(A).sig
        if a == b:
            trans[(A, B)] = identity(E.degrees, sig, M.W)
            continue
        if (a, b) not in E.transitions:
            raise GeometryError(f"bundle {E.name} has no transition {a}->{b} needed by {A}->{B}")
        T = phi.pullback_matrix(A, E.transitions[(a, b)])
        trans[(A, B)] = GradedMatrix(T.row_degrees, T.col_degrees, T.entries, sig, min(T.W, M.W))
    return Bundle(name or f"{phi.name}^*{E.name}", M, E.fiber, trans)


# -- morphisms ---------------------------------------------------------------------------

@dataclass
class BundleMorphism:
    name: str
    source: Bundle
    target: Bundle
    matrices: dict[str, GradedMatrix]
    base_map: BaseMap | None = None

    def target_over_source(self) -> Bundle:
        return self.target if self.base_map is None else pullback_bundle(self.target, self.base_map)

    def matrix(self, A: str) -> GradedMatrix:
        if A not in self.matrices:
            raise GeometryError(f"morphism {self.name} has no matrix on chart {A}")
        return self.matrices[A]


def morphism_check(Phi: BundleMorphism) -> list[Check]:
    checks = []
    E = Phi.source
    if Phi.base_map is not None:
        checks.extend(basemap_check(Phi.base_map))
    elif E.atlas is not Phi.target.atlas and E.atlas.name != Phi.target.atlas.name:
        raise GeometryError(f"morphism {Phi.name}: bundles over different manifolds need a base map")
    F = Phi.target_over_source()
    for A in E.atlas.charts:
        if A not in Phi.matrices:
            checks.append(Check(f"matrix on {A}", False, "missing"))
            continue
        M = Phi.matrices[A]
        ok = M.row_degrees == F.degrees and M.col_degrees == E.degrees
        checks.append(Check(f"matrix on {A} degrees", ok, None if ok else f"{M.row_degrees} x {M.col_degrees}"))
    for (A, B) in sorted(E.atlas.overlaps):
        if A not in Phi.matrices or B not in Phi.matrices:
            continue
        lhs = mat_mul(F.transition(A, B), Phi.matrices[A])
        rhs = mat_mul(E.atlas.reexpress_matrix(Phi.matrices[B], B, A), E.transition(A, B))
        residual = matrix_residual(lhs - rhs)
        checks.append(Check(f"compatible on {A}->{B}", residual is None, residual))
    return checks


def fiber_map(Phi: BundleMorphism, chart: str, point: Point):
    return evaluate_at(Phi.matrix(chart), point)


def image_defect(M: GradedMatrix, point: Point) -> list[str]:
    """Residuals showing the column span is not generated by a body-independent subset.

    Per degree, pick pivot columns/rows of the evaluated body; invert the
    selected minor locally and express every other column through the pivot
    columns. A nonzero remainder means the module image has larger rank than
    the fiber image, so the image is not a subbundle near the point.
    """
    B = evaluate_at(M, point)
    cols, rows = [], []
    for d, ri, ci, body in B.blocks:
        if not ri or not ci:
            continue
        pc = pivots(body, len(ci))
        transposed = [[body[i][k] for i in range(len(ri))] for k in range(len(ci))]
        pr = pivots(transposed, len(ri))
        cols.extend(ci[k] for k in pc)
        rows.extend(ri[i] for i in pr)
    cols.sort()
    rows.sort()
    sig, W = M.sig, M.W
    if cols:
        minor = GradedMatrix(
            [M.row_degrees[i] for i in rows], [M.col_degrees[k] for k in cols],
            [[M.entries[i][k] for k in cols] for i in rows], sig, W,
        )
        minv = invert(minor, sample_points=[point])
        span = GradedMatrix(
            M.row_degrees, [M.col_degrees[k] for k in cols], [[M.entries[i][k] for k in cols] for i in range(len(M.row_degrees))], sig, W
        )
    defects = []
    for c in range(len(M.col_degrees)):
        if c in cols:
            continue
        col = GradedMatrix(M.row_degrees, [M.col_degrees[c]], [[M.entries[i][c]] for i in range(len(M.row_degrees))], sig, W)
        if cols:
            cR = GradedMatrix([M.row_degrees[i] for i in rows], [M.col_degrees[c]], [[M.entries[i][c]] for i in rows], sig, W)
            g = mat_mul(minv, cR)
            col = col - mat_mul(span, g)
        residual = matrix_residual(col)
        if residual:
            defects.append(f"column {c}: {residual}")
    return defects


def classify_at(Phi: BundleMorphism, chart: str, point: Point) -> dict:
    M = Phi.matrix(chart)
    B = evaluate_at(M, point)
    ranks = block_ranks(B)
    injective = all(r == nc for r, nr, nc in ranks.values())
    surjective = all(r == nr for r, nr, nc in ranks.values())
    iso = injective and surjective
    if iso:
        # fiber isomorphism at a point gives a local inverse (asserted, not assumed)
        invert(M, sample_points=[point])
    return {
        "rank": {str(d): r for d, (r, nr, nc) in sorted(ranks.items())},
        "injective": injective,
        "surjective": surjective,
        "iso": iso,
    }
