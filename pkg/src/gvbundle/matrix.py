"""Matrices of graded functions and their two-sided inversion.

Entry ``[i][k]`` has degree ``row_degrees[i] - col_degrees[k]``. Products are
formed in written index order; every commutation sign lives in
:func:`~gvbundle.series.series_mul`.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations
from typing import Iterable, Mapping, Sequence

import sympy

from .grading import GradedDimension
from .series import DegreeError, GeneratorSignature, GradedFunction, reciprocal, series_mul, substitute


class ShapeError(ValueError):
    pass


class SingularBodyError(ArithmeticError):
    def __init__(self, point, message="determinant body vanishes"):
        self.point = dict(point)
        pretty = ", ".join(f"{k}={v}" for k, v in sorted(self.point.items()))
        super().__init__(f"{message} at sample point {{{pretty}}}")


class InverseMismatchError(ArithmeticError):
    pass


class GradedMatrix:
    __slots__ = ("row_degrees", "col_degrees", "entries", "sig", "W")

    def __init__(self, row_degrees, col_degrees, entries, sig: GeneratorSignature, W: int):
        self.row_degrees = tuple(row_degrees)
        self.col_degrees = tuple(col_degrees)
        self.sig = sig
        self.W = W
        rows = []
        if len(entries) != len(self.row_degrees):
            raise ShapeError(f"expected {len(self.row_degrees)} rows, got {len(entries)}")
        for i, row in enumerate(entries):
            if len(row) != len(self.col_degrees):
                raise ShapeError(f"row {i} has {len(row)} entries, expected {len(self.col_degrees)}")
            out = []
            for k, f in enumerate(row):
                want = self.row_degrees[i] - self.col_degrees[k]
                if not isinstance(f, GradedFunction):
                    f = GradedFunction.const(sig, f, W)
                if f.terms and f.degree != want:
                    raise DegreeError(f"entry [{i}][{k}] has degree {f.degree}, expected {want}")
                out.append(f.with_degree(want) if f.degree != want else f)
            rows.append(tuple(out))
        self.entries = tuple(rows)

    @property
    def shape(self):
        return len(self.row_degrees), len(self.col_degrees)

    def __getitem__(self, ij):
        i, k = ij
        return self.entries[i][k]

    def map(self, fn) -> "GradedMatrix":
        return GradedMatrix(self.row_degrees, self.col_degrees, [[fn(f) for f in row] for row in self.entries], self.sig, self.W)

    def truncate(self, W: int) -> "GradedMatrix":
        W = min(W, self.W)
        ents = [[f.truncate(W) for f in row] for row in self.entries]
        return GradedMatrix(self.row_degrees, self.col_degrees, ents, self.sig, W)

    def __add__(self, other):
        return mat_add(self, other)

    def __sub__(self, other):
        return mat_add(self, -other)

    def __neg__(self):
        return self.map(lambda f: -f)

    def __matmul__(self, other):
        return mat_mul(self, other)

    def __eq__(self, other):
        if not isinstance(other, GradedMatrix):
            return NotImplemented
        return (
            self.row_degrees == other.row_degrees
            and self.col_degrees == other.col_degrees
            and all(a == b for ra, rb in zip(self.entries, other.entries) for a, b in zip(ra, rb))
        )

    def is_zero(self) -> bool:
        return all(f.is_zero() for row in self.entries for f in row)

    def is_identity(self) -> bool:
        n, m = self.shape
        return n == m and all(
            (f == 1) if i == k else f.is_zero() for i, row in enumerate(self.entries) for k, f in enumerate(row)
        )

    def nonzero_entries(self):
        for i, row in enumerate(self.entries):
            for k, f in enumerate(row):
                if not f.is_zero():
                    yield i, k, f

    def substitute(self, images, coeff_images=None, target=None) -> "GradedMatrix":
        target = target or self.sig
        ents = [[substitute(f, images, coeff_images or {}, target) for f in row] for row in self.entries]
        W = min([self.W] + [g.W for g in images.values()])
        return GradedMatrix(self.row_degrees, self.col_degrees, ents, target, W)

    def rendered(self) -> list[list[str]]:
        return [[str(f) for f in row] for row in self.entries]

    def to_json(self):
        return {"rows": list(self.row_degrees), "cols": list(self.col_degrees), "entries": self.rendered()}

    def __repr__(self):
        return f"GradedMatrix(rows={self.row_degrees}, cols={self.col_degrees}, {self.rendered()})"


def identity(degrees: Sequence[int], sig: GeneratorSignature, W: int) -> GradedMatrix:
    n = len(degrees)
    return GradedMatrix(degrees, degrees, [[1 if i == k else 0 for k in range(n)] for i in range(n)], sig, W)


def zero_matrix(row_degrees, col_degrees, sig, W) -> GradedMatrix:
    return GradedMatrix(row_degrees, col_degrees, [[0] * len(col_degrees) for _ in row_degrees], sig, W)


def mat_add(A: GradedMatrix, B: GradedMatrix) -> GradedMatrix:
    if A.row_degrees != B.row_degrees or A.col_degrees != B.col_degrees:
        raise ShapeError("matrices differ in shape or degree signature")
    W = min(A.W, B.W)
    ents = [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(A.entries, B.entries)]
    return GradedMatrix(A.row_degrees, A.col_degrees, ents, A.sig, W)


def mat_mul(A: GradedMatrix, B: GradedMatrix) -> GradedMatrix:
    if A.col_degrees != B.row_degrees:
        raise ShapeError(f"cannot multiply: column degrees {A.col_degrees} vs row degrees {B.row_degrees}")
    W = min(A.W, B.W)
    rows = []
    for i, ri in enumerate(A.row_degrees):
        row = []
        for j, cj in enumerate(B.col_degrees):
            acc = GradedFunction.zero(A.sig, ri - cj, W)
            for k in range(len(A.col_degrees)):
                a, b = A.entries[i][k], B.entries[k][j]
                if a.terms and b.terms:
                    acc = acc + series_mul(a, b)
            row.append(acc)
        rows.append(row)
    return GradedMatrix(A.row_degrees, B.col_degrees, rows, A.sig, W)


def scale_matrix(f: GradedFunction, A: GradedMatrix) -> GradedMatrix:
    """f * A entrywise, f of degree 0 multiplied on the left."""
    if f.terms and f.degree != 0:
        raise DegreeError("only degree-0 scalars keep the degree signature")
    return A.map(lambda a: series_mul(f, a) if a.terms else a)


def degree_zero_block(F: GradedMatrix) -> GradedMatrix:
    ents = [
        [f if F.row_degrees[i] == F.col_degrees[k] else 0 for k, f in enumerate(row)]
        for i, row in enumerate(F.entries)
    ]
    return GradedMatrix(F.row_degrees, F.col_degrees, ents, F.sig, F.W)


def _perm_sign(p) -> int:
    sign = 1
    p = list(p)
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            sign = -sign
    return sign


def _det(rows: list[list[GradedFunction]], sig, W) -> GradedFunction:
    n = len(rows)
    total = GradedFunction.zero(sig, 0, W)
    if n == 0:
        return GradedFunction.const(sig, 1, W)
    for p in permutations(range(n)):
        term = GradedFunction.const(sig, _perm_sign(p), W)
        for i in range(n):
            f = rows[i][p[i]]
            if not f.terms:
                term = None
                break
            term = series_mul(term, f)
        if term is not None:
            total = total + term
    return total


def det_adj_deg0(E: GradedMatrix) -> tuple[GradedFunction, GradedMatrix]:
    """Classical determinant and adjugate; valid because degree-0 entries commute."""
    n, m = E.shape
    if n != m:
        raise ShapeError("determinant needs a square matrix")
    for i, k, f in E.nonzero_entries():
        if f.degree != 0:
            raise DegreeError(f"entry [{i}][{k}] has nonzero degree {f.degree}")
    rows = [list(r) for r in E.entries]
    det = _det(rows, E.sig, E.W)
    adj = []
    for i in range(n):
        row = []
        for k in range(n):
            # adj[i][k] = (-1)^(i+k) * minor with row k and column i removed
            minor = [[rows[r][c] for c in range(n) if c != i] for r in range(n) if r != k]
            cof = _det(minor, E.sig, E.W)
            row.append(-cof if (i + k) % 2 else cof)
        adj.append(row)
    # adj has the degree pattern of an inverse; off-block cofactors vanish identically
    return det, GradedMatrix(E.col_degrees, E.row_degrees, adj, E.sig, E.W)


def neumann_inverse(Fp: GradedMatrix, W: int | None = None) -> GradedMatrix:
    """(1 + Fp)^-1 as the alternating Neumann series; Fp must have no degree-0 entries."""
    W = Fp.W if W is None else min(W, Fp.W)
    for i, k, f in Fp.nonzero_entries():
        if f.degree == 0:
            raise DegreeError(f"entry [{i}][{k}] has degree 0; the Neumann series would not terminate by weight")
    one = identity(Fp.row_degrees, Fp.sig, W)
    neg = -Fp
    total, power = one, one
    for _ in range(W):
        power = mat_mul(power, neg)
        if power.is_zero():
            break
        total = total + power
    return total


def check_body_nonzero(det: GradedFunction, sample_points: Iterable[Mapping]) -> None:
    if det.body().is_zero():
        raise SingularBodyError({}, "determinant of the degree-zero block has identically zero body;")
    for point in sample_points:
        try:
            v = det.body_value(point)
        except ZeroDivisionError:
            raise SingularBodyError(point, "determinant body undefined")
        if v == 0:
            raise SingularBodyError(point)


def invert(F: GradedMatrix, W: int | None = None, sample_points: Iterable[Mapping] = ()) -> GradedMatrix:
    """Two-sided inverse through weight W.

    F = E (1 + F') with E the degree-zero block; the right inverse is
    G = P E^-1 with P the Neumann series of F'. The left inverse is computed
    independently as E^-1 (1 + F'')^-1 with F'' = F E^-1 - 1, and both are
    required to agree.
    """
    n, m = F.shape
    if n != m or sorted(F.row_degrees) != sorted(F.col_degrees):
        raise ShapeError("only square matrices with matching degree multisets can be inverted")
    if W is not None:
        F = F.truncate(W)
    W = F.W
    E = degree_zero_block(F)
    det, adj = det_adj_deg0(E)
    check_body_nonzero(det, sample_points)
    rdet = reciprocal(det)
    Einv = scale_matrix(rdet, adj)
    Fp = mat_mul(Einv, F) - identity(F.col_degrees, F.sig, W)
    G = mat_mul(neumann_inverse(Fp), Einv)
    Fpp = mat_mul(F, Einv) - identity(F.row_degrees, F.sig, W)
    G_left = mat_mul(Einv, neumann_inverse(Fpp))
    if G != G_left:
        raise InverseMismatchError("left and right inverse candidates disagree")
    return G


def _flip(d: int, b: int, degrees) -> int:
    return -1 if (degrees[d] * (degrees[b] - degrees[d])) % 2 else 1


def signed_transpose(A: GradedMatrix) -> GradedMatrix:
    """tau(A)[d][b] = (-1)^(r_d (r_b - r_d)) A[b][d] for square A with row degrees r.

    The result has row and column degrees -r, so it is again a valid graded matrix.
    """
    r = A.row_degrees
    if r != A.col_degrees:
        raise ShapeError("signed transpose needs equal row and column degrees")
    n = len(r)
    ents = [[A.entries[b][d] if _flip(d, b, r) > 0 else -A.entries[b][d] for b in range(n)] for d in range(n)]
    neg = tuple(-x for x in r)
    return GradedMatrix(neg, neg, ents, A.sig, A.W)


def dual_transpose(T: GradedMatrix, sample_points: Iterable[Mapping] = ()) -> GradedMatrix:
    """Transition data of the dual frame.

    Entry [d][b] is (-1)^(r_d (r_b - r_d)) times entry [b][d] of T^-1, with r
    the row degrees of T. With all degrees 0 this is the inverse transpose.
    """
    return signed_transpose(invert(T, sample_points=sample_points))


def parity_conjugate(A: GradedMatrix) -> GradedMatrix:
    """P A P with P = diag((-1)^r): flips the sign of every odd-degree entry."""
    return A.map(lambda f: -f if f.degree % 2 else f)


# -- numeric fiber maps ------------------------------------------------------------------

@dataclass(frozen=True)
class NumericBlockMatrix:
    """Per-degree rational blocks of a matrix evaluated at a point."""

    blocks: tuple  # ((degree, row_indices, col_indices, rows), ...)
    off_block_zero: bool = True

    def block(self, degree):
        for d, ri, ci, rows in self.blocks:
            if d == degree:
                return ri, ci, rows
        return (), (), []

    def to_json(self):
        return {
            str(d): [[str(v) for v in row] for row in rows] for d, ri, ci, rows in self.blocks
        }


def evaluate_at(F: GradedMatrix, point: Mapping) -> NumericBlockMatrix:
    degrees = sorted(set(F.row_degrees) | set(F.col_degrees))
    blocks = []
    off_zero = True
    for i, k, f in F.nonzero_entries():
        if F.row_degrees[i] != F.col_degrees[k] and f.body_value(point) != 0:
            off_zero = False
    for d in degrees:
        ri = tuple(i for i, r in enumerate(F.row_degrees) if r == d)
        ci = tuple(k for k, c in enumerate(F.col_degrees) if c == d)
        rows = tuple(tuple(F.entries[i][k].body_value(point) for k in ci) for i in ri)
        blocks.append((d, ri, ci, rows))
    return NumericBlockMatrix(tuple(blocks), off_zero)


def _sympy_matrix(rows, ncols):
    return sympy.Matrix(len(rows), ncols, [sympy.Rational(v.numerator, v.denominator) for r in rows for v in r])


def block_rank(rows, ncols) -> int:
    if not rows or not ncols:
        return 0
    return _sympy_matrix(rows, ncols).rank()


def pivots(rows, ncols) -> tuple[int, ...]:
    """Indices of pivot columns (a maximal independent column set)."""
    if not rows or not ncols:
        return ()
    return tuple(_sympy_matrix(rows, ncols).rref()[1])


def graded_rank(B: NumericBlockMatrix) -> GradedDimension:
    return GradedDimension.of((d, block_rank(rows, len(ci))) for d, ri, ci, rows in B.blocks)


def block_ranks(B: NumericBlockMatrix) -> dict[int, tuple[int, int, int]]:
    """degree -> (rank, number of rows, number of columns)."""
    return {d: (block_rank(rows, len(ci)), len(ri), len(ci)) for d, ri, ci, rows in B.blocks}
