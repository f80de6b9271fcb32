"""Reader and printer for ``.gvb`` declaration files.

Blocks (whitespace-insensitive, ``#`` starts a comment)::

    manifold M {
      chart A { coords: x:0, xi:1 ; base: x }
      chart B { coords: y:0, eta:1 ; base: y }
      overlap A B { y = x ; eta = (1 + x^2)*xi | inverse: x = y ; xi = eta/(1 + y^2) }
      point p in A { x = 1 }
    }
    bundle E over M { fiber: k:0, l:1 ; transition A B = [[1, 0], [x*xi, 1]] }
    bundle TM = tangent M            # also: dual E, shift E 1, tensor E F, sum E F, pullback E phi
    map phi : M -> N { A -> C { u = x ; zeta = xi } }
    morphism F : E -> E2 via phi { A = [[...]] ; B = [[...]] }
    section s of E shift 0 { A = [x, xi] ; B = [...] }
    function f on M { A = x^2*xi }   # on a bundle E the fiber coordinates may appear
    matrix G over M.A { rows: 0, 1 ; cols: 0, 1 ; entries: [[1, theta], [xi, 1]] }

Charts, sections and functions may omit charts; missing data is produced
by transport along overlaps. The printer always writes every chart, so
print(parse(text)) is a fixed point of parse-then-print.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from .bundle import (
    Atlas,
    BaseMap,
    Bundle,
    BundleMorphism,
    Chart,
    GeometryError,
    direct_sum,
    dual_bundle,
    pullback_bundle,
    shift_bundle,
    tangent_bundle,
    tensor_bundle,
)
from .expr import ExprSyntaxError, UndeclaredSymbolError
from .matrix import GradedMatrix, ShapeError
from .scalar import parse as parse_scalar
from .sections import Section, fiber_signature, transport
from .series import DEFAULT_WEIGHT, DegreeError, GradedFunction, SignatureError, parse_function


class DslError(ValueError):
    def __init__(self, message: str, filename: str = "<input>", line: int = 0, col: int = 0):
        self.filename, self.line, self.col = filename, line, col
        super().__init__(f"{filename}:{line}:{col}: {message}")


class SemanticError(ValueError):
    """Well-formed input referring to something inconsistent or missing."""


_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_INT = re.compile(r"[-+]?\d+")


class _Scanner:
    def __init__(self, text: str, filename: str):
        self.text = text
        self.filename = filename
        self.pos = 0

    def where(self, pos=None):
        pos = self.pos if pos is None else pos
        line = self.text.count("\n", 0, pos) + 1
        col = pos - (self.text.rfind("\n", 0, pos) + 1) + 1
        return line, col

    def error(self, message, pos=None) -> DslError:
        return DslError(message, self.filename, *self.where(pos))

    def skip(self):
        while self.pos < len(self.text):
            ch = self.text[self.pos]
            if ch.isspace():
                self.pos += 1
            elif ch == "#":
                nl = self.text.find("\n", self.pos)
                self.pos = len(self.text) if nl < 0 else nl + 1
            else:
                break

    def at_end(self):
        self.skip()
        return self.pos >= len(self.text)

    def peek(self, s: str) -> bool:
        self.skip()
        return self.text.startswith(s, self.pos)

    def accept(self, s: str) -> bool:
        if self.peek(s):
            self.pos += len(s)
            return True
        return False

    def expect(self, s: str):
        if not self.accept(s):
            found = self.text[self.pos:self.pos + 12].split("\n")[0] or "end of file"
            raise self.error(f"expected {s!r}, found {found!r}")

    def ident(self, what="identifier") -> str:
        self.skip()
        m = _IDENT.match(self.text, self.pos)
        if not m:
            raise self.error(f"expected {what}")
        self.pos = m.end()
        return m.group()

    def peek_ident(self) -> str | None:
        self.skip()
        m = _IDENT.match(self.text, self.pos)
        return m.group() if m else None

    def keyword(self, word: str):
        start = self.pos
        got = self.ident(f"keyword {word!r}")
        if got != word:
            raise self.error(f"expected keyword {word!r}, found {got!r}", start)

    def integer(self) -> int:
        self.skip()
        m = _INT.match(self.text, self.pos)
        if not m:
            raise self.error("expected an integer")
        self.pos = m.end()
        return int(m.group())

    def raw_expr(self) -> tuple[str, int]:
        """Expression text up to a delimiter at bracket depth zero."""
        self.skip()
        start = self.pos
        depth = 0
        while self.pos < len(self.text):
            ch = self.text[self.pos]
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
            elif depth == 0 and ch in ";|},]\n#":
                break
            self.pos += 1
        text = self.text[start:self.pos].rstrip()
        if not text:
            raise self.error("expected an expression", start)
        return text, start


# -- declarations -------------------------------------------------------------------------

@dataclass
class Workspace:
    W: int = DEFAULT_WEIGHT
    manifolds: dict[str, Atlas] = field(default_factory=dict)
    bundles: dict[str, Bundle] = field(default_factory=dict)
    maps: dict[str, BaseMap] = field(default_factory=dict)
    morphisms: dict[str, BundleMorphism] = field(default_factory=dict)
    sections: dict[str, Section] = field(default_factory=dict)
    functions: dict[str, tuple[str, dict[str, GradedFunction]]] = field(default_factory=dict)
    matrices: dict[str, tuple[str, str, GradedMatrix]] = field(default_factory=dict)
    derived: dict[str, tuple[str, tuple]] = field(default_factory=dict)
    order: list[tuple[str, str]] = field(default_factory=list)
    overlap_order: dict[str, list[tuple[str, str]]] = field(default_factory=dict)

    def _get(self, table, kind, name):
        if name not in table:
            raise SemanticError(f"unknown {kind} {name!r}")
        return table[name]

    def manifold(self, name) -> Atlas:
        return self._get(self.manifolds, "manifold", name)

    def bundle(self, name) -> Bundle:
        return self._get(self.bundles, "bundle", name)

    def map(self, name) -> BaseMap:
        return self._get(self.maps, "map", name)

    def morphism(self, name) -> BundleMorphism:
        return self._get(self.morphisms, "morphism", name)

    def section(self, name) -> Section:
        return self._get(self.sections, "section", name)

    def function(self, name):
        return self._get(self.functions, "function", name)

    def matrix(self, name):
        return self._get(self.matrices, "matrix", name)

    def names(self):
        return {n for kind, n in self.order}

    def to_dsl(self) -> str:
        return print_workspace(self)


class _Reader:
    def __init__(self, text: str, filename: str, W: int):
        self.s = _Scanner(text, filename)
        self.ws = Workspace(W=W)

    # helpers
    def fn(self, text: str, start: int, sig, W: int, degree=None) -> GradedFunction:
        try:
            return parse_function(text, sig, W, degree)
        except (ExprSyntaxError, UndeclaredSymbolError) as exc:
            off = start + (exc.pos or 0)
            msg = str(exc).rsplit(" at position", 1)[0]
            raise self.s.error(msg, off) from None
        except (DegreeError, SignatureError, ArithmeticError) as exc:
            raise self.s.error(str(exc), start) from None

    def declare(self, kind, name, pos):
        if name in self.ws.names():
            raise self.s.error(f"duplicate declaration of {name!r}", pos)
        self.ws.order.append((kind, name))

    def degree_list(self):
        out = []
        while True:
            name = self.s.ident("coordinate name")
            self.s.expect(":")
            out.append((name, self.s.integer()))
            if not self.s.accept(","):
                return out

    def name_list(self):
        out = [self.s.ident()]
        while self.s.accept(","):
            out.append(self.s.ident())
        return out

    def matrix_literal(self, sig, W, row_degrees, col_degrees):
        start = self.s.pos
        self.s.expect("[")
        rows = []
        while True:
            self.s.expect("[")
            row = []
            while True:
                i, k = len(rows), len(row)
                text, pos = self.s.raw_expr()
                want = None
                if i < len(row_degrees) and k < len(col_degrees):
                    want = row_degrees[i] - col_degrees[k]
                row.append(self.fn(text, pos, sig, W, want))
                if not self.s.accept(","):
                    break
            self.s.expect("]")
            rows.append(row)
            if not self.s.accept(","):
                break
        self.s.expect("]")
        try:
            return GradedMatrix(row_degrees, col_degrees, rows, sig, W)
        except (ShapeError, DegreeError) as exc:
            raise self.s.error(str(exc), start) from None

    def vector_literal(self, sig, W, degrees):
        self.s.expect("[")
        out = []
        while True:
            text, pos = self.s.raw_expr()
            want = degrees[len(out)] if len(out) < len(degrees) else None
            out.append(self.fn(text, pos, sig, W, want))
            if not self.s.accept(","):
                break
        self.s.expect("]")
        if len(out) != len(degrees):
            raise self.s.error(f"expected {len(degrees)} components, got {len(out)}")
        return tuple(out)

    def point_value(self) -> Fraction:
        text, pos = self.s.raw_expr()
        try:
            return parse_scalar(text, []).constant_value()
        except (ExprSyntaxError, UndeclaredSymbolError, ValueError, ZeroDivisionError) as exc:
            raise self.s.error(f"point values must be rational constants ({exc})", pos) from None

    # blocks
    def run(self) -> Workspace:
        s = self.s
        while not s.at_end():
            pos = s.pos
            kw = s.ident("declaration keyword")
            handler = getattr(self, f"read_{kw}", None)
            if handler is None:
                raise s.error(f"unknown declaration {kw!r}", pos)
            try:
                handler()
            except (GeometryError, SemanticError, SignatureError) as exc:
                raise s.error(str(exc), pos) from None
        return self.ws

    def read_manifold(self):
        s, W = self.s, self.ws.W
        pos = s.pos
        name = s.ident("manifold name")
        self.declare("manifold", name, pos)
        s.expect("{")
        charts: dict[str, Chart] = {}
        overlaps = {}
        pair_order = []
        pending_points = []
        while not s.accept("}"):
            kpos = s.pos
            kw = s.ident()
            if kw == "chart":
                cname = s.ident("chart name")
                if cname in charts:
                    raise s.error(f"duplicate chart {cname!r}", kpos)
                s.expect("{")
                s.keyword("coords")
                s.expect(":")
                coords = self.degree_list()
                base = []
                if s.accept(";"):
                    if s.peek_ident() == "base":
                        s.keyword("base")
                        s.expect(":")
                        base = self.name_list()
                        s.accept(";")
                s.expect("}")
                try:
                    charts[cname] = Chart(cname, tuple(coords), tuple(base))
                except (GeometryError, SignatureError) as exc:
                    raise s.error(str(exc), kpos) from None
            elif kw == "overlap":
                a, b = s.ident("chart name"), s.ident("chart name")
                for c in (a, b):
                    if c not in charts:
                        raise s.error(f"unknown chart {c!r}", kpos)
                s.expect("{")
                overlaps[(a, b)] = self.assignments(charts[a].sig, W + 1, charts[b])
                if s.accept("|"):
                    s.keyword("inverse")
                    s.expect(":")
                    overlaps[(b, a)] = self.assignments(charts[b].sig, W + 1, charts[a])
                s.expect("}")
                pair_order.append((a, b))
            elif kw == "point":
                pname = s.ident("point name")
                s.keyword("in")
                cname = s.ident("chart name")
                if cname not in charts:
                    raise s.error(f"unknown chart {cname!r}", kpos)
                s.expect("{")
                values = {}
                while not s.accept("}"):
                    var = s.ident("coordinate")
                    s.expect("=")
                    values[var] = self.point_value()
                    s.accept(";")
                pending_points.append((cname, pname, values, kpos))
            else:
                raise s.error(f"unexpected {kw!r} in manifold block", kpos)
        if not charts:
            raise s.error(f"manifold {name} declares no charts", pos)
        for cname, pname, values, kpos in pending_points:
            chart = charts[cname]
            try:
                chart.points[pname] = chart.point(values)
            except GeometryError as exc:
                raise s.error(str(exc), kpos) from None
        self.ws.manifolds[name] = Atlas(name, charts, overlaps, W)
        self.ws.overlap_order[name] = pair_order

    def assignments(self, sig, W, target: Chart) -> dict[str, GradedFunction]:
        s = self.s
        out = {}
        degrees = dict(target.coords)
        while True:
            if s.peek("}") or s.peek("|"):
                break
            vpos = s.pos
            var = s.ident("coordinate")
            if var not in degrees:
                raise s.error(f"{var!r} is not a coordinate of chart {target.name}", vpos)
            s.expect("=")
            text, pos = s.raw_expr()
            out[var] = self.fn(text, pos, sig, W, degrees[var])
            if not s.accept(";"):
                break
        return out

    def read_bundle(self):
        s, ws = self.s, self.ws
        pos = s.pos
        name = s.ident("bundle name")
        self.declare("bundle", name, pos)
        if s.accept("="):
            op = s.ident("construction")
            args = []
            if op in ("tangent",):
                args = [s.ident("manifold name")]
                E = tangent_bundle(ws.manifold(args[0]), name)
            elif op == "dual":
                args = [s.ident("bundle name")]
                E = dual_bundle(ws.bundle(args[0]), name)
            elif op == "shift":
                args = [s.ident("bundle name"), s.integer()]
                E = shift_bundle(ws.bundle(args[0]), args[1], name)
            elif op in ("tensor", "sum"):
                args = [s.ident("bundle name"), s.ident("bundle name")]
                build = tensor_bundle if op == "tensor" else direct_sum
                E = build(ws.bundle(args[0]), ws.bundle(args[1]), name)
            elif op == "pullback":
                args = [s.ident("bundle name"), s.ident("map name")]
                E = pullback_bundle(ws.bundle(args[0]), ws.map(args[1]), name)
            else:
                raise s.error(f"unknown construction {op!r}", pos)
            ws.bundles[name] = E
            ws.derived[name] = (op, tuple(args))
            return
        s.keyword("over")
        atlas = ws.manifold(s.ident("manifold name"))
        s.expect("{")
        s.keyword("fiber")
        s.expect(":")
        fiber = tuple(self.degree_list())
        names = [n for n, _ in fiber]
        if len(set(names)) != len(names):
            raise s.error("fiber coordinate names must be distinct", pos)
        degs = [d for _, d in fiber]
        trans = {}
        while s.accept(";"):
            if s.peek("}"):
                break
            tpos = s.pos
            s.keyword("transition")
            a, b = s.ident("chart name"), s.ident("chart name")
            if (a, b) not in atlas.overlaps:
                raise s.error(f"manifold {atlas.name} has no overlap {a} -> {b}", tpos)
            s.expect("=")
            trans[(a, b)] = self.matrix_literal(atlas.chart(a).sig, ws.W, degs, degs)
        s.expect("}")
        E = Bundle(name, atlas, fiber, trans)
        try:
            E.fill_reverse()
        except ArithmeticError as exc:
            raise s.error(f"cannot supply reverse transitions: {exc}", pos) from None
        ws.bundles[name] = E

    def read_map(self):
        s, ws = self.s, self.ws
        pos = s.pos
        name = s.ident("map name")
        self.declare("map", name, pos)
        s.expect(":")
        src = ws.manifold(s.ident("manifold name"))
        s.expect("->")
        tgt = ws.manifold(s.ident("manifold name"))
        s.expect("{")
        assignments = {}
        while not s.accept("}"):
            a = s.ident("chart name")
            s.expect("->")
            c = s.ident("chart name")
            ca, cc = src.chart(a), tgt.chart(c)
            s.expect("{")
            imgs = self.assignments(ca.sig, ws.W, cc)
            s.expect("}")
            assignments[a] = (c, imgs)
            s.accept(";")
        ws.maps[name] = BaseMap(name, src, tgt, assignments)

    def read_morphism(self):
        s, ws = self.s, self.ws
        pos = s.pos
        name = s.ident("morphism name")
        self.declare("morphism", name, pos)
        s.expect(":")
        E = ws.bundle(s.ident("bundle name"))
        s.expect("->")
        F = ws.bundle(s.ident("bundle name"))
        phi = None
        if s.peek_ident() == "via":
            s.keyword("via")
            phi = ws.map(s.ident("map name"))
        s.expect("{")
        mats = {}
        while not s.accept("}"):
            a = s.ident("chart name")
            chart = E.atlas.chart(a)
            s.expect("=")
            mats[a] = self.matrix_literal(chart.sig, ws.W, F.degrees, E.degrees)
            s.accept(";")
        ws.morphisms[name] = BundleMorphism(name, E, F, mats, phi)

    def read_section(self):
        s, ws = self.s, self.ws
        pos = s.pos
        name = s.ident("section name")
        self.declare("section", name, pos)
        s.keyword("of")
        E = ws.bundle(s.ident("bundle name"))
        shift = 0
        if s.peek_ident() == "shift":
            s.keyword("shift")
            shift = s.integer()
        s.expect("{")
        comps = {}
        while not s.accept("}"):
            a = s.ident("chart name")
            s.expect("=")
            comps[a] = self.vector_literal(E.atlas.chart(a).sig, ws.W, [d + shift for d in E.degrees])
            s.accept(";")
        if not comps:
            raise s.error(f"section {name} gives no components", pos)
        missing = [A for A in E.atlas.charts if A not in comps]
        if missing:
            first = next(iter(comps))
            moved = transport(E, shift, first, comps[first])
            for A in missing:
                comps[A] = moved.components[A]
        ws.sections[name] = Section(E, shift, comps)

    def read_function(self):
        s, ws = self.s, self.ws
        pos = s.pos
        name = s.ident("function name")
        self.declare("function", name, pos)
        s.keyword("on")
        target = s.ident("manifold or bundle name")
        if target in ws.bundles:
            E = ws.bundles[target]
            atlas = E.atlas
            sig_of = lambda A: fiber_signature(E, A)
            W = ws.W + 1
        else:
            E = None
            atlas = ws.manifold(target)
            sig_of = lambda A: atlas.chart(A).sig
            W = ws.W
        s.expect("{")
        parts = {}
        while not s.accept("}"):
            a = s.ident("chart name")
            atlas.chart(a)
            s.expect("=")
            text, tpos = s.raw_expr()
            parts[a] = self.fn(text, tpos, sig_of(a), W)
            s.accept(";")
        if not parts:
            raise s.error(f"function {name} gives no chart expressions", pos)
        missing = [A for A in atlas.charts if A not in parts]
        if missing:
            if E is not None:
                raise s.error(f"function {name} on a bundle must be given on every chart", pos)
            first = next(iter(parts))
            for A in missing:
                if (A, first) not in atlas.overlaps:
                    raise s.error(f"cannot transfer function {name} to chart {A}", pos)
                parts[A] = atlas.reexpress(parts[first], first, A)
        ws.functions[name] = (target, parts)

    def read_matrix(self):
        s, ws = self.s, self.ws
        pos = s.pos
        name = s.ident("matrix name")
        self.declare("matrix", name, pos)
        s.keyword("over")
        mname = s.ident("manifold name")
        s.expect(".")
        cname = s.ident("chart name")
        chart = ws.manifold(mname).chart(cname)
        s.expect("{")
        s.keyword("rows")
        s.expect(":")
        rows = self.int_list()
        s.expect(";")
        s.keyword("cols")
        s.expect(":")
        cols = self.int_list()
        s.expect(";")
        s.keyword("entries")
        s.expect(":")
        M = self.matrix_literal(chart.sig, ws.W, rows, cols)
        s.accept(";")
        s.expect("}")
        ws.matrices[name] = (mname, cname, M)

    def int_list(self):
        out = [self.s.integer()]
        while self.s.accept(","):
            out.append(self.s.integer())
        return out


def parse_text(text: str, filename: str = "<input>", W: int = DEFAULT_WEIGHT) -> Workspace:
    return _Reader(text, filename, W).run()


def load(path: str, W: int = DEFAULT_WEIGHT) -> Workspace:
    with open(path, encoding="utf-8") as fh:
        return parse_text(fh.read(), path, W)


# -- printer ----------------------------------------------------------------------------

def _degrees(items):
    return ", ".join(f"{n}:{d}" for n, d in items)


def _matrix(M: GradedMatrix) -> str:
    return "[" + ", ".join("[" + ", ".join(str(f) for f in row) + "]" for row in M.entries) + "]"


def _vector(v) -> str:
    return "[" + ", ".join(str(f) for f in v) + "]"


def _frac(v: Fraction) -> str:
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def print_workspace(ws: Workspace) -> str:
    out = []
    for kind, name in ws.order:
        out.append(globals()[f"_print_{kind}"](ws, name))
    return "\n\n".join(out) + "\n"


def _print_manifold(ws, name):
    a = ws.manifolds[name]
    lines = [f"manifold {name} {{"]
    for c in a.charts.values():
        base = f" ; base: {', '.join(c.base)}" if c.base else ""
        lines.append(f"  chart {c.name} {{ coords: {_degrees(c.coords)}{base} }}")
    for A, B in ws.overlap_order.get(name, []):
        fwd = " ; ".join(f"{n} = {a.overlaps[(A, B)][n]}" for n in a.chart(B).coord_names if n in a.overlaps[(A, B)])
        text = f"  overlap {A} {B} {{ {fwd}"
        if (B, A) in a.overlaps:
            back = " ; ".join(f"{n} = {a.overlaps[(B, A)][n]}" for n in a.chart(A).coord_names if n in a.overlaps[(B, A)])
            text += f" | inverse: {back}"
        lines.append(text + " }")
    for c in a.charts.values():
        for pname, pt in c.points.items():
            vals = " ; ".join(f"{k} = {_frac(v)}" for k, v in pt.items())
            lines.append(f"  point {pname} in {c.name} {{ {vals} }}")
    lines.append("}")
    return "\n".join(lines)


def _print_bundle(ws, name):
    if name in ws.derived:
        op, args = ws.derived[name]
        return f"bundle {name} = {op} {' '.join(str(x) for x in args)}"
    E = ws.bundles[name]
    lines = [f"bundle {name} over {E.atlas.name} {{", f"  fiber: {_degrees(E.fiber)}"]
    for (A, B) in sorted(E.transitions):
        lines[-1] += " ;"
        lines.append(f"  transition {A} {B} = {_matrix(E.transitions[(A, B)])}")
    lines.append("}")
    return "\n".join(lines)


def _print_map(ws, name):
    phi = ws.maps[name]
    lines = [f"map {name} : {phi.source.name} -> {phi.target.name} {{"]
    for A, (C, imgs) in phi.assignments.items():
        body = " ; ".join(f"{n} = {imgs[n]}" for n in phi.target.chart(C).coord_names if n in imgs)
        lines.append(f"  {A} -> {C} {{ {body} }}")
    lines.append("}")
    return "\n".join(lines)


def _print_morphism(ws, name):
    m = ws.morphisms[name]
    via = f" via {m.base_map.name}" if m.base_map else ""
    lines = [f"morphism {name} : {m.source.name} -> {m.target.name}{via} {{"]
    items = [f"  {A} = {_matrix(M)}" for A, M in m.matrices.items()]
    lines.append(" ;\n".join(items))
    lines.append("}")
    return "\n".join(lines)


def _print_section(ws, name):
    sec = ws.sections[name]
    lines = [f"section {name} of {sec.bundle.name} shift {sec.shift} {{"]
    lines.append(" ;\n".join(f"  {A} = {_vector(v)}" for A, v in sec.components.items()))
    lines.append("}")
    return "\n".join(lines)


def _print_function(ws, name):
    target, parts = ws.functions[name]
    lines = [f"function {name} on {target} {{"]
    lines.append(" ;\n".join(f"  {A} = {f}" for A, f in parts.items()))
    lines.append("}")
    return "\n".join(lines)


def _print_matrix(ws, name):
    mname, cname, M = ws.matrices[name]
    return (
        f"matrix {name} over {mname}.{cname} {{\n"
        f"  rows: {', '.join(map(str, M.row_degrees))} ;\n"
        f"  cols: {', '.join(map(str, M.col_degrees))} ;\n"
        f"  entries: {_matrix(M)}\n}}"
    )
