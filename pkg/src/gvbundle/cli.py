"""Command-line front end: ``gvb <command> FILE [options]``.

Every command prints one report (JSON by default) and exits 0 when all
checks pass, 1 when some check fails and 2 on unreadable or inconsistent
input.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction

from .bundle import (
    GeometryError,
    atlas_check,
    basemap_check,
    bundle_cocycle_check,
    classify_at,
    dual_bundle,
    image_defect,
    morphism_check,
    pullback_bundle,
    shift_bundle,
    tangent_bundle,
    tensor_bundle,
)
from .dsl import DslError, SemanticError, Workspace, load
from .grading import gdim_convolve, gdim_dual
from .matrix import (
    InverseMismatchError,
    SingularBodyError,
    dual_transpose,
    identity,
    invert,
    mat_mul,
    parity_conjugate,
)
from .report import Report, matrix_residual
from .scalar import DomainError
from .sections import (
    coordinate_field,
    dual_section_of,
    exterior_derivative,
    form_value,
    function_check,
    linear_function_check,
    linear_function_of,
    section_check,
    section_value,
    value_consistency,
    vector_field_apply,
)
from .series import (
    DEFAULT_WEIGHT,
    GradedFunction,
    SignatureError,
    euler_field,
    fiber_weight_parts,
    homothety,
    is_fiber_linear,
)


class InputError(ValueError):
    pass


def _pick(table: dict, name, kind: str):
    if name is not None:
        if name not in table:
            raise InputError(f"unknown {kind} {name!r}")
        return [name]
    if not table:
        raise InputError(f"file declares no {kind}")
    return list(table)


def _one(table: dict, name, kind: str):
    names = _pick(table, name, kind)
    if len(names) > 1:
        raise InputError(f"several {kind}s declared ({', '.join(names)}); choose one with --{kind}")
    return names[0]


def _parse_point(text: str):
    """``x=1,y=-1/2`` -> dict, anything else is a point name."""
    if "=" not in text:
        return text
    out = {}
    for part in text.split(","):
        key, _, val = part.partition("=")
        try:
            out[key.strip()] = Fraction(val.strip())
        except (ValueError, ZeroDivisionError):
            raise InputError(f"bad point value {part!r}") from None
    return out


def _fmt_point(pt) -> str:
    return ",".join(f"{k}={v}" for k, v in sorted(pt.items()))


def _bundle_json(E) -> dict:
    return {
        "name": E.name,
        "base": E.atlas.name,
        "fiber": [[n, d] for n, d in E.fiber],
        "rank": E.rank().to_json(),
        "transitions": {f"{A}->{B}": E.transitions[(A, B)].rendered() for A, B in sorted(E.transitions)},
    }


def _prefixed(prefix, checks):
    for c in checks:
        yield type(c)(f"{prefix}: {c.name}", c.passed, c.residual)


def _equal_check(report, name, M, N):
    residual = matrix_residual(M - N)
    report.add(name, residual is None, residual)


# -- commands --------------------------------------------------------------------------

def cmd_check_atlas(ws: Workspace, args, report: Report):
    for name in _pick(ws.manifolds, args.manifold, "manifold"):
        atlas = ws.manifolds[name]
        report.extend(_prefixed(name, atlas_check(atlas)))
        report.data.setdefault("manifolds", {})[name] = {
            "charts": list(atlas.charts),
            "dimension": atlas.gdim().to_json(),
        }
    for name in sorted(ws.maps):
        report.extend(_prefixed(f"map {name}", basemap_check(ws.maps[name])))


def cmd_check_cocycle(ws, args, report):
    for name in _pick(ws.bundles, args.bundle, "bundle"):
        E = ws.bundles[name]
        report.extend(_prefixed(name, bundle_cocycle_check(E)))
        report.data.setdefault("bundles", {})[name] = {"rank": E.rank().to_json()}


def cmd_tangent(ws, args, report):
    atlas = ws.manifolds[_one(ws.manifolds, args.manifold, "manifold")]
    T = tangent_bundle(atlas)
    report.extend(_prefixed(T.name, bundle_cocycle_check(T)))
    want = gdim_dual(atlas.gdim())
    ok = T.rank() == want
    report.add("rank is dual to the dimension of the base", ok, None if ok else f"{T.rank()} vs {want}")
    report.data["bundle"] = _bundle_json(T)


def cmd_dual(ws, args, report):
    E = ws.bundles[_one(ws.bundles, args.bundle, "bundle")]
    D = dual_bundle(E)
    report.extend(_prefixed(D.name, bundle_cocycle_check(D)))
    ok = D.rank() == gdim_dual(E.rank())
    report.add("rank is the dual graded rank", ok, None if ok else f"{D.rank()}")
    DD = dual_bundle(D)
    literal = all((DD.transitions[p] - E.transitions[p]).is_zero() for p in E.transitions)
    for p in sorted(E.transitions):
        _equal_check(report, f"double dual on {p[0]}->{p[1]} equals original up to parity conjugation",
                     DD.transitions[p], parity_conjugate(E.transitions[p]))
    report.data["double_dual_literally_equal"] = literal
    report.data["bundle"] = _bundle_json(D)


def cmd_shift(ws, args, report):
    E = ws.bundles[_one(ws.bundles, args.bundle, "bundle")]
    S = shift_bundle(E, args.by)
    report.extend(_prefixed(S.name, bundle_cocycle_check(S)))
    back = shift_bundle(S, -args.by)
    same = back.fiber == E.fiber and all(back.transitions[p].entries == E.transitions[p].entries for p in E.transitions)
    report.add(f"shift by {-args.by} restores the bundle", same, None if same else "fiber or transitions differ")
    report.data["bundle"] = _bundle_json(S)


def cmd_tensor(ws, args, report):
    E = ws.bundles[_one(ws.bundles, args.bundle, "bundle")]
    if args.with_ not in ws.bundles:
        raise InputError(f"unknown bundle {args.with_!r}")
    F = ws.bundles[args.with_]
    X = tensor_bundle(E, F)
    report.extend(_prefixed(X.name, bundle_cocycle_check(X)))
    want = gdim_convolve(E.rank(), F.rank())
    report.add("rank is the convolution of ranks", X.rank() == want, None if X.rank() == want else f"{X.rank()} vs {want}")
    report.data["bundle"] = _bundle_json(X)


def cmd_pullback(ws, args, report):
    E = ws.bundles[_one(ws.bundles, args.bundle, "bundle")]
    phi = ws.maps[_one(ws.maps, args.map, "map")]
    report.extend(_prefixed(f"map {phi.name}", basemap_check(phi)))
    P = pullback_bundle(E, phi)
    report.extend(_prefixed(P.name, bundle_cocycle_check(P)))
    report.add("rank is preserved", P.rank() == E.rank(), None if P.rank() == E.rank() else f"{P.rank()}")
    report.data["bundle"] = _bundle_json(P)


def cmd_invert(ws, args, report):
    name = _one(ws.matrices, args.matrix, "matrix")
    mname, cname, F = ws.matrices[name]
    chart = ws.manifolds[mname].chart(cname)
    points = [chart.point(_parse_point(p)) for p in args.point] or list(chart.points.values())
    W = F.W
    try:
        G = invert(F, sample_points=points)
    except SingularBodyError as exc:
        report.add("degree-zero body invertible", False, str(exc))
        return
    except InverseMismatchError as exc:
        report.add("left and right inverse agree", False, str(exc))
        return
    I_r, I_c = identity(F.row_degrees, F.sig, W), identity(F.col_degrees, F.sig, W)
    _equal_check(report, "F G = 1", mat_mul(F, G), I_r)
    _equal_check(report, "G F = 1", mat_mul(G, F), I_c)
    report.data["matrix"] = name
    report.data["inverse"] = G.to_json()
    report.data["dual_transpose"] = dual_transpose(F).to_json()


def cmd_check_morphism(ws, args, report):
    for name in _pick(ws.morphisms, args.morphism, "morphism"):
        report.extend(_prefixed(name, morphism_check(ws.morphisms[name])))


def cmd_classify(ws, args, report):
    Phi = ws.morphisms[_one(ws.morphisms, args.morphism, "morphism")]
    report.extend(_prefixed(Phi.name, morphism_check(Phi)))
    atlas = Phi.source.atlas
    charts = [args.chart] if args.chart else list(atlas.charts)
    samples = []
    for A in charts:
        chart = atlas.chart(A)
        pts = [chart.point(_parse_point(p)) for p in args.point] if args.point else list(chart.points.values())
        samples.extend((A, p) for p in pts)
        if args.point:
            break
    if not samples:
        raise InputError("no sample points: declare points or pass --point")
    rows, ranks_seen, defects_seen = [], set(), []
    for A, pt in samples:
        info = classify_at(Phi, A, pt)
        M = Phi.matrix(A)
        info.update(chart=A, point={k: str(v) for k, v in sorted(pt.items())}, matrix_zero=M.is_zero())
        defects = image_defect(M, pt)
        info["image_defects"] = defects
        if defects:
            defects_seen.append(f"{A}({_fmt_point(pt)})")
        ranks_seen.add(tuple(sorted(info["rank"].items())))
        rows.append(info)
    report.data["morphism"] = Phi.name
    report.data["samples"] = rows
    report.data["constant_rank"] = len(ranks_seen) == 1
    if len(ranks_seen) > 1:
        report.warn("graded rank of the fiber map is not constant across sample points")
    if defects_seen:
        report.warn("image is not a subbundle near " + ", ".join(defects_seen))


def cmd_check_section(ws, args, report):
    for name in _pick(ws.sections, args.section, "section"):
        s = ws.sections[name]
        report.extend(_prefixed(name, section_check(s)))


def cmd_value(ws, args, report):
    name = _one(ws.sections, args.section, "section")
    s = ws.sections[name]
    atlas = s.bundle.atlas
    charts = [args.chart] if args.chart else list(atlas.charts)
    values = []
    for A in charts:
        chart = atlas.chart(A)
        pts = [chart.point(_parse_point(p)) for p in args.point] if args.point else list(chart.points.values())
        for pt in pts:
            val = section_value(s, A, pt)
            values.append({
                "chart": A,
                "point": {k: str(v) for k, v in sorted(pt.items())},
                "value": {k: str(v) for k, v in val.items()},
            })
            report.extend(_prefixed(name, value_consistency(s, A, pt)))
    report.data["section"] = name
    report.data["values"] = values


def cmd_euler_check(ws, args, report):
    name = _one(ws.functions, args.function, "function")
    target, parts = ws.functions[name]
    if target not in ws.bundles:
        raise InputError(f"function {name} lives on the manifold {target}; euler-check needs a function on a bundle")
    E = ws.bundles[target]
    linear = True
    weights = {}
    for A, f in parts.items():
        split = fiber_weight_parts(f)
        weights[A] = {str(w): str(p) for w, p in split.items()}
        linear = linear and is_fiber_linear(f)
        for lam in (Fraction(2), Fraction(-1, 3)):
            lhs = homothety(f, lam)
            rhs = GradedFunction.zero(f.sig, f.degree, f.W)
            for w, p in split.items():
                rhs = rhs + p * lam ** w
            diff = lhs - rhs
            report.add(f"homothety {lam} on {A} scales weight parts", diff.is_zero(), str(diff))
        euler = euler_field(f)
        expect = GradedFunction.zero(f.sig, f.degree, f.W)
        for w, p in split.items():
            expect = expect + p * w
        diff = euler - expect.truncate(f.W - 1)
        report.add(f"Euler field on {A} multiplies each part by its weight", diff.is_zero(), str(diff))
    report.data["function"] = name
    report.data["linear"] = linear
    report.data["weight_parts"] = weights
    if linear:
        report.extend(_prefixed(name, linear_function_check(parts, E)))
        lam = dual_section_of(parts, E)
        back = linear_function_of(lam, E)
        same = all((back[A].truncate(E.W) - parts[A].truncate(E.W)).is_zero() for A in parts)
        report.add("dual section round trip", same, None if same else "linear function differs after round trip")
        report.data["dual_section"] = {
            "shift": lam.shift,
            "components": {A: [str(c) for c in v] for A, v in lam.components.items()},
        }


def cmd_derive(ws, args, report):
    name = _one(ws.functions, args.function, "function")
    target, f = ws.functions[name]
    if target not in ws.manifolds:
        raise InputError(f"function {name} lives on the bundle {target}; derive needs a function on a manifold")
    atlas = ws.manifolds[target]
    T = tangent_bundle(atlas)
    report.extend(_prefixed(name, function_check(f, atlas)))
    df = exterior_derivative(f, T)
    report.extend(_prefixed(f"d{name}", section_check(df)))
    deg = next(iter(f.values())).degree
    for A in atlas.charts:
        for j, (x, _) in enumerate(atlas.chart(A).coords):
            X = coordinate_field(T, j, A)
            lhs = form_value(df, X)[A]
            rhs = vector_field_apply(X, f)[A]
            if (deg * X.shift) % 2:
                rhs = -rhs
            diff = lhs - rhs
            report.add(f"d{name}(d/d{x}) matches d/d{x} applied to {name} on {A}", diff.is_zero(), str(diff))
    report.data["function"] = name
    report.data["differential"] = {
        "shift": df.shift,
        "components": {A: [str(c) for c in v] for A, v in df.components.items()},
        "fiber": list(df.bundle.fiber_names),
    }


COMMANDS = {
    "check-atlas": cmd_check_atlas,
    "check-cocycle": cmd_check_cocycle,
    "tangent": cmd_tangent,
    "dual": cmd_dual,
    "tensor": cmd_tensor,
    "shift": cmd_shift,
    "pullback": cmd_pullback,
    "invert": cmd_invert,
    "check-morphism": cmd_check_morphism,
    "classify": cmd_classify,
    "check-section": cmd_check_section,
    "value": cmd_value,
    "euler-check": cmd_euler_check,
    "derive": cmd_derive,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gvb", description="Checks for graded manifolds and graded vector bundles.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("file")
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.add_argument("--weight", type=int, default=DEFAULT_WEIGHT, help="truncation weight W")
    p.add_argument("--manifold")
    p.add_argument("--bundle")
    p.add_argument("--with", dest="with_", help="second bundle for tensor")
    p.add_argument("--by", type=int, default=1, help="degree shift")
    p.add_argument("--map")
    p.add_argument("--matrix")
    p.add_argument("--morphism")
    p.add_argument("--section")
    p.add_argument("--function")
    p.add_argument("--chart")
    p.add_argument("--point", action="append", default=[], help="point name or x=1,y=1/2 (repeatable)")
    return p


def run(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    args = build_parser().parse_args(argv)
    if args.weight < 0:
        print("error: --weight must be non-negative", file=err)
        return 2
    report = Report(args.command, args.weight)
    try:
        ws = load(args.file, args.weight)
        COMMANDS[args.command](ws, args, report)
    except OSError as exc:
        print(f"error: {exc}", file=err)
        return 2
    except DslError as exc:
        print(f"error: {exc}", file=err)
        return 2
    except (InputError, SemanticError, GeometryError, SignatureError, DomainError) as exc:
        print(f"error: {exc}", file=err)
        return 2
    print(report.dumps() if args.format == "json" else report.text(), file=out)
    return 0 if report.passed else 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
