import random
from fractions import Fraction

import pytest

from gvbundle.bundle import (
    Bundle,
    atlas_check,
    basemap_check,
    bundle_cocycle_check,
    classify_at,
    direct_sum,
    dual_bundle,
    image_defect,
    morphism_check,
    shift_bundle,
    tensor_bundle,
)
from gvbundle.grading import gdim_convolve, gdim_dual, gdim_shift
from gvbundle.matrix import GradedMatrix, parity_conjugate
from gvbundle.series import parse_function
from helpers import CUBIC_SHORT, corpus, cubic, ws


def passed(checks):
    return all(c.passed for c in checks)


def test_atlas_check_cubic_passes_with_long_inverse():
    w = cubic()
    assert passed(atlas_check(w.manifold("C")))


def test_atlas_check_cubic_fails_with_short_inverse():
    w = cubic(CUBIC_SHORT)
    bad = [c for c in atlas_check(w.manifold("C")) if not c.passed]
    assert bad and "x^7" in bad[0].residual


def test_tangent_transitions_of_cubic():
    w = cubic()
    T = w.bundle("TC")
    TAB = T.transition("A", "B")
    assert TAB.rendered() == [["1 + 3*x^2", "0"], ["-2*x*xi", "1 + x^2"]]
    checks = bundle_cocycle_check(T)
    assert passed(checks) and any(c.name == "pair A,B" for c in checks)


def test_perturbed_transition_fails_with_residual():
    T = corpus("tangent_line.gvb").bundle("TM")
    sig = T.atlas.chart("A").sig
    bad = T.transitions[("A", "B")].entries
    x = parse_function("x", sig, T.W)
    moved = [[bad[0][0] + x, bad[0][1]], list(bad[1])]
    trans = dict(T.transitions)
    trans[("A", "B")] = GradedMatrix(T.degrees, T.degrees, moved, sig, T.W)
    broken = Bundle("broken", T.atlas, T.fiber, trans)
    fails = [c for c in bundle_cocycle_check(broken) if not c.passed]
    assert fails and "x" in fails[0].residual


def test_linear_rescaling_gives_half():
    w = ws("""
    manifold L {
      chart A { coords: x:0 ; base: x }
      chart B { coords: y:0 ; base: y }
      overlap A B { y = 2*x | inverse: x = y/2 }
    }
    bundle T = tangent L
    bundle D = dual T
    """)
    assert w.bundle("T").transition("A", "B").rendered() == [["2"]]
    assert w.bundle("D").transition("A", "B").rendered() == [["1/2"]]


def test_dual_construction():
    E = corpus("battery.gvb").bundle("E")
    D = dual_bundle(E)
    assert D.rank() == gdim_dual(E.rank())
    assert passed(bundle_cocycle_check(D))
    DD = dual_bundle(D)
    assert DD.fiber == E.fiber
    for p, T in E.transitions.items():
        assert DD.transitions[p] == parity_conjugate(T)


def test_shift_keeps_matrices():
    E = corpus("battery.gvb").bundle("E")
    for l in (-2, 1, 3):
        S = shift_bundle(E, l)
        assert S.rank() == gdim_shift(E.rank(), l)
        assert all(S.transitions[p].entries == E.transitions[p].entries for p in E.transitions)
        back = shift_bundle(S, -l)
        assert back.fiber == E.fiber
        assert all(back.transitions[p].entries == E.transitions[p].entries for p in E.transitions)


def test_tensor_and_sum():
    w = corpus("battery.gvb")
    E, F, T = w.bundle("E"), w.bundle("F"), w.bundle("TM")
    for X, Y in ((E, F), (E, T), (T, T)):
        P = tensor_bundle(X, Y)
        assert P.rank() == gdim_convolve(X.rank(), Y.rank())
        assert passed(bundle_cocycle_check(P))
    S = direct_sum(E, F)
    assert S.rank().total() == 3 and passed(bundle_cocycle_check(S))


def test_tensor_with_trivial_line_is_identity():
    w = ws("""
    manifold M {
      chart A { coords: x:0, xi:1 ; base: x }
      chart B { coords: y:0, eta:1 ; base: y }
      overlap A B { y = 1/x ; eta = xi/x^2 | inverse: x = 1/y ; xi = eta/y^2 }
    }
    bundle O over M { fiber: o:0 ; transition A B = [[1]] }
    bundle TM = tangent M
    bundle X = tensor TM O
    """)
    X, T = w.bundle("X"), w.bundle("TM")
    for p in T.transitions:
        assert X.transitions[p].entries == T.transitions[p].entries


def test_pullback_example():
    w = corpus("pullback.gvb")
    P = w.bundle("PE")
    assert passed(basemap_check(w.map("phi")))
    assert P.rank() == w.bundle("E").rank()
    assert passed(bundle_cocycle_check(P))
    assert P.transition("P", "Q").rendered() == [["s", "0"], ["0", "s^2"]]


def test_pullback_along_constant_map():
    w = ws("""
    manifold L {
      chart A { coords: u:0 ; base: u }
      chart B { coords: v:0 ; base: v }
      overlap A B { v = 1/u | inverse: u = 1/v }
    }
    bundle E over L { fiber: k:0 ; transition A B = [[u^2 + 1]] }
    manifold S {
      chart P { coords: s:0, th:1 ; base: s }
      chart Q { coords: t:0, om:1 ; base: t }
      overlap P Q { t = s + 1 ; om = th | inverse: s = t - 1 ; th = om }
    }
    map c : S -> L { P -> A { u = 2 } Q -> B { v = 1/2 } }
    bundle CE = pullback E c
    """)
    T = w.bundle("CE").transition("P", "Q")
    assert T.rendered() == [["5"]]
    assert passed(bundle_cocycle_check(w.bundle("CE")))


@pytest.mark.parametrize("seed", range(10))
def test_pullback_random_instances(seed):
    rng = random.Random(seed)
    a, b = rng.randint(1, 3), rng.choice([-2, -1, 1, 2])
    n = rng.randint(1, 3)
    w = ws(f"""
    manifold L {{
      chart A {{ coords: u:0, z:1 ; base: u }}
      chart B {{ coords: v:0, w:1 ; base: v }}
      overlap A B {{ v = 1/u ; w = z/u^2 | inverse: u = 1/v ; z = w/v^2 }}
    }}
    bundle E over L {{
      fiber: k:0, l:1 ;
      transition A B = [[u^{a}, 0], [{b}*z*u, u^{n}]]
    }}
    manifold S {{
      chart P {{ coords: s:0, th:1 ; base: s }}
      chart Q {{ coords: t:0, om:1 ; base: t }}
      overlap P Q {{ t = 1/s ; om = th/s | inverse: s = 1/t ; th = om/t }}
    }}
    map phi : S -> L {{
      P -> A {{ u = {a}*s ; z = {b}*th }}
      Q -> B {{ v = t/{a} ; w = {b}*t*om/{a}^2 }}
    }}
    bundle PE = pullback E phi
    """)
    assert passed(basemap_check(w.map("phi")))
    E, P = w.bundle("E"), w.bundle("PE")
    assert passed(bundle_cocycle_check(E))
    assert P.rank() == E.rank()
    assert passed(bundle_cocycle_check(P))


def test_morphism_checks():
    w = corpus("battery.gvb")
    assert passed(morphism_check(w.morphism("I")))
    bad = ws("""
    manifold M {
      chart A { coords: x:0 ; base: x }
      chart B { coords: y:0 ; base: y }
      overlap A B { y = 1/x | inverse: x = 1/y }
    }
    bundle E over M { fiber: k:0 ; transition A B = [[x]] }
    morphism F : E -> E { A = [[x]] ; B = [[1]] }
    """)
    fails = [c for c in morphism_check(bad.morphism("F")) if not c.passed]
    assert fails


def test_counterexample_line_ranks():
    w = corpus("counterexample_line.gvb")
    F = w.morphism("F")
    assert classify_at(F, "A", {"x": 0})["rank"] == {"0": 0}
    for v in (1, -1):
        info = classify_at(F, "A", {"x": v})
        assert info["rank"] == {"0": 1} and info["iso"]


def test_xi_dxi_counterexample():
    w = corpus("xi_dxi.gvb")
    F = w.morphism("F")
    assert passed(morphism_check(F))
    M = F.matrix("A")
    assert not M.is_zero()
    for v in (-2, -1, 0, 1, 2):
        info = classify_at(F, "A", {"x": Fraction(v)})
        assert all(r == 0 for r in info["rank"].values())
        assert image_defect(M, {"x": Fraction(v)})


def test_zero_body_degree_zero_entry_has_rank_zero():
    w = ws("""
    manifold M { chart A { coords: x:0, th:-1, xi:1 ; base: x } }
    bundle E over M { fiber: k:0 }
    morphism F : E -> E { A = [[th*xi]] }
    """)
    assert classify_at(w.morphism("F"), "A", {"x": 3})["rank"] == {"0": 0}


def test_isomorphism_has_no_image_defect():
    w = corpus("tangent_line.gvb")
    T = w.bundle("TM")
    from gvbundle.bundle import BundleMorphism
    from gvbundle.matrix import identity

    Phi = BundleMorphism("id", T, T, {A: identity(T.degrees, c.sig, T.W) for A, c in T.atlas.charts.items()})
    assert passed(morphism_check(Phi))
    assert classify_at(Phi, "A", {"x": 1})["iso"]
    assert image_defect(Phi.matrix("A"), {"x": 1}) == []
