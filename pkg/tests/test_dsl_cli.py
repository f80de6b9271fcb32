import io
import json
import os
import subprocess
import sys

import pytest
from hypothesis import given, strategies as st

from gvbundle.cli import run
from gvbundle.dsl import DslError, parse_text
from helpers import CORPUS, corpus_files, ws


def cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def path(name):
    return os.path.join(CORPUS, name)


# -- reader ----------------------------------------------------------------------------

@pytest.mark.parametrize("name", corpus_files())
def test_corpus_round_trip(name):
    with open(path(name), encoding="utf-8") as fh:
        first = parse_text(fh.read(), name)
    text = first.to_dsl()
    second = parse_text(text, name)
    assert second.to_dsl() == text
    assert list(second.order) == list(first.order)
    for b in first.bundles:
        assert second.bundles[b].fiber == first.bundles[b].fiber
        for p, T in first.bundles[b].transitions.items():
            assert second.bundles[b].transitions[p] == T


def test_error_positions():
    with pytest.raises(DslError) as err:
        ws("manifold M {\n  chart A { coords: x:0 ; base: x }\n  chart B { coords y:0 }\n}\n")
    assert (err.value.line, err.value.col) == (3, 20)
    with pytest.raises(DslError) as err:
        ws("manifold M {\n  chart A { coords: x:0, xi:1 ; base: x }\n}\nfunction f on M { A = x + zz }\n")
    assert (err.value.line, err.value.col) == (4, 27)
    assert "zz" in str(err.value)
    with pytest.raises(DslError) as err:
        ws("manifold M { chart A { coords: x:0 ; base: x } }\nbundle E over N { fiber: k:0 }\n")
    assert "unknown manifold 'N'" in str(err.value) and err.value.line == 2


def test_degree_errors_name_the_entry():
    with pytest.raises(DslError) as err:
        ws("manifold M { chart A { coords: x:0, xi:1 ; base: x } }\n"
           "bundle E over M { fiber: k:0, l:1 }\n"
           "morphism F : E -> E { A = [[1, xi], [0, 1]] }\n")
    assert "degree 1, expected -1" in str(err.value) and err.value.line == 3


def test_comments_and_whitespace_insensitive():
    a = ws("manifold M{chart A{coords:x:0,xi:1;base:x}}bundle E over M{fiber:k:0}")
    b = ws("# c\nmanifold   M {  # trailing\n chart A {\n coords: x : 0 , xi : 1 ;\n base : x\n }\n}\n\nbundle E over M {\n fiber: k:0\n}\n")
    assert a.to_dsl() == b.to_dsl()


def test_duplicate_declaration():
    with pytest.raises(DslError, match="duplicate"):
        ws("manifold M { chart A { coords: x:0 ; base: x } }\nmanifold M { chart A { coords: x:0 ; base: x } }")


exprs = st.sampled_from(["x", "xi*p", "x^2 + 1", "1/(x + 2)", "3*x*xi*p", "(1 - x)*xi*p/(x^2 + 1)"])


@given(st.lists(exprs, min_size=1, max_size=3))
def test_function_block_round_trip(parts):
    body = " + ".join(p for p in parts if p in ("x", "x^2 + 1", "1/(x + 2)")) or "0"
    odd = " + ".join(p for p in parts if "xi" in p) or "0"
    text = (
        "manifold P { chart U { coords: x:0, xi:1, p:-1 ; base: x } }\n"
        f"function f on P {{ U = {body} }}\nfunction g on P {{ U = {odd} }}\n"
    )
    once = ws(text).to_dsl()
    assert ws(once).to_dsl() == once


# -- commands ------------------------------------------------------------------------------

def test_check_cocycle_tangent_line():
    code, out, _ = cli("check-cocycle", path("tangent_line.gvb"))
    assert code == 0
    rep = json.loads(out)
    assert rep["command"] == "check-cocycle" and rep["weight"] == 8
    names = [c["name"] for c in rep["checks"]]
    assert "TM: pair A,B" in names and all(c["pass"] for c in rep["checks"])
    assert set(rep) == {"command", "weight", "checks", "data"}
    assert all(set(c) == {"name", "pass", "residual"} for c in rep["checks"])


def test_classify_xi_dxi_at_origin():
    code, out, _ = cli("classify", path("xi_dxi.gvb"), "--point", "x=0")
    assert code == 0
    rep = json.loads(out)
    assert rep["data"]["samples"][0]["rank"] == {"0": 0, "1": 0}
    assert any("image is not a subbundle" in w for w in rep["data"]["warnings"])


def test_classify_line_counterexample():
    rep = json.loads(cli("classify", path("counterexample_line.gvb"))[1])
    ranks = [s["rank"]["0"] for s in rep["data"]["samples"]]
    assert ranks == [0, 1, 1]
    assert rep["data"]["constant_rank"] is False


def test_euler_check_linear():
    code, out, _ = cli("euler-check", path("trivial.gvb"), "--function", "f")
    assert code == 0 and json.loads(out)["data"]["linear"] is True


def test_euler_check_nonlinear(tmp_path):
    p = tmp_path / "q.gvb"
    p.write_text(
        "manifold M { chart A { coords: x:0 ; base: x } }\n"
        "bundle E over M { fiber: k:0, l:1 }\n"
        "function q on E { A = x + k^2 - 2*x*k }\n"
    )
    code, out, _ = cli("euler-check", str(p))
    rep = json.loads(out)
    assert code == 0 and rep["data"]["linear"] is False
    assert sorted(rep["data"]["weight_parts"]["A"]) == ["0", "1", "2"]


def test_weight_flag_recorded_and_guard_order_enforced():
    code, out, _ = cli("check-atlas", path("tangent_cubic.gvb"), "--weight", "6")
    assert code == 0 and json.loads(out)["weight"] == 6
    code, out, _ = cli("check-atlas", path("tangent_cubic.gvb"), "--weight", "10")
    assert code == 1
    assert any(not c["pass"] for c in json.loads(out)["checks"])


@pytest.mark.parametrize("argv", [
    ("check-atlas", "tangent_line.gvb"),
    ("tangent", "tangent_line.gvb"),
    ("dual", "battery.gvb", "--bundle", "E"),
    ("tensor", "battery.gvb", "--bundle", "E", "--with", "TM"),
    ("shift", "battery.gvb", "--bundle", "E", "--by", "-1"),
    ("pullback", "pullback.gvb", "--bundle", "E"),
    ("invert", "battery.gvb", "--point", "x=2"),
    ("check-morphism", "battery.gvb"),
    ("check-section", "tangent_line.gvb"),
    ("value", "tangent_line.gvb", "--section", "dx"),
    ("derive", "tangent_line.gvb", "--function", "g"),
])
def test_commands_pass_on_corpus(argv):
    code, out, err = cli(argv[0], path(argv[1]), *argv[2:])
    assert code == 0, out + err
    assert json.loads(out)["command"] == argv[0]


def test_failing_check_exits_one(tmp_path):
    p = tmp_path / "bad.gvb"
    p.write_text(
        "manifold M {\n chart A { coords: x:0 ; base: x }\n chart B { coords: y:0 ; base: y }\n"
        " overlap A B { y = 1/x | inverse: x = 1/y }\n}\n"
        "bundle E over M { fiber: k:0 ; transition A B = [[x]] ; transition B A = [[y + 1]] }\n"
    )
    code, out, _ = cli("check-cocycle", str(p))
    assert code == 1
    bad = [c for c in json.loads(out)["checks"] if not c["pass"]]
    assert bad and bad[0]["residual"]


def test_singular_inverse_is_a_failed_check(tmp_path):
    p = tmp_path / "sing.gvb"
    p.write_text(
        "manifold M { chart A { coords: x:0 ; base: x } point o in A { x = 1 } }\n"
        "matrix G over M.A { rows: 0 ; cols: 0 ; entries: [[x - 1]] }\n"
    )
    code, out, _ = cli("invert", str(p))
    assert code == 1 and "x" in json.loads(out)["checks"][0]["residual"]


def test_input_errors_exit_two(tmp_path):
    assert cli("check-atlas", str(tmp_path / "missing.gvb"))[0] == 2
    p = tmp_path / "broken.gvb"
    p.write_text("manifold M { chart A { coords: x:0 ; base: x }\n")
    code, _, err = cli("check-atlas", str(p))
    assert code == 2 and "broken.gvb:2:1" in err
    assert cli("check-section", path("tangent_line.gvb"), "--section", "nope")[0] == 2
    assert cli("value", path("tangent_line.gvb"), "--section", "dx", "--point", "x=1/0")[0] == 2


def test_text_format():
    code, out, _ = cli("check-cocycle", path("tangent_line.gvb"), "--format", "text")
    assert code == 0 and out.startswith("check-cocycle (W=8): PASS")


def test_console_entry_point_deterministic():
    cmd = [sys.executable, "-m", "gvbundle", "dual", path("tangent_line.gvb"), "--bundle", "TM"]
    a = subprocess.run(cmd, capture_output=True, check=True).stdout
    b = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert a == b and a.startswith(b"{")
