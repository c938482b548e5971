import io
import json

import pytest

from conftest import fixture_path
from filphin import cli
from filphin import instancegen as ig
from filphin import linvariants as lv
from filphin import phinmod as pm
from filphin.exactlin import Matrix

FIX_A = fixture_path("fix_a.inst")
FIX_B = fixture_path("fix_b.inst")
FIX_DEG = fixture_path("fix_degenerate.inst")


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = cli.main(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def test_validate_ok():
    code, out, _ = run("validate", FIX_A)
    assert code == 0
    assert "admissible" in out and "GB1: undeclared" in out


def test_validate_failure_has_witness(tmp_path):
    bad = pm.mutate(ig.fix_a(), phi=Matrix([[5, 1], [0, 1]]))
    path = tmp_path / "bad.inst"
    ig.write(ig.InstanceFile([ig.PrimeBlock("p5", bad, 1, {})]), path)
    code, out, _ = run("validate", str(path), "--format", "structured")
    assert code == 2
    res = json.loads(out)["results"][0]
    assert not res["ok"]
    assert res["axioms"]["a"]["status"] == "fail" and res["axioms"]["a"]["witness"]
    code, _, err = run("compare", str(path))
    assert code == 2 and "(a)" in err


def test_compare_fix_a_text():
    code, out, _ = run("compare", FIX_A)
    assert code == 0
    assert "L_FM = 7/3" in out and "L_GB = -7/3" in out and "verdict = equal" in out
    assert "step3 scalar c = -1" in out


def test_compare_structured_matches_text():
    _, text, _ = run("compare", FIX_B)
    code, js, _ = run("compare", FIX_B, "--format", "structured")
    d = json.loads(js)
    assert code == 0 and d["format"] == "filphin-report/1"
    assert d["L_GB"] == "2" and d["primes"][0]["L_FM"] == "-2"
    assert d["primes"][0]["L_ops"] == [["-2", "-1"]]
    assert "L_GB = %s" % d["L_GB"] in text and "L_ops[0] = -2, -1" in text


def test_compare_unequal_exit(monkeypatch):
    # a wrong homological ratio must surface as exit 1
    monkeypatch.setattr(lv, "gb_local", lambda M, m, *a, **k: -5)
    code, out, _ = run("compare", FIX_A)
    assert code == 1 and "verdict = unequal" in out and "L_GB = -5" in out


def test_internal_inconsistency_exit(monkeypatch):
    def broken(*a, **k):
        raise lv.Step1MismatchError("class mismatch")

    monkeypatch.setattr(lv, "step1_class", broken)
    code, _, err = run("compare", FIX_A)
    assert code == 3 and "internal inconsistency" in err


def test_mixed_twists_need_alignment():
    code, _, err = run("compare", FIX_A, FIX_B)
    assert code == 2 and "--twist" in err
    code, out, _ = run("compare", FIX_A, FIX_B, "--twist", "2")
    assert code == 0 and "L_GB = -14/3" in out and "prod(-L_FM) = -14/3" in out


def test_each_keeps_input_order():
    code, js, _ = run("compare", FIX_B, FIX_A, "--each", "--format", "structured")
    d = json.loads(js)
    assert code == 0
    assert [r["inputs"] for r in d["reports"]] == [[FIX_B], [FIX_A]]
    assert [r["L_GB"] for r in d["reports"]] == ["2", "-7/3"]


def test_fm_and_gb_commands():
    code, out, _ = run("fm", FIX_B, "--operator", "2")
    assert code == 0 and "L_FM = -2" in out and "L^(2) = -1" in out
    code, out, _ = run("fm", FIX_DEG)
    assert "(degenerate)" in out
    code, out, _ = run("gb", FIX_A)
    assert code == 0 and "L(W) = -7/3" in out and "a = 7/3" in out and "b = -1" in out


def test_cohomology_fix_a():
    code, js, _ = run("cohomology", FIX_A, "--degree", "1", "--format", "structured")
    r = json.loads(js)["results"][0]
    assert code == 0 and r["dim"] == 1 and r["representatives"] == [["0", "1", "0", "0"]]
    code, js, _ = run("cohomology", FIX_A, "--complex", "cris", "--format", "structured")
    assert json.loads(js)["results"][0]["dim"] == 1
    code, js, _ = run("cohomology", FIX_A, "--degree", "0", "--twist", "1", "--format", "structured")
    assert json.loads(js)["results"][0]["dim"] == 0


def test_generate_reproduces_fixture(tmp_path):
    out = tmp_path / "a.inst"
    code, _, _ = run("generate", "--p", "5", "--n", "2", "--e", "1", "--m", "1", "--weights", "0,2",
                     "--L", "7/3", "--seed", "0", "--no-conjugate", "--out", str(out))
    assert code == 0
    with open(FIX_A) as fh:
        assert out.read_text() == fh.read()


def test_generate_rejects_bad_input():
    assert run("generate", "--p", "4", "--n", "2", "--m", "1", "--weights", "0,2", "--L", "1")[0] == 2
    assert run("generate", "--p", "5", "--n", "2", "--m", "1", "--weights", "0,2", "--L", "1/0")[0] == 2
    assert run("generate", "--p", "5", "--n", "2", "--m", "1", "--weights", "0,2", "--L", "0")[0] == 2


@pytest.mark.parametrize("argv", [["compare", "--bogus", "x"], ["frobnicate"], []])
def test_usage_errors(argv):
    assert run(*argv)[0] == 2


def test_missing_and_malformed_files(tmp_path):
    code, _, err = run("compare", str(tmp_path / "nope.inst"))
    assert code == 2 and "nope.inst" in err
    bad = tmp_path / "bad.inst"
    bad.write_text('{"format": "filphin-instance/1", "primes": [}')
    code, _, err = run("validate", str(bad))
    assert code == 2 and "line 1" in err
