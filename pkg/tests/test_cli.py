import json
import os
import subprocess
import sys

import pytest

from bhl.cli import main

GOLDEN = ("c_drug.bhl", "c_multi.bhl", "eg7_ztest.bhl", "eg8_lrt.bhl", "hack_ok.bhl")


@pytest.fixture
def ex(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["examples", "--dest", "ex"]) == 0
    monkeypatch.chdir(tmp_path / "ex")
    return tmp_path / "ex"


def call(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def as_json(capsys, *argv):
    code, out, _ = call(capsys, *argv, "--format", "json")
    return code, json.loads(out)


# ---------------------------------------------------------------- examples


def test_examples_materialized(ex, capsys):
    names = set(os.listdir(ex))
    assert {"c_drug.bhl", "c_multi.bhl", "c_hack.bhp", "drugs.scn", "y1.csv"} <= names
    (ex / "c_drug.bhl").write_text("edited")
    os.chdir(ex.parent)
    code, out, _ = call(capsys, "examples", "--dest", "ex")
    assert code == 0 and "kept 20 existing" in out
    assert (ex / "c_drug.bhl").read_text() == "edited"
    assert call(capsys, "examples", "--dest", "ex", "--force")[0] == 0
    assert (ex / "c_drug.bhl").read_text() != "edited"


@pytest.mark.parametrize("name", GOLDEN)
def test_every_golden_script_accepted(ex, capsys, name):
    code, out, _ = call(capsys, "check-proof", name)
    assert code == 0 and ": Accepted" in out and "0 assumed" in out


@pytest.mark.parametrize("name", ["drugs.scn", "multi.scn", "hack.scn", "ztest.scn", "lrt.scn"])
def test_every_scenario_runs(ex, capsys, name):
    code, out, _ = call(capsys, "run", name)
    assert code == 0 and "final 1:" in out


# ---------------------------------------------------------------- pvalue


def test_pvalue_near_005(ex, capsys):
    code, out, _ = call(capsys, "pvalue", "--test", "ztest2", "--data", "y1.csv,y2.csv",
                        "--sigma", "1")
    assert code == 0
    p = float(out.rsplit("=", 1)[1])
    assert abs(p - 0.05) < 1e-3


def test_pvalue_json(ex, capsys):
    code, doc = as_json(capsys, "pvalue", "--test", "ztest2", "--data", "y1.csv,y2.csv")
    assert code == 0 and doc["command"] == "pvalue"
    assert doc["statistic"] == pytest.approx(1.96, abs=1e-9)


def test_pvalue_from_declarations(ex, capsys):
    code, doc = as_json(capsys, "pvalue", "--test", "z1", "--data", "y1.csv",
                        "--decls", "c_hack.bhp")
    assert code == 0 and 0 < doc["p_value"] < 1


def test_pvalue_combined_is_usage_error(ex, capsys):
    code, _, err = call(capsys, "pvalue", "--test", "zboth", "--data", "y1.csv",
                        "--decls", "c_hack.bhp")
    assert code == 2 and "bhl: error" in err


def test_pvalue_missing_file(ex, capsys):
    assert call(capsys, "pvalue", "--test", "ztest2", "--data", "nope.csv,y2.csv")[0] == 2


# ---------------------------------------------------------------- wp and vc


def test_wp_prints_substituted_formula(ex, capsys):
    code, out, _ = call(capsys, "wp", "hist_only.bhp", "--post", "kappa{(y, A)}")
    assert code == 0 and "hist(y, A) + 1 = 1" in out


def test_wp_vc_flag(ex, capsys):
    code, out, _ = call(capsys, "wp", "hist_only.bhp", "--post", "kappa{(y, A)}",
                        "--pre", "kappa{}", "--vc")
    assert code == 0 and "kappa{} ->" in out


def test_wp_loop_is_usage_error(tmp_path, capsys):
    f = tmp_path / "loop.bhp"
    f.write_text("obs x : real\n---\nwhile x < 1.0 { x := x + 1.0 }\n")
    assert call(capsys, "wp", str(f), "--post", "x < 2.0")[0] == 2


def test_vc_model_checked(ex, capsys):
    code, out, _ = call(capsys, "vc", "c_drug.bhp", "--pre", "kappa{}",
                        "--post", "hist((y1, y2), ztest2) = 1", "--scenario", "drugs.scn")
    assert code == 0 and "[Valid" in out
    code, out, _ = call(capsys, "vc", "c_drug.bhp", "--pre", "kappa{}",
                        "--post", "kappa{((y1, y2), ztest2)}", "--scenario", "drugs.scn")
    assert code == 1 and "Counterexample" in out


# ---------------------------------------------------------------- model-check


def test_model_check_formula(ex, capsys):
    assert call(capsys, "model-check", "hack.scn", "--formula", "kappa{} or not kappa{}")[0] == 0
    code, out, _ = call(capsys, "model-check", "hack.scn", "--formula", "kappa{}")
    assert code == 1 and "counterexample world" in out


def test_model_check_p_hacking_claim(ex, capsys):
    pre = ("sampled(y1, Normal(m1, 1.0), 5) and sampled(y2, Normal(m2, 1.0), 5) "
           "and P(alt(y1, z1) or alt(y2, z1)) and kappa{}")
    post = ("Belief[<= a; y1; z1; kappa{(y1, z1)}] alt(y1, z1) or "
            "Belief[<= a; y2; z1; kappa{(y2, z1)}] alt(y2, z1)")
    code, doc = as_json(capsys, "model-check", "hack.scn", "--pre", pre, "--post", post)
    assert code == 1
    text = json.dumps(doc)
    assert "z1(y1)" in text and "z1(y2)" in text


def test_model_check_judgment_holds(ex, capsys):
    code, out, _ = call(capsys, "model-check", "ztest.scn", "--pre", "kappa{}",
                        "--post", "kappa{((y1, y2), ztest2)}")
    assert code == 0 and "Holds" in out


# ---------------------------------------------------------------- check-proof


def test_check_proof_c_drug_with_scenario(ex, capsys):
    code, out, _ = call(capsys, "check-proof", "c_drug.bhl", "--scenario", "drugs.scn")
    assert code == 0 and "Accepted" in out


def test_check_proof_hack_bad(ex, capsys):
    code, out, _ = call(capsys, "check-proof", "hack_bad.bhl")
    assert code == 1 and "Rejected" in out and "line 22" in out
    code, doc = as_json(capsys, "check-proof", "hack_bad.bhl")
    assert code == 1 and doc["verdict"] == "Rejected" and doc["line"] == 22


def test_check_proof_malformed(tmp_path, capsys):
    f = tmp_path / "bad.bhl"
    f.write_text("decls: nowhere.bhp\nproof: {rule: Skip}\n")
    assert call(capsys, "check-proof", str(f))[0] == 2


# ---------------------------------------------------------------- plumbing


def test_parse_error_carries_span(tmp_path, capsys):
    f = tmp_path / "bad.bhp"
    f.write_text("obs x : real\n---\nx := := 1\n")
    code, _, err = call(capsys, "run", str(f))
    assert code == 2 and "3:" in err


def test_unknown_subcommand():
    with pytest.raises(SystemExit) as e:
        main(["frobnicate"])
    assert e.value.code == 2


def test_json_output_byte_identical(ex, capsys):
    outs = {call(capsys, "run", "multi.scn", "--interleavings", "all", "--format", "json")[1]
            for _ in range(2)}
    assert len(outs) == 1
    outs = {call(capsys, "check-proof", "eg8_lrt.bhl", "--format", "json")[1] for _ in range(2)}
    assert len(outs) == 1


def test_budget_flag_reports_exhaustion(tmp_path, capsys):
    f = tmp_path / "loop.bhp"
    f.write_text("obs x : real\ninit x = 0.0\n---\nwhile true { x := x + 1.0 }\n")
    _, out, err = call(capsys, "run", str(f), "--budget", "20")
    assert "budget" in (out + err)


def test_console_entry_point(ex):
    r = subprocess.run([sys.executable, "-m", "bhl.cli", "check-proof", "c_multi.bhl"],
                       capture_output=True, text=True, cwd=ex)
    assert r.returncode == 0 and "Accepted" in r.stdout
