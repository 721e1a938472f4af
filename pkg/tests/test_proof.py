import dataclasses
import json
import re

import pytest

import oracles
from bhl.kripke.model import Holds, build_model, judgment_holds
from bhl.kripke.scenario import load_scenario
from bhl.proof import (
    DERIVED, RULES, Assumed, DerivationError, Discharged, ProofFormatError, ProofTree, Refuted,
    Scenarios, apply_derived, check_proof, discharge, load_proof, parse_proof,
)
from bhl.semantics.values import eval_term
from bhl.syntax.ast import Belief, HistKey, Kappa, Skip
from bhl.syntax.parser import parse_document, parse_formula, parse_program, parse_term
from bhl.syntax.printer import show_formula, show_term
from bhl.syntax.transform import expand, subst
from conftest import corpus

GOLDEN = ("c_drug.bhl", "c_multi.bhl", "eg7_ztest.bhl", "eg8_lrt.bhl", "hack_ok.bhl")
SCENARIOS = ("drugs.scn", "multi.scn", "hack.scn", "ztest.scn", "lrt.scn")
GEN_SIG = oracles.gen_scenario().sig


def sig_of(name):
    return parse_document(open(corpus(name)).read(), corpus(name)).sig


def rejected(tree, sig):
    try:
        return not check_proof(tree, sig=sig).accepted
    except (ProofFormatError, DerivationError):
        return True


# ---------------------------------------------------------------- golden scripts


@pytest.mark.parametrize("name", GOLDEN)
def test_golden_proofs_accepted(name):
    rep = check_proof(corpus(name))
    assert rep.accepted, rep.to_text()
    assert rep.assumed == []


def test_c_drug_concludes_min_bound():
    rep = check_proof(corpus("c_drug.bhl"))
    post = rep.conclusion.post
    text = show_formula(post)
    assert "Belief[<= min(a12, a13); ((y1, y2), (y1, y3)); zconj]" in text
    via = {s for d in rep.discharged for s in d["schemata"]}
    assert {"BHT", "SB-<"} <= via


def test_c_multi_concludes_sum_bound():
    rep = check_proof(corpus("c_multi.bhl"))
    assert "Belief[<= a12 + a13;" in show_formula(rep.conclusion.post)


def test_hack_bad_rejected_at_hist():
    rep = check_proof(corpus("hack_bad.bhl"))
    assert rep.verdict == "Rejected"
    assert rep.reason.startswith("Hist shape mismatch")
    assert rep.line == 22


def test_one_node_skip():
    psi = parse_formula("K (x < 1.0) and kappa{}", GEN_SIG)
    rep = check_proof(ProofTree("Skip", psi, Skip(), psi), sig=GEN_SIG)
    assert rep.accepted and rep.nodes == 1


def test_skip_with_different_pre_and_post_rejected():
    a, b = parse_formula("x < 1.0", GEN_SIG), parse_formula("x < 2.0", GEN_SIG)
    assert rejected(ProofTree("Skip", a, Skip(), b), GEN_SIG)


def test_reports_are_deterministic():
    sc = load_scenario(corpus("drugs.scn"))
    runs = [check_proof(corpus("c_drug.bhl"), scenario=sc) for _ in range(3)]
    texts = {r.to_text() for r in runs}
    dicts = {json.dumps(r.to_dict(), sort_keys=True, default=str) for r in runs}
    assert len(texts) == 1 and len(dicts) == 1


# ---------------------------------------------------------------- mutation


@pytest.mark.parametrize("name", GOLDEN)
def test_rule_name_mutants_rejected(name):
    text = open(corpus(name)).read()
    survivors = []
    for m in re.finditer(r"rule: ([\w-]+)", text):
        for r in RULES:
            if r == m.group(1):
                continue
            mutant = text[:m.start(1)] + r + text[m.end(1):]
            try:
                rep = check_proof(parse_proof(mutant, corpus(name)))
            except ProofFormatError:
                continue
            if not rep.accepted:
                continue
            # a derived rule is Hist under Conseq; directly under a Conseq whose side
            # condition the schemata can discharge, plain Hist is the same derivation
            equivalent = m.group(1) in DERIVED and r == "Hist"
            if not (equivalent and not rep.assumed
                    and any(d["path"] == "conclusion" for d in rep.model_checked)):
                survivors.append((m.group(1), r))
    assert survivors == []


HIST_POST = "hist(y1, A) = 1 and a <= 0.5 and K (x < 1.0)"
HIST_MUTANTS = (
    "hist(y1, A) + 2 = 1 and A(y1) <= 0.5 and K (x < 1.0)",
    "hist(y1, A) = 1 and A(y1) <= 0.5 and K (x < 1.0)",
    "hist(y1, A) + 1 = 1 and B(y1) <= 0.5 and K (x < 1.0)",
    "hist(y1, A) + 1 = 1 and A(y2) <= 0.5 and K (x < 1.0)",
    "hist(y2, A) + 1 = 1 and A(y1) <= 0.5 and K (x < 1.0)",
    "hist(y1, A) + 1 = 1 and a <= 0.5 and K (x < 1.0)",
)


def test_hist_substitution_mutants_rejected():
    c = parse_program("a := A(y1)", GEN_SIG)
    post = parse_formula(HIST_POST, GEN_SIG)
    good = parse_formula("hist(y1, A) + 1 = 1 and A(y1) <= 0.5 and K (x < 1.0)", GEN_SIG)
    assert check_proof(ProofTree("Hist", good, c, post), sig=GEN_SIG).accepted
    for text in HIST_MUTANTS:
        assert rejected(ProofTree("Hist", parse_formula(text, GEN_SIG), c, post), GEN_SIG), text


def test_updvar_substitution_mutants_rejected():
    c = parse_program("x := z + 1.0", GEN_SIG)
    post = parse_formula("K (x < 2.0) and a <= 0.5", GEN_SIG)
    good = parse_formula("K (z + 1.0 < 2.0) and a <= 0.5", GEN_SIG)
    assert check_proof(ProofTree("UpdVar", good, c, post), sig=GEN_SIG).accepted
    for text in ("K (x < 2.0) and a <= 0.5", "K (z + 2.0 < 2.0) and a <= 0.5",
                 "K (z < 2.0) and a <= 0.5", "K (z + 1.0 < 2.0) and z + 1.0 <= 0.5"):
        assert rejected(ProofTree("UpdVar", parse_formula(text, GEN_SIG), c, post), GEN_SIG), text


def test_hist_on_wrong_variable_type_rejected():
    c = parse_program("x := A(y1)", GEN_SIG)
    post = parse_formula("x < 1.0", GEN_SIG)
    pre = parse_formula("A(y1) < 1.0", GEN_SIG)
    rep = check_proof(ProofTree("Hist", pre, c, post), sig=GEN_SIG)
    assert not rep.accepted and "type side condition" in rep.reason


# ---------------------------------------------------------------- derived rules


def test_two_ht_instance_gives_eg7_judgment():
    sig = sig_of("ztest.bhp")
    c = parse_program("a := ztest2(y1, y2)", sig)
    pre = parse_formula("P(mu1 < mu2) and P(mu1 > mu2) and kappa{}", sig)
    tree = apply_derived("Two-HT", sig, c, pre)
    assert tree.rule == "Conseq" and tree.premises[0].rule == "Hist"
    want = parse_formula("P(mu1 < mu2) and P(mu1 > mu2) and kappa{((y1, y2), ztest2)} "
                         "and Belief[= a; (y1, y2); ztest2] alt((y1, y2), ztest2)", sig)
    assert show_formula(tree.post) == show_formula(want)
    alt = show_formula(expand(parse_formula("alt((y1, y2), ztest2)", sig), sig))
    assert alt == "mu1 > mu2 or mu1 < mu2"
    assert check_proof(tree, sig=sig).accepted


def test_low_ht_instance_gives_eg8_judgment():
    sig = sig_of("lrt.bhp")
    c = parse_program("a := lrt(y)", sig)
    pre = parse_formula("P(lower(y, lrt)) and kappa{}", sig)
    tree = apply_derived("Low-HT", sig, c, pre)
    beliefs = [p for p in tree.post.parts if isinstance(p, Belief)]
    assert len(beliefs) == 1 and beliefs[0].op == "=" and show_term(beliefs[0].eps) == "a"
    assert check_proof(tree, sig=sig).accepted


def test_tail_mismatch():
    sig = sig_of("ztest.bhp")
    c = parse_program("a := ztest2(y1, y2)", sig)
    pre = parse_formula("kappa{}", sig)
    with pytest.raises(DerivationError, match="tail mismatch"):
        apply_derived("Up-HT", sig, c, pre)
    with pytest.raises(DerivationError, match="tail mismatch"):
        apply_derived("Low-HT", sig, c, pre)


def test_freshness_violation_names_variable():
    sig = sig_of("ztest.bhp")
    c = parse_program("a := ztest2(y1, y2)", sig)
    with pytest.raises(DerivationError, match="freshness.*\\ba\\b"):
        apply_derived("Two-HT", sig, c, parse_formula("a <= 0.05 and kappa{}", sig))
    with pytest.raises(DerivationError, match="freshness"):
        apply_derived("Two-HT", sig, c,
                      parse_formula("hist((y1, y2), ztest2) = 0 and kappa{}", sig))


def test_freshness_violation_rejected_in_script():
    text = open(corpus("eg7_ztest.bhl")).read().replace(
        'pre: "P(mu1 < mu2)', 'pre: "a <= 1.0 and P(mu1 < mu2)')
    rep = check_proof(parse_proof(text, corpus("eg7_ztest.bhl")))
    assert not rep.accepted and "freshness" in rep.reason


def test_mult_or_bound_is_sum():
    sig = sig_of("c_hack.bhp")
    c = parse_program("a2 := z1(y2)", sig)
    pre = parse_formula("kappa{(y1, z1)} and Belief[= a1; y1; z1] alt(y1, z1)", sig)
    tree = apply_derived("Mult-or", sig, c, pre, {"test": "zboth"})
    [b] = [p for p in tree.post.parts if isinstance(p, Belief)]
    assert b.op == "<=" and b.test == "zboth"
    assert eval_term({"a1": 0.03, "a2": 0.04}, b.eps) == pytest.approx(0.07, abs=1e-15)
    k = [p for p in tree.post.parts if isinstance(p, Kappa)]
    assert k == [Kappa.of([(("y1",), "z1"), (("y2",), "z1")])]


def test_mult_and_bound_is_min():
    sig = sig_of("c_drug.bhp")
    c = parse_program("a13 := ztest2(y1, y3)", sig)
    pre = parse_formula("kappa{((y1, y2), ztest2)} and "
                        "Belief[= a12; (y1, y2); ztest2] alt((y1, y2), ztest2)", sig)
    tree = apply_derived("Mult-and", sig, c, pre, {"test": "zconj"})
    [b] = [p for p in tree.post.parts if isinstance(p, Belief)]
    assert eval_term({"a12": 0.03, "a13": 0.04}, b.eps) == pytest.approx(0.03)


def test_mult_needs_matching_combination():
    sig = sig_of("c_drug.bhp")
    c = parse_program("a13 := ztest2(y1, y3)", sig)
    pre = parse_formula("kappa{((y1, y2), ztest2)} and "
                        "Belief[= a12; (y1, y2); ztest2] alt((y1, y2), ztest2)", sig)
    with pytest.raises(DerivationError):
        apply_derived("Mult-or", sig, c, pre, {"test": "zconj"})
    with pytest.raises(DerivationError, match="freshness"):
        apply_derived("Mult-and", sig, parse_program("a12 := ztest2(y1, y3)", sig), pre,
                      {"test": "zconj"})


# ---------------------------------------------------------------- discharge


def test_discharge_sbk():
    cond = parse_formula("K alt(y1, A) -> Belief[<= 0.05; y1; A] alt(y1, A)", GEN_SIG)
    res = discharge(cond, "schema(SBk)", GEN_SIG)
    assert isinstance(res, Discharged) and "SBk" in res.schemata


def test_discharge_bht():
    cond = parse_formula("kappa{(y1, A)} -> Belief[= A(y1); y1; A] alt(y1, A)", GEN_SIG)
    res = discharge(cond, "schema(BHT)", GEN_SIG)
    assert isinstance(res, Discharged) and "BHT" in res.schemata


def test_discharge_sb_lt_contrapositive():
    script = load_proof(corpus("c_drug.bhl"))
    sig, defs = script.sig, script.defs
    cond = parse_formula("$psi_ab and a12 > 0.05 -> $post", sig, defs)
    res = discharge(cond, "schema(SB-<)", sig)
    assert isinstance(res, Discharged) and "SB-<" in res.schemata


def test_discharge_refutes_non_theorem():
    cond = parse_formula("Belief[<= 0.05; y1; A] alt(y1, A) -> K alt(y1, A)", GEN_SIG)
    assert isinstance(discharge(cond, "auto", GEN_SIG), Refuted)


def test_discharge_scenario_route():
    sc = load_scenario(corpus("hack.scn"))
    scen = Scenarios(sc)
    bad = parse_formula("kappa{} -> a1 <= 0.5", sc.sig)
    res = discharge(bad, "scenario", sc.sig, scen)
    assert isinstance(res, Refuted) and res.witness
    ok = parse_formula("kappa{} or not kappa{}", sc.sig)
    assert isinstance(discharge(ok, "scenario", sc.sig, scen), Discharged)


def test_discharge_assume_and_bad_directive():
    cond = parse_formula("x < 1.0", GEN_SIG)
    assert isinstance(discharge(cond, "assume", GEN_SIG), Assumed)
    assert isinstance(discharge(cond, "schema(NoSuch)", GEN_SIG), Refuted)
    with pytest.raises(ValueError):
        discharge(cond, "oracle", GEN_SIG)


def test_assumed_side_condition_reported():
    text = open(corpus("eg7_ztest.bhl")).read().replace('"schema(Kmono)"', "assume")
    rep = check_proof(parse_proof(text, corpus("eg7_ztest.bhl")))
    assert rep.accepted and len(rep.assumed) == 1
    assert "ASSUMED" in rep.to_text()


# ---------------------------------------------------------------- substitution


def test_subst_examples():
    sig = parse_document("obs v : real\n---\nskip\n").sig
    f = parse_formula("v = 1", sig)
    assert show_formula(subst(f, {"v": parse_term("2")}, sig)) == "2 = 1"
    g = parse_formula("K (v = 1)", sig)
    assert subst(g, {"v": parse_term("v + 3.0", sig)}, sig) == parse_formula("K (v + 3.0 = 1)", sig)


def test_subst_on_kappa_increments():
    sig = sig_of("hist_only.bhp")
    key = HistKey("A", ("y",))
    k = expand(Kappa.of([(("y",), "A")]), sig)
    got = subst(k, {key: parse_term("hist(y, A) + 1", sig)}, sig)
    assert show_formula(got) == "hist(y, A) + 1 = 1"


# ---------------------------------------------------------------- soundness smoke test


@pytest.mark.parametrize("name", GOLDEN)
def test_accepted_proofs_hold_on_every_matching_scenario(name):
    script = load_proof(corpus(name))
    rep = check_proof(script)
    assert rep.accepted and not rep.assumed
    j = rep.conclusion
    matching = [s for s in map(lambda n: load_scenario(corpus(n)), SCENARIOS)
                if s.sig == script.sig]
    assert matching
    for sc in matching:
        res = judgment_holds(build_model(dataclasses.replace(sc, program=None)),
                             j.pre, j.prog, j.post)
        assert isinstance(res, Holds), (name, sc.name)
