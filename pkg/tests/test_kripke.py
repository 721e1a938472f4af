import dataclasses
import random

import pytest
from hypothesis import given, settings, strategies as st

import gen
import modal
from bhl.kripke.model import (
    Counterexample, Holds, Model, Valid, build_model, check_valid, judgment_holds, satisfies,
)
from bhl.kripke.scenario import ScenarioError, scenario_from_document
from bhl.syntax.ast import Belief, Const, Hyp, Implies, Kappa, Know, Not
from bhl.syntax.parser import parse_document, parse_formula, parse_program
from conftest import corpus

GEN_SC = scenario_from_document(parse_document(gen.SCENARIO_TEXT + "---\nskip\n"))

HACK_PRE = ("sampled(y1, Normal(m1, 1.0), 5) and sampled(y2, Normal(m2, 1.0), 5) "
            "and P(alt(y1, z1) or alt(y2, z1)) and kappa{}")
HACK_SINGLE = ("Belief[<= a; y1; z1; kappa{(y1, z1)}] alt(y1, z1) or "
               "Belief[<= a; y2; z1; kappa{(y2, z1)}] alt(y2, z1)")


def sc_of(text):
    return scenario_from_document(parse_document(text))


def base(sc):
    return build_model(dataclasses.replace(sc, program=None))


def is_equivalence(model: Model) -> bool:
    ws = model.worlds
    rel = {(a, b) for a in ws for b in model.related(a)}
    refl = all((w, w) in rel for w in ws)
    sym = all((b, a) in rel for a, b in rel)
    trans = all((a, c) in rel for a, b in rel for c in model.related(b))
    return refl and sym and trans


# ---------------------------------------------------------------- building


def test_single_world_model():
    sc = sc_of("obs x : real\ninit x = 1.0\n---\nskip\n")
    m = base(sc)
    assert len(m.worlds) == 1
    w = m.worlds[0]
    assert m.related(w) == (w,)


def test_hidden_parameters_do_not_separate_worlds():
    sc = sc_of("obs a : prob\ninv mu1, mu2 : real\n"
               "dataset y1 ~ Normal(mu1, 1.0), y2 ~ Normal(mu2, 1.0)\n"
               "grid (mu1, mu2) in {(0.0, 0.0), (0.0, 1.0)}\n"
               "data y1 = [0.1, 0.2]\ndata y2 = [0.3, 0.0]\ninit a = 1.0\n---\nskip\n")
    m = base(sc)
    w1, w2 = m.worlds
    assert w2 in m.related(w1)


def test_different_histories_never_related(load):
    m = build_model(load("drugs.scn"))
    for w in m.worlds:
        for v in m.related(w):
            assert v.history == w.history


@pytest.mark.parametrize("name", modal.SCENARIOS)
def test_relation_is_equivalence(load, name):
    assert is_equivalence(build_model(load(name)))


def test_seed_required_for_monte_carlo():
    text = open(corpus("lrt.bhp")).read().replace(", samples=20000, seed=11", "")
    text = text.replace("---", "grid (xi) in {0.0}\ndata y = [0.1]\ninit a = 1.0\n---")
    with pytest.raises(ScenarioError, match="seed"):
        sc_of(text).registry()


# ---------------------------------------------------------------- checking


def test_initial_worlds_satisfy_empty_kappa(load):
    sc = load("drugs.scn")
    m = base(sc)
    assert all(satisfies(m, w, Kappa(())) for w in m.worlds)


def test_belief_after_extreme_statistic():
    # T = 3 in the tested world; related null worlds make the belief non-vacuous
    sc = sc_of(open(corpus("ztest.bhp")).read().replace(
        "---", "grid (mu1, mu2) in {(0.0, 0.0), (0.0, 1.0)}\n"
               f"data y1 = [{3 * 2 ** 0.5!r}]\ndata y2 = [0.0]\ninit a = 1.0\n---"))
    m = build_model(sc)
    f = parse_formula("Belief[< 0.05; (y1, y2); ztest2] alt((y1, y2), ztest2)", sc.sig)
    finals = [w for w in m.worlds if w.history]
    assert finals and all(satisfies(m, w, f) for w in finals)
    strict = parse_formula("Belief[< 0.001; (y1, y2); ztest2] alt((y1, y2), ztest2)", sc.sig)
    assert not any(satisfies(m, w, strict) for w in finals)


def test_tautology_valid():
    m = build_model(GEN_SC)
    f = parse_formula("x < 1.0 or not (x < 1.0)", GEN_SC.sig)
    assert isinstance(check_valid(m, f), Valid)


def test_hack_postcondition_refuted(load):
    sc = load("hack.scn")
    m = build_model(sc)
    f = parse_formula(f"kappa{{(y1, z1), (y2, z1)}} -> ({HACK_SINGLE})", sc.sig)
    res = check_valid(m, f)
    assert isinstance(res, Counterexample)
    assert len(res.world.history) == 2


def test_quantifiers_bounded():
    m = build_model(GEN_SC)
    f = parse_formula("exists i. i = 8", GEN_SC.sig)
    assert check_valid(m, f)
    assert not check_valid(m, parse_formula("exists i. i = 9", GEN_SC.sig))


# ---------------------------------------------------------------- judgments


def test_skip_judgment_holds():
    m = base(GEN_SC)
    psi = parse_formula("K (x < 1.0) and kappa{}", GEN_SC.sig)
    assert isinstance(judgment_holds(m, psi, parse_program("skip"), psi), Holds)


def test_c_drug_judgment_holds(load):
    from bhl.proof.tree import load_proof
    script = load_proof(corpus("c_drug.bhl"))
    sc = load("drugs.scn")
    root = script.root
    res = judgment_holds(base(sc), root.pre, script.program, root.post)
    assert isinstance(res, Holds) and res.checked > 0


def test_single_kappa_claim_after_two_tests_refuted(load):
    sc = load("hack.scn")
    pre = parse_formula(HACK_PRE, sc.sig)
    post = parse_formula(HACK_SINGLE, sc.sig)
    res = judgment_holds(base(sc), pre, sc.program, post)
    assert isinstance(res, Counterexample)
    tested = {t for (_, t), n in res.world.history.items() for _ in range(n)}
    assert sum(res.world.history.values()) == 2 and tested == {"z1"}


def test_missing_null_warning():
    sc = sc_of(open(corpus("ztest.bhp")).read().replace(
        "---", "grid (mu1, mu2) in {(0.0, 1.0)}\ndata y1 = [0.5]\ndata y2 = [0.0]\n"
               "init a = 1.0\n---"))
    m = build_model(sc)
    assert any("null hypothesis" in w for w in m.warnings)


# ---------------------------------------------------------------- modal laws


@pytest.mark.parametrize("name", modal.SCENARIOS)
def test_modal_laws(load, name):
    res = modal.run_suite(load(name))
    assert res["checked"] > 100
    assert res["violations"] == []


@pytest.mark.parametrize("name", ["drugs.scn", "multi.scn", "ztest.scn"])
def test_beliefs_are_contingent(load, name):
    """The laws are not checked only on vacuous beliefs: some belief holds and some fails."""
    sc = load(name)
    m = build_model(sc)
    subjects = [(modal._ref(r), t) for r, t in modal.atomic_subjects(sc.sig)]
    subjects += [(ref, t) for ref, t, _, _ in modal.combined_subjects(sc.sig)]
    truths = []
    for ref, t in subjects:
        for e in modal.EPSILONS:
            b = Belief("<", Const(e), ref, t, Hyp("alt", ref, t))
            truths += [satisfies(m, w, b) for w in m.worlds]
    assert any(truths) and not all(truths)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 9))
def test_s5_on_random_models(seed):
    r = random.Random(seed)
    sc = dataclasses.replace(GEN_SC, program=parse_program(gen.program(r), GEN_SC.sig))
    m = build_model(sc)
    assert is_equivalence(m)
    phi = parse_formula(gen.formula(r), GEN_SC.sig)
    for f in (Implies(Know(phi), phi), Implies(Know(phi), Know(Know(phi))),
              Implies(Not(Know(phi)), Know(Not(Know(phi))))):
        assert check_valid(m, f)
