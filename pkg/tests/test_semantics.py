import random

import pytest
from hypothesis import given, settings, strategies as st

import gen
from bhl.kripke.scenario import scenario_from_document
from bhl.semantics.interp import (
    BUDGET_ENV, ExecError, Machine, default_budget, execute, run, run_canonical, step,
)
from bhl.semantics.values import BOTTOM, EvalError, eval_term, load_csv
from bhl.semantics.world import Cmd, World, observed_world
from bhl.syntax.ast import HistKey, Skip
from bhl.syntax.parser import parse_document, parse_program, parse_term
from bhl.syntax.printer import show_program
from conftest import corpus

SC = scenario_from_document(parse_document(gen.SCENARIO_TEXT + "---\nskip\n"))
TESTS = SC.registry()
MACHINE = Machine(SC.sig, TESTS)
WORLDS = SC.initial_worlds(TESTS)


def prog(text):
    return parse_program(text, SC.sig)


def hist_consistent(w: World) -> bool:
    """Every counter equals the multiplicity of its test on the current dataset value."""
    for s in w.states:
        for key in SC.sig.hist_universe():
            data = s.memory[key.data[0]] if len(key.data) == 1 else None
            if data is None:
                continue
            if s.memory[key] != s.history.get((data, key.test), 0):
                return False
    return True


# ---------------------------------------------------------------- terms


def test_eval_examples():
    assert eval_term({"v": 1}, parse_term("v + 1")) == 2
    assert eval_term({}, parse_term("mean([1, 2, 3])")) == 2


def test_eval_p_value_term():
    text = open(corpus("ztest.bhp")).read().replace(
        "---", "grid (mu1, mu2) in {(0.0, 0.0)}\n"
               f"data y1 = [{1.96 * 2 ** 0.5!r}]\ndata y2 = [0.0]\ninit a = 1.0\n---")
    sc = scenario_from_document(parse_document(text, corpus("ztest.bhp")))
    w = sc.initial_worlds(sc.registry())[0]
    p = eval_term(w.memory, parse_term("ztest2(y1, y2)", sc.sig), sc.registry())
    assert p == pytest.approx(0.05, abs=1e-3)


def test_reading_bottom_is_error():
    with pytest.raises(EvalError):
        eval_term({"v": BOTTOM}, parse_term("v + 1"))


def test_load_csv(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("# header\n1.5\n-2\n\n3e-1\n")
    assert load_csv(str(p)) == (1.5, -2.0, 0.3)
    q = tmp_path / "v.csv"
    q.write_text("1,2\n3,4\n")
    assert load_csv(str(q)) == ((1.0, 2.0), (3.0, 4.0))


# ---------------------------------------------------------------- steps


def test_step_skip():
    w = WORLDS[0]
    [(rest, w1)] = step(MACHINE, Skip(), w)
    assert rest is None and len(w1) == len(w) + 1
    assert w1.memory == w.memory and w1.history == w.history
    assert w1.current.action == Cmd(Skip())


def test_step_assign():
    w = WORLDS[0]
    [(_, w1)] = step(MACHINE, prog("x := x + 1.0"), w)
    assert w1.memory["x"] == w.memory["x"] + 1
    assert str(w1.current.action) == "x := x + 1.0"


def test_step_test_call():
    w = WORLDS[0]
    [(_, w1)] = step(MACHINE, prog("a := A(y1)"), w)
    key = HistKey("A", ("y1",))
    assert w1.memory[key] == w.memory[key] + 1
    assert w1.history[(w.memory["y1"], "A")] == 1
    assert w1.memory["a"] == TESTS.p_value("A", w.memory["y1"]).value


def test_run_skip():
    r = run(MACHINE, Skip(), WORLDS[0])
    assert len(r.finals) == 1 and not r.exhausted
    assert len(r.finals[0]) == len(WORLDS[0]) + 1


def test_c_drug_skips_second_comparison(load):
    sc = load("drugs.scn")
    tests = sc.registry()
    m = Machine(sc.sig, tests)
    c = sc.program
    seen = 0
    for w in sc.initial_worlds(tests):
        if tests.p_value("ztest2", (w.memory["y1"], w.memory["y2"])).value <= 0.05:
            continue
        seen += 1
        [final] = run(m, c, w).finals
        assert dict(final.history) == {((w.memory["y1"], w.memory["y2"]), "ztest2"): 1}
    assert seen > 0


def test_observation_masks_invisibles():
    w = WORLDS[0]
    o = observed_world(w, MACHINE.visible)
    assert o.memory["mu"] is BOTTOM
    assert all(s.memory["mu"] is BOTTOM for s in o.states)
    assert o.memory["x"] == w.memory["x"]
    assert all(s.memory[k] is BOTTOM for s in o.states for k in s.memory
               if isinstance(k, HistKey))


def test_observation_only_observables_unchanged():
    sig_text = "obs x : real\n---\nskip\n"
    doc = parse_document(sig_text.replace("---", "init x = 1.0\n---"))
    sc = scenario_from_document(doc)
    w = sc.initial_worlds(sc.registry())[0]
    m = Machine(sc.sig, sc.registry())
    assert observed_world(w, m.visible) == w


def test_budget_exhaustion_is_reported():
    r = run(MACHINE, prog("while true { x := x + 1.0 }"), WORLDS[0], budget=50)
    assert r.exhausted and r.finals == ()
    r = run_canonical(MACHINE, prog("while true { skip }"), WORLDS[0], budget=50)
    assert r.exhausted


def test_budget_env(monkeypatch):
    monkeypatch.setenv(BUDGET_ENV, "123")
    assert default_budget() == 123


def test_runtime_error_on_unset_variable():
    doc = parse_document("obs x, v : real\n---\nskip\n".replace("---", "init x = 1.0\n---"))
    sc = scenario_from_document(doc)
    w = sc.initial_worlds(sc.registry())[0]
    with pytest.raises(ExecError):
        run(Machine(sc.sig, sc.registry()), parse_program("x := v + 1.0", sc.sig), w)


# ---------------------------------------------------------------- properties


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10 ** 9), st.sampled_from(range(len(WORLDS))))
def test_history_invariants(seed, wi):
    c = prog(gen.program(random.Random(seed)))
    w0 = WORLDS[wi]
    for w in run(MACHINE, c, w0).finals:
        assert hist_consistent(w)
        for s0, s1 in zip(w.states, w.states[1:]):
            for key, n in s0.history.items():
                assert s1.history.get(key, 0) >= n


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10 ** 9), st.sampled_from(range(len(WORLDS))))
def test_world_length_counts_basic_commands(seed, wi):
    c = prog(gen.program(random.Random(seed), par=False))
    w0 = WORLDS[wi]
    [w] = run(MACHINE, c, w0).finals
    steps = w.states[len(w0):]
    assert all(isinstance(s.action, Cmd) for s in steps)
    # guards append nothing, so the trace only holds skip, assignments and test calls
    kinds = {type(s.action.cmd).__name__ for s in steps}
    assert kinds <= {"Skip", "Assign", "TestCall"}


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10 ** 9), st.sampled_from(range(len(WORLDS))))
def test_seq_finals_among_par_finals(seed, wi):
    r = random.Random(seed)
    par = prog(gen.par_cmd(r, 2))
    seq = prog(f"{show_program(par.left)}; {show_program(par.right)}")
    w = WORLDS[wi]
    seq_finals = set(run(MACHINE, seq, w).finals)
    par_finals = set(run(MACHINE, par, w).finals)
    assert seq_finals <= par_finals


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10 ** 9), st.sampled_from(range(len(WORLDS))))
def test_interleavings_confluent(seed, wi):
    c = prog(gen.par_cmd(random.Random(seed), 2))
    finals = run(MACHINE, c, WORLDS[wi]).finals
    assert len({(f.memory, f.history) for f in finals}) == 1


def test_execute_modes_agree():
    c = prog("(x := x + 1.0; a := A(y1)) || (z := z * 2.0; b := B(y2))")
    canon = execute(MACHINE, c, WORLDS[0], interleavings="canonical").finals
    every = execute(MACHINE, c, WORLDS[0], interleavings="all").finals
    assert len(canon) == 1 and len(every) > 1
    assert all((f.memory, f.history) == (canon[0].memory, canon[0].history) for f in every)
    with pytest.raises(ValueError):
        execute(MACHINE, c, WORLDS[0], interleavings="random")
