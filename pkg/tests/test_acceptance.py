"""One check per acceptance criterion; each prints a PASS/FAIL line with its timing."""
import dataclasses
import math
import time

import pytest
from scipy import stats as sps

import modal
import oracles
from bhl.kripke.model import Counterexample, Holds, build_model, judgment_holds
from bhl.kripke.scenario import load_scenario
from bhl.proof import check_proof, load_proof
from bhl.stats.build import build_test
from bhl.stats.testdefs import p_value
from bhl.syntax.parser import parse_document, parse_formula
from bhl.syntax.printer import show_formula
from conftest import corpus

GOLDEN = ("c_drug.bhl", "c_multi.bhl", "eg7_ztest.bhl", "eg8_lrt.bhl", "hack_ok.bhl")


@pytest.fixture
def report(capsys):
    def emit(n, title, ok, elapsed, limit, detail):
        within = elapsed < limit
        verdict = "PASS" if ok and within else "FAIL"
        with capsys.disabled():
            print(f"\n[criterion {n}] {verdict} {title}: {detail} "
                  f"({elapsed:.2f} s, limit {limit:g} s)")
        assert ok, detail
        assert within, f"took {elapsed:.2f} s, limit {limit:g} s"
    return emit


def z_test():
    return build_test(parse_document(oracles.Z_DECLS).sig, "Z")


def test_c1_z_kernel(report):
    t0 = time.perf_counter()
    z = z_test()
    root2 = math.sqrt(2.0)

    def p_at(t):
        # one observation per sample with sigma = 1 gives T = (y1 - y2) / sqrt(2)
        return p_value(z, ((t * root2,), (0.0,))).value

    p196, p3, p18 = p_at(1.96), p_at(3.0), p_at(1.8)
    # independent route: survival function of the standard normal
    ref196 = 2 * sps.norm.sf(1.96)
    ok = (abs(p196 - 0.05) <= 1e-3 and abs(p196 - ref196) <= 1e-12
          and p3 < 0.05 and p18 > 0.05)
    report(1, "Z-test kernel", ok, time.perf_counter() - t0, 1.0,
           f"p(1.96) = {p196:.6f} (reference {ref196:.6f}), p(3) = {p3:.5f}, "
           f"p(1.8) = {p18:.5f}")


def test_c2_combination_bounds(report):
    t0 = time.perf_counter()
    worst_d, worst_c = oracles.combination_fuzz(1000, seed=3)
    ok = worst_d <= 1e-12 and worst_c <= 1e-12
    report(2, "combination bounds", ok, time.perf_counter() - t0, 1.0,
           f"1000 pairs, max(p_or - (p1 + p2)) = {worst_d:.3g}, "
           f"max(p_and - min(p1, p2)) = {worst_c:.3g}")


def test_c3_golden_proofs(report):
    t0 = time.perf_counter()
    reps = {n: check_proof(corpus(n)) for n in GOLDEN}
    drug = show_formula(reps["c_drug.bhl"].conclusion.post)
    multi = show_formula(reps["c_multi.bhl"].conclusion.post)
    ok = (all(r.accepted and not r.assumed for r in reps.values())
          and "Belief[<= min(a12, a13); ((y1, y2), (y1, y3)); zconj]" in drug
          and "Belief[<= a12 + a13; ((y1, y2), (y1, y3)); zdisj]" in multi)
    summary = ", ".join(f"{n.split('.')[0]} {r.verdict}/{len(r.assumed)} assumed"
                        for n, r in reps.items())
    report(3, "golden proofs", ok, time.perf_counter() - t0, 5.0, summary)


def test_c3_soundness_smoke(report):
    """Accepted proofs without assumptions hold on every scenario over their declarations."""
    t0 = time.perf_counter()
    scenarios = [load_scenario(corpus(n)) for n in modal.SCENARIOS]
    checked, bad = 0, []
    for name in GOLDEN:
        script = load_proof(corpus(name))
        rep = check_proof(script)
        if not rep.accepted or rep.assumed:
            continue
        j = rep.conclusion
        for sc in (s for s in scenarios if s.sig == script.sig):
            res = judgment_holds(build_model(dataclasses.replace(sc, program=None)),
                                 j.pre, j.prog, j.post)
            checked += 1
            if not isinstance(res, Holds):
                bad.append((name, sc.name))
    report(3, "soundness smoke test", checked >= len(GOLDEN) and not bad,
           time.perf_counter() - t0, 5.0, f"{checked} proof/scenario pairs, counterexamples {bad}")


def test_c4_p_hacking(report):
    t0 = time.perf_counter()
    sc = load_scenario(corpus("hack.scn"))
    pre = parse_formula("sampled(y1, Normal(m1, 1.0), 5) and sampled(y2, Normal(m2, 1.0), 5) "
                        "and P(alt(y1, z1) or alt(y2, z1)) and kappa{}", sc.sig)
    post = parse_formula("Belief[<= a; y1; z1; kappa{(y1, z1)}] alt(y1, z1) or "
                         "Belief[<= a; y2; z1; kappa{(y2, z1)}] alt(y2, z1)", sc.sig)
    res = judgment_holds(build_model(dataclasses.replace(sc, program=None)), pre, sc.program,
                         post)
    refuted = isinstance(res, Counterexample)
    runs = sorted(d for (d, t), n in res.world.history.items() for _ in range(n)) if refuted else []
    both = refuted and len(runs) == 2 and runs[0] != runs[1]
    rep = check_proof(corpus("hack_bad.bhl"))
    rejected = rep.verdict == "Rejected" and rep.reason.startswith("Hist shape mismatch")
    report(4, "p-hacking detection", both and rejected, time.perf_counter() - t0, 5.0,
           f"judgment refuted: {refuted}, tests in counterexample history: {len(runs)}; "
           f"hack_bad.bhl {rep.verdict} at {rep.path} (line {rep.line})")


def test_c5_wp_oracle(report):
    t0 = time.perf_counter()
    n, checks, bad, holds = oracles.wp_agreement(500, seed=0)
    report(5, "wp oracle equivalence", n >= 500 and not bad, time.perf_counter() - t0, 60.0,
           f"{n} programs, {checks} world checks ({holds} with wp true), "
           f"{len(bad)} disagreements")


def test_c6_par_seq_exchange(report):
    t0 = time.perf_counter()
    n, checks, bad = oracles.par_agreement(200, seed=0)
    report(6, "Par/Seq exchange", n >= 200 and not bad, time.perf_counter() - t0, 30.0,
           f"{n} programs, {checks} interleaved finals, {len(bad)} disagreements")


def test_c7_modal_suite(report):
    t0 = time.perf_counter()
    results = [modal.run_suite(load_scenario(corpus(n))) for n in modal.SCENARIOS]
    checked = sum(r["checked"] for r in results)
    violations = [v for r in results for v in r["violations"]]
    report(7, "modal property suite", checked > 0 and not violations,
           time.perf_counter() - t0, 60.0,
           f"{len(results)} scenarios, {checked} validity checks, {len(violations)} violations")


def test_c8_null_calibration(report):
    t0 = time.perf_counter()
    r = oracles.null_calibration(10_000, seed=2024)
    (rz, _), (rd, sd), (ru, su) = r["z"], r["disj"], r["union"]
    ok = abs(rz - 0.05) <= 0.01 and rd <= 0.1 + 3 * sd and ru <= 0.1 + 3 * su
    report(8, "Monte-Carlo calibration", ok, time.perf_counter() - t0, 120.0,
           f"Z rejection rate {rz:.4f}; disjunctive combination {rd:.4f} by its p-value, "
           f"{ru:.4f} by either component (bound {0.1 + 3 * su:.4f})")
