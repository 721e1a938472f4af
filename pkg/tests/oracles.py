"""Brute-force oracles for the randomized acceptance checks."""
import dataclasses
import math
import random

import numpy as np

import gen
from bhl.kripke.model import build_model, satisfies
from bhl.kripke.scenario import scenario_from_document
from bhl.semantics.interp import Machine, execute, run
from bhl.stats.build import build_test
from bhl.stats.testdefs import CONJUNCTIVE, DISJUNCTIVE, combine, p_value
from bhl.syntax.parser import parse_document, parse_formula, parse_program
from bhl.syntax.transform import is_loop_free
from bhl.wp import weakest_pre


def gen_scenario():
    return scenario_from_document(parse_document(gen.SCENARIO_TEXT + "---\nskip\n"))


def wp_agreement(n_programs: int, seed: int = 0):
    """Compare w |= wp(C, phi) against 'every final of run(C, w) satisfies phi'.

    Returns (programs, checks, disagreements, holds) where a disagreement records
    the program, formula and initial world index, and ``holds`` counts the checks
    on which the precondition was true.
    """
    sc = gen_scenario()
    sig = sc.sig
    r = random.Random(seed)
    checks, holds, bad = 0, 0, []
    for _ in range(n_programs):
        c = parse_program(gen.program(r, depth=3, tests=2), sig)
        assert is_loop_free(c)
        phi = parse_formula(gen.formula(r, depth=2), sig)
        model = build_model(dataclasses.replace(sc, program=c))
        pre = weakest_pre(c, phi, sig)
        for i, w in enumerate(sc.initial_worlds(model.tests)):
            finals = execute(model.machine, c, w).finals
            lhs = satisfies(model, w, pre)
            rhs = all(satisfies(model, v, phi) for v in finals)
            checks += 1
            holds += lhs
            if lhs != rhs:
                bad.append((str(c), str(phi), i))
    return n_programs, checks, bad, holds


def par_agreement(n_programs: int, seed: int = 0):
    """Every interleaving of a Par program ends with the canonical memory and history."""
    sc = gen_scenario()
    tests = sc.registry()
    machine = Machine(sc.sig, tests)
    worlds = sc.initial_worlds(tests)
    r = random.Random(seed)
    checks, bad = 0, []
    for _ in range(n_programs):
        text = gen.par_cmd(r, r.randrange(1, 4))
        if r.random() < 0.5:
            text = f"{gen.program(r, depth=1, tests=0, par=False)}; {text}"
        c = parse_program(text, sc.sig)
        w = worlds[r.randrange(len(worlds))]
        [canon] = execute(machine, c, w, interleavings="canonical").finals
        finals = run(machine, c, w).finals
        checks += len(finals)
        for f in finals:
            if (f.memory, f.history) != (canon.memory, canon.history):
                bad.append(text)
                break
    return n_programs, checks, bad


Z_DECLS = ("obs a : prob\ninv m1, m2 : real\n"
           "dataset y1 ~ Normal(m1, 1.0), y2 ~ Normal(m2, 1.0)\n"
           "test Z = Z(two, sigma=1.0)\n---\nskip\n")


def null_calibration(trials: int = 10_000, n: int = 10, level: float = 0.05, seed: int = 2024):
    """Rejection rates under the null for the two-tailed Z-test and its disjunctive combination.

    Each trial draws two independent pairs of samples from one population
    (mu1 = mu2), so both component nulls hold.  The combination is measured two
    ways: its own p-value at ``level``, and the union procedure that rejects when
    either component p-value is at most ``level``.  Returns a dict of rates with
    their binomial standard errors.
    """
    sig = parse_document(Z_DECLS).sig
    z = build_test(sig, "Z")
    zd = combine(DISJUNCTIVE, z, z)
    rng = np.random.default_rng(seed)
    rej = {"z": 0, "disj": 0, "union": 0}
    for _ in range(trials):
        a, b, c, d = (tuple(rng.normal(0.0, 1.0, n).tolist()) for _ in range(4))
        p1, p2 = p_value(z, (a, b)).value, p_value(z, (c, d)).value
        rej["z"] += p1 <= level
        rej["disj"] += p_value(zd, ((a, b), (c, d))).value <= level
        rej["union"] += p1 <= level or p2 <= level
    out = {}
    for k, r in rej.items():
        rate = r / trials
        out[k] = (rate, math.sqrt(max(rate * (1 - rate), 1e-12) / trials))
    return out


def combination_fuzz(pairs: int = 1000, seed: int = 0):
    """Max excess of combined p-values over the union and min bounds on fuzzed components."""
    sig = parse_document(Z_DECLS).sig
    z = build_test(sig, "Z")
    zd, zc = combine(DISJUNCTIVE, z, z), combine(CONJUNCTIVE, z, z)
    rng = np.random.default_rng(seed)
    worst_d = worst_c = -math.inf
    for _ in range(pairs):
        shift = rng.uniform(-2, 2, 2)
        ds = [tuple(rng.normal(s, 1.0, rng.integers(1, 8)).tolist())
              for s in (shift[0], 0.0, shift[1], 0.0)]
        d1, d2 = (ds[0], ds[1]), (ds[2], ds[3])
        p1, p2 = p_value(z, d1).value, p_value(z, d2).value
        worst_d = max(worst_d, p_value(zd, (d1, d2)).value - (p1 + p2))
        worst_c = max(worst_c, p_value(zc, (d1, d2)).value - min(p1, p2))
    return worst_d, worst_c
