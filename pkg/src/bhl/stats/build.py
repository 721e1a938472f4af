"""Concrete TestDefs from declarations, plus a per-signature registry."""
from __future__ import annotations

import math
from typing import Dict, Optional

import numpy as np

from ..syntax.ast import App, Const, Term
from ..syntax.decls import Signature, TestDecl
from ..syntax.errors import DeclError
from .dists import MarginalDist, NormalDist
from .kernels import log_bayes_factor, log_likelihood_ratio, z1_statistic, z_statistic
from .testdefs import (
    CONJUNCTIVE, DISJUNCTIVE, STD_NORMAL, Empirical, PValue, Tail, TestDef, combine, p_value,
)

DEFAULT_MC_SAMPLES = 20000


class UnsupportedTest(DeclError):
    """A declaration outside the supported closed-form family."""


def const_value(t: Term):
    """Evaluate a closed declaration parameter (numbers and distribution constructors)."""
    if isinstance(t, Const):
        return t.value
    if isinstance(t, App):
        args = [const_value(a) for a in t.args]
        fn = t.fn
        if fn == "neg":
            return -args[0]
        if fn == "+":
            return args[0] + args[1]
        if fn == "-":
            return args[0] - args[1]
        if fn == "*":
            return args[0] * args[1]
        if fn == "/":
            return args[0] / args[1]
        if fn == "sqrt":
            return math.sqrt(args[0])
        if fn == "Normal":
            return NormalDist(float(args[0]), float(args[1]))
        if fn == "Marginal":
            return MarginalDist(float(args[0]), float(args[1]), float(args[2]))
    raise DeclError(f"test parameter {t} is not a closed constant")


def _num_param(d: TestDecl, name: str, default=None) -> float:
    t = d.param(name)
    if t is None:
        if default is None:
            raise DeclError(f"test {d.id} needs parameter {name}")
        return float(default)
    v = const_value(t)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise DeclError(f"parameter {name} of {d.id} must be a number")
    return float(v)


def _normal_param(d: TestDecl, name: str) -> NormalDist:
    t = d.param(name)
    if t is None:
        raise DeclError(f"test {d.id} needs parameter {name}")
    v = const_value(t)
    if not isinstance(v, NormalDist):
        raise UnsupportedTest(
            f"parameter {name} of {d.id} must be a Normal distribution "
            "(only conjugate normal models are supported)")
    return v


def _empirical(d: TestDecl, seed: Optional[int]) -> Empirical:
    n = int(_num_param(d, "samples", DEFAULT_MC_SAMPLES))
    s = d.param("seed")
    if s is not None:
        seed = int(const_value(s))
    return Empirical(n, seed, d.kind)


def _as_array(y) -> np.ndarray:
    return np.asarray(y, dtype=float)


def build_test(sig: Signature, tid: str, seed: Optional[int] = None) -> TestDef:
    d = sig.test(tid)
    if d.combined:
        a, b = (build_test(sig, c, seed) for c in d.components)
        kind = DISJUNCTIVE if d.kind == "disj" else CONJUNCTIVE
        t = combine(kind, a, b, id=tid)
        return TestDef(t.id, t.arity, null=t.null, kind=t.kind, components=t.components, decl=d)
    tail = Tail(d.tail)
    if d.kind == "Z":
        sigma = _num_param(d, "sigma", 1.0)
        if sigma <= 0:
            raise DeclError(f"sigma of {tid} must be positive")

        def stat(data):
            return z_statistic(data[0], data[1], sigma)

        def sampler(rng, data, n):
            n1, n2 = len(data[0]), len(data[1])
            a = rng.normal(0.0, sigma, size=(n, n1)).mean(axis=1)
            b = rng.normal(0.0, sigma, size=(n, n2)).mean(axis=1)
            return (a - b) / (sigma * math.sqrt(1.0 / n1 + 1.0 / n2))

        return TestDef(tid, 2, tail, stat, STD_NORMAL, sampler, decl=d)
    if d.kind == "Z1":
        sigma = _num_param(d, "sigma", 1.0)
        mu0 = _num_param(d, "mu0", 0.0)
        if sigma <= 0:
            raise DeclError(f"sigma of {tid} must be positive")

        def stat(data):
            return z1_statistic(data, mu0, sigma)

        def sampler(rng, data, n):
            k = len(data)
            m = rng.normal(mu0, sigma, size=(n, k)).mean(axis=1)
            return (m - mu0) / (sigma / math.sqrt(k))

        return TestDef(tid, 1, tail, stat, STD_NORMAL, sampler, decl=d)
    if d.kind == "LRT":
        p, q = _normal_param(d, "p"), _normal_param(d, "q")

        def stat(data):
            return log_likelihood_ratio(data, p, q)

        def sampler(rng, data, n):
            sims = q.sample(rng, (n, len(data)))
            return (q.logpdf_array(sims) - p.logpdf_array(sims)).sum(axis=1)

        return TestDef(tid, 1, tail, stat, _empirical(d, seed), sampler, decl=d)
    if d.kind == "BF":
        sigma = _num_param(d, "sigma", 1.0)
        s2 = sigma * sigma
        qp, pp = _normal_param(d, "q_prior"), _normal_param(d, "p_prior")
        qpar, ppar = (qp.mean, qp.var), (pp.mean, pp.var)
        null_pop = MarginalDist(qp.mean, qp.var, s2)

        def stat(data):
            return log_bayes_factor(data, qpar, ppar, s2)

        def sampler(rng, data, n):
            sims = null_pop.sample(rng, (n, len(data)))
            return np.array([log_bayes_factor(row, qpar, ppar, s2) for row in sims])

        return TestDef(tid, 1, tail, stat, _empirical(d, seed), sampler, decl=d)
    raise UnsupportedTest(f"test kind {d.kind} is not supported")


class TestRegistry:
    """TestDefs for every declared test, with p-values memoised per dataset value."""
    __test__ = False

    def __init__(self, sig: Signature, seed: Optional[int] = None):
        self.sig = sig
        self.seed = seed
        self._defs: Dict[str, TestDef] = {}
        self._cache: Dict[tuple, PValue] = {}

    def get(self, tid: str) -> TestDef:
        if tid not in self._defs:
            self._defs[tid] = build_test(self.sig, tid, self.seed)
        return self._defs[tid]

    def p_value(self, tid: str, data) -> PValue:
        key = (tid, data)
        hit = self._cache.get(key)
        if hit is None:
            hit = p_value(self.get(tid), data)
            self._cache[key] = hit
        return hit


def needs_seed(sig: Signature) -> bool:
    return any(t.kind in ("LRT", "BF") and t.param("seed") is None for t in sig.tests.values())
