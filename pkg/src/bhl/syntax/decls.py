"""Declarations: variables, hypothesis tests and the typing environment."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .ast import (
    App, Const, DataRef, Formula, HistKey, Pred, Term, Var, conj, disj,
    is_atomic_ref, format_ref, Not, And,
)
from .errors import DeclError

TYPES = ("bool", "int", "real", "prob", "nat", "list", "pair", "dist")
TAILS = ("two", "upper", "lower")
ATOMIC_KINDS = {"Z": 2, "Z1": 1, "LRT": 1, "BF": 1}
COMBINED_KINDS = ("disj", "conj")


@dataclass(frozen=True)
class VarDecl:
    name: str
    type: str
    visible: bool
    population: Optional[Term] = None  # statistical model of a dataset variable


@dataclass(frozen=True)
class TestDecl:
    id: str
    kind: str
    tail: str = "two"
    params: Tuple[Tuple[str, Term], ...] = ()
    components: Tuple[str, ...] = ()

    def param(self, name: str, default=None):
        for k, v in self.params:
            if k == name:
                return v
        return default

    @property
    def combined(self) -> bool:
        return self.kind in COMBINED_KINDS


@dataclass(frozen=True)
class Env:
    """Typing environment split into invisible and observable parts."""
    inv: Tuple[Tuple[object, str], ...]
    obs: Tuple[Tuple[object, str], ...]

    def type_of(self, key) -> Optional[str]:
        for k, t in self.inv + self.obs:
            if k == key:
                return t
        return None

    def is_observable(self, key) -> bool:
        return any(k == key for k, _ in self.obs)

    def is_invisible(self, key) -> bool:
        return any(k == key for k, _ in self.inv)


def mean_param(population: Term) -> Term:
    if isinstance(population, App) and population.fn == "Normal":
        return population.args[0]
    raise DeclError(f"population {population} has no mean parameter")


@dataclass
class Signature:
    vars: Dict[str, VarDecl] = field(default_factory=dict)
    tests: Dict[str, TestDecl] = field(default_factory=dict)
    histories: Dict[str, List[tuple]] = field(default_factory=dict)
    _universe: Optional[tuple] = field(default=None, repr=False, compare=False)

    # -- declarations
    def declare_var(self, d: VarDecl) -> None:
        if d.type not in TYPES:
            raise DeclError(f"unknown type {d.type!r} for {d.name}")
        if d.name in self.vars:
            raise DeclError(f"variable {d.name} declared twice")
        if d.name in self.tests:
            raise DeclError(f"{d.name} is already a test id")
        self.vars[d.name] = d
        self._universe = None

    def declare_test(self, t: TestDecl) -> None:
        if t.id in self.tests or t.id in self.vars:
            raise DeclError(f"test id {t.id} clashes with an earlier declaration")
        if t.combined:
            if len(t.components) != 2:
                raise DeclError(f"combined test {t.id} needs two components")
            for c in t.components:
                if c not in self.tests:
                    raise DeclError(f"unknown component test {c} in {t.id}")
        elif t.kind not in ATOMIC_KINDS:
            raise DeclError(f"unknown test kind {t.kind}")
        if t.tail not in TAILS:
            raise DeclError(f"unknown tail {t.tail} for test {t.id}")
        self.tests[t.id] = t
        self._universe = None

    def declare_histories(self, test: str, refs: List[tuple]) -> None:
        for r in refs:
            self.check_ref(r, test)
        self.histories[test] = list(refs)
        self._universe = None

    # -- queries
    def is_observable(self, name: str) -> bool:
        d = self.vars.get(name)
        return d is not None and d.visible

    def is_invisible(self, name: str) -> bool:
        d = self.vars.get(name)
        return d is not None and not d.visible

    def datasets(self) -> List[str]:
        return [d.name for d in self.vars.values() if d.visible and d.type == "list"]

    def test(self, tid: str) -> TestDecl:
        try:
            return self.tests[tid]
        except KeyError:
            raise DeclError(f"unknown test id {tid!r}") from None

    def arity(self, tid: str) -> int:
        t = self.test(tid)
        if t.combined:
            return len(t.components)
        return ATOMIC_KINDS[t.kind]

    def atomic_tests(self) -> List[str]:
        return [t.id for t in self.tests.values() if not t.combined]

    def check_ref(self, ref: DataRef, tid: str) -> None:
        t = self.test(tid)
        if t.combined:
            if is_atomic_ref(ref) or len(ref) != 2:
                raise DeclError(
                    f"combined test {tid} expects a pair of references, got {format_ref(ref)}")
            for sub, comp in zip(ref, t.components):
                self.check_ref(sub, comp)
            return
        if not is_atomic_ref(ref):
            raise DeclError(f"test {tid} expects dataset variables, got {format_ref(ref)}")
        if len(ref) != self.arity(tid):
            raise DeclError(
                f"test {tid} takes {self.arity(tid)} dataset(s), got {len(ref)}")
        for v in ref:
            d = self.vars.get(v)
            if d is None or not d.visible or d.type != "list":
                raise DeclError(f"{v} is not a declared dataset variable")

    def hist_universe(self) -> tuple:
        """All history variables: the finite set of (dataset tuple, test) pairs."""
        if self._universe is None:
            keys = []
            ds = self.datasets()
            for tid in self.atomic_tests():
                if tid in self.histories:
                    refs = self.histories[tid]
                else:
                    refs = list(itertools.permutations(ds, self.arity(tid)))
                keys.extend(HistKey(tid, tuple(r)) for r in refs)
            self._universe = tuple(keys)
        return self._universe

    def list_tests(self, ref: DataRef, tid: str) -> list:
        """The multiset ListTests(y, A) as a list of (atomic ref, atomic test)."""
        self.check_ref(ref, tid)
        t = self.test(tid)
        if not t.combined:
            return [(tuple(ref), tid)]
        out = []
        for sub, comp in zip(ref, t.components):
            out.extend(self.list_tests(sub, comp))
        return out

    def env(self) -> Env:
        inv = [(d.name, d.type) for d in self.vars.values() if not d.visible]
        inv += [(k, "nat") for k in self.hist_universe()]
        obs = [(d.name, d.type) for d in self.vars.values() if d.visible]
        return Env(tuple(inv), tuple(obs))

    # -- hypothesis formulas of a test instance
    def tail_parts(self, ref: DataRef, tid: str) -> Tuple[Formula, Formula]:
        """(phi_U, phi_L) of an atomic test applied to ``ref``."""
        t = self.test(tid)
        if t.combined:
            raise DeclError(f"test {tid} is combined and has no tail parts")
        self.check_ref(ref, tid)
        if t.kind == "Z":
            ma = mean_param(self._population(ref[0]))
            mb = mean_param(self._population(ref[1]))
            return Pred(">", (ma, mb)), Pred("<", (ma, mb))
        if t.kind == "Z1":
            m = mean_param(self._population(ref[0]))
            m0 = t.param("mu0", Const(0.0))
            return Pred(">", (m, m0)), Pred("<", (m, m0))
        xi = Var(_param_name(t))
        null, alt = t.param("null"), t.param("alt")
        upper = And((Pred("!=", (xi, null)), Pred("!=", (xi, alt))))
        return upper, Pred("=", (xi, alt))

    def hypothesis(self, kind: str, ref: DataRef, tid: str) -> Formula:
        t = self.test(tid)
        if t.combined:
            a, b = t.components
            fa = self.hypothesis(kind, ref[0], a)
            fb = self.hypothesis(kind, ref[1], b)
            if kind == "alt":
                return disj(fa, fb) if t.kind == "disj" else conj(fa, fb)
            if kind == "nuh":
                return conj(fa, fb) if t.kind == "disj" else disj(fa, fb)
            raise DeclError(f"{kind} is not defined for combined test {tid}")
        upper, lower = self.tail_parts(ref, tid)
        if kind == "upper":
            return upper
        if kind == "lower":
            return lower
        if kind == "nuh":
            return And((Not(upper), Not(lower)))
        if t.tail == "two":
            return disj(upper, lower)
        return upper if t.tail == "upper" else lower

    def model(self, ref: DataRef, tid: str) -> List[Tuple[str, Term]]:
        """Per-dataset statistical model required by an atomic test."""
        t = self.test(tid)
        self.check_ref(ref, tid)
        if t.kind in ("Z", "Z1"):
            sigma = t.param("sigma", Const(1.0))
            var = App("*", (sigma, sigma))
            if isinstance(sigma, Const):
                var = Const(float(sigma.value) ** 2)
            return [(v, App("Normal", (mean_param(self._population(v)), var))) for v in ref]
        xi = Var(_param_name(t))
        cond = App("=", (xi, t.param("null")))
        if t.kind == "LRT":
            dist = App("ite", (cond, t.param("q"), t.param("p")))
        else:
            s2 = t.param("sigma", Const(1.0))
            s2 = Const(float(s2.value) ** 2) if isinstance(s2, Const) else App("*", (s2, s2))
            qp, pp = t.param("q_prior"), t.param("p_prior")
            dist = App("ite", (cond,
                               App("Marginal", (qp.args[0], qp.args[1], s2)),
                               App("Marginal", (pp.args[0], pp.args[1], s2))))
        return [(ref[0], dist)]

    def compds(self, ref: DataRef, tid: str) -> Formula:
        atoms = []
        for sub, comp in self.list_tests(ref, tid):
            for v, dist in self.model(sub, comp):
                atoms.append(Pred("followed", (Var(v), dist)))
        return conj(*atoms)

    def _population(self, v: str) -> Term:
        d = self.vars.get(v)
        if d is None or d.population is None:
            raise DeclError(f"dataset {v} has no declared population model")
        return d.population


def _param_name(t: TestDecl) -> str:
    p = t.param("param")
    if isinstance(p, Var):
        return p.name
    raise DeclError(f"test {t.id} needs a parameter variable (param = ...)")
