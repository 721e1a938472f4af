"""Finite Kripke models and the satisfaction relation."""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from ..semantics.interp import Machine, default_budget, execute, step
from ..semantics.values import EvalError, compare, eval_term, ref_value, values_equal
from ..semantics.world import World, observation
from ..stats.dists import dist_close
from ..syntax.ast import (
    And, Belief, Compds, ExistsInt, FalseF, ForallInt, Hyp, Iff, Implies, IntVar, Kappa, Know,
    Neg, Not, Or, PossBelief, Pred, TrueF,
)
from ..syntax.decls import Signature
from ..syntax.transform import expand_node, test_calls
from .scenario import DEFAULT_INT_BOUND, Scenario

log = logging.getLogger(__name__)


class ModelError(Exception):
    pass


class Model:
    """Worlds plus the observability relation, computed by grouping on observations."""

    def __init__(self, sig: Signature, worlds: Sequence[World], tests,
                 int_bound: int = DEFAULT_INT_BOUND):
        uniq: Dict[World, None] = {}
        for w in worlds:
            uniq.setdefault(w, None)
        if not uniq:
            raise ModelError("a Kripke model needs at least one world")
        self.sig = sig
        self.tests = tests
        self.int_bound = int_bound
        self.worlds: Tuple[World, ...] = tuple(uniq)
        self.machine = Machine(sig, tests)
        self.exhausted = False
        self.warnings: List[str] = []
        self._index = {w: i for i, w in enumerate(self.worlds)}
        self._class_of: List[int] = []
        self._classes: List[Tuple[World, ...]] = []
        groups: Dict[tuple, int] = {}
        for w in self.worlds:
            key = observation(w, self.machine.visible)
            cid = groups.get(key)
            if cid is None:
                cid = len(self._classes)
                groups[key] = cid
                self._classes.append(())
            self._classes[cid] += (w,)
            self._class_of.append(cid)
        self._kcache: Dict[tuple, bool] = {}
        self._xcache: Dict[object, object] = {}

    def __contains__(self, w: World) -> bool:
        return w in self._index

    def related(self, w: World) -> Tuple[World, ...]:
        """R(w): the worlds with the same observation as w."""
        return self._classes[self._class_of[self._index[w]]]

    def class_id(self, w: World) -> int:
        return self._class_of[self._index[w]]

    def relation(self) -> set:
        return {(a, b) for a in self.worlds for b in self.related(a)}

    def extended(self, worlds: Sequence[World]) -> "Model":
        m = Model(self.sig, list(self.worlds) + list(worlds), self.tests, self.int_bound)
        m.exhausted = self.exhausted
        m.warnings = list(self.warnings)
        return m

    def expand(self, f):
        hit = self._xcache.get(f)
        if hit is None:
            hit = expand_node(f, self.sig)
            self._xcache[f] = hit
        return hit


def build_model(sc: Scenario, tests=None, budget: Optional[int] = None,
                interleavings: str = "canonical") -> Model:
    tests = tests if tests is not None else sc.registry()
    init = sc.initial_worlds(tests)
    model = Model(sc.sig, init, tests, sc.int_bound)
    if sc.program is None:
        return model
    finals, exhausted = close_under(model, sc.program, init,
                                    budget if budget is not None else sc.budget, interleavings)
    out = model.extended(finals)
    out.exhausted = exhausted
    warn_missing_nulls(out, sc.program)
    return out


def reachable_model(sc: Scenario, prog, tests=None, budget: Optional[int] = None) -> Model:
    """The scenario's initial worlds plus every world reached part-way through ``prog``.

    Conditions about intermediate program points are checked against this model.
    """
    tests = tests if tests is not None else sc.registry()
    init = sc.initial_worlds(tests)
    machine = Machine(sc.sig, tests)
    limit = budget if budget is not None else (sc.budget or default_budget())
    seen: Dict[World, None] = dict.fromkeys(init)
    exhausted = False
    for w0 in init:
        stack = [(prog, w0, 0)]
        visited = set()
        while stack:
            c, w, n = stack.pop()
            if n >= limit:
                exhausted = True
                continue
            for c1, w1 in step(machine, c, w):
                seen.setdefault(w1, None)
                if c1 is not None and (c1, w1) not in visited:
                    visited.add((c1, w1))
                    stack.append((c1, w1, n + 1))
    model = Model(sc.sig, list(seen), tests, sc.int_bound)
    model.exhausted = exhausted
    return model


def close_under(model: Model, prog, worlds, budget, interleavings) -> Tuple[list, bool]:
    finals = []
    exhausted = False
    for w in worlds:
        r = execute(model.machine, prog, w, budget, interleavings)
        finals.extend(r.finals)
        exhausted |= r.exhausted
    return finals, exhausted


def warn_missing_nulls(model: Model, prog=None, formulas=()) -> List[str]:
    """Warn about used tests whose null hypothesis no world of the model satisfies."""
    used = []
    if prog is not None:
        used += [(c.data, c.test) for c in test_calls(prog)]
    for f in formulas:
        used += _beliefs(f)
    out = []
    for data, tid in dict.fromkeys(used):
        nuh = Hyp("nuh", data, tid)
        try:
            found = any(satisfies(model, w, nuh) for w in model.worlds)
        except (EvalError, ModelError):
            continue
        if not found:
            msg = (f"no world satisfies the null hypothesis of {tid} on {data}; "
                   "beliefs from this test hold vacuously")
            if msg not in model.warnings:
                model.warnings.append(msg)
                log.warning(msg)
            out.append(msg)
    return out


def _beliefs(f) -> list:
    if isinstance(f, (Belief, PossBelief)):
        return [(f.data, f.test)] + _beliefs(f.body)
    if isinstance(f, Neg):
        return [(f.data, f.test)]
    if isinstance(f, (Not, Know)):
        return _beliefs(f.body)
    if isinstance(f, (And, Or)):
        return [x for p in f.parts for x in _beliefs(p)]
    if isinstance(f, (Implies, Iff)):
        return _beliefs(f.left) + _beliefs(f.right)
    if isinstance(f, (ForallInt, ExistsInt)):
        return _beliefs(f.body)
    return []


# ---------------------------------------------------------------- satisfaction


def satisfies(model: Model, w: World, f, interp: Optional[Dict[str, int]] = None) -> bool:
    return _sat(model, w, f, interp or {})


def _sat(M: Model, w: World, f, I) -> bool:
    if isinstance(f, TrueF):
        return True
    if isinstance(f, FalseF):
        return False
    if isinstance(f, Pred):
        return _pred(M, w, f, I)
    if isinstance(f, Neg):
        m = w.memory
        data = ref_value(m, f.data)
        try:
            p = M.tests.p_value(f.test, data).value
        except ValueError as e:
            raise EvalError(str(e)) from None
        return compare(f.op, p, eval_term(m, f.eps, M.tests, I))
    if isinstance(f, Not):
        return not _sat(M, w, f.body, I)
    if isinstance(f, And):
        return all(_sat(M, w, p, I) for p in f.parts)
    if isinstance(f, Or):
        return any(_sat(M, w, p, I) for p in f.parts)
    if isinstance(f, Implies):
        return (not _sat(M, w, f.left, I)) or _sat(M, w, f.right, I)
    if isinstance(f, Iff):
        return _sat(M, w, f.left, I) == _sat(M, w, f.right, I)
    if isinstance(f, Know):
        key = (f, M.class_id(w), tuple(sorted(I.items())))
        hit = M._kcache.get(key)
        if hit is None:
            hit = all(_sat(M, v, f.body, I) for v in M.related(w))
            M._kcache[key] = hit
        return hit
    if isinstance(f, (ForallInt, ExistsInt)):
        vals = (_sat(M, w, f.body, {**I, f.var: n}) for n in range(M.int_bound + 1))
        return all(vals) if isinstance(f, ForallInt) else any(vals)
    if isinstance(f, (Belief, PossBelief, Kappa, Compds, Hyp)):
        return _sat(M, w, M.expand(f), I)
    raise ModelError(f"cannot interpret {f!r}")


def _pred(M: Model, w: World, f: Pred, I) -> bool:
    m = w.memory
    args = [eval_term(m, a, M.tests, I) for a in f.args]
    if f.sym in ("sampled", "followed"):
        for s in w.samplings():
            if not values_equal(s.data, args[0]):
                continue
            if not dist_close(s.dist, args[1], 1e-9):
                continue
            if f.sym == "followed" or values_equal(s.n, args[2]):
                return True
        return False
    return compare(f.sym, args[0], args[1])


# ---------------------------------------------------------------- validity and judgments


@dataclass(frozen=True)
class Valid:
    worlds: int
    note: str = "no counterexample in this finite model"

    def __bool__(self) -> bool:
        return True


@dataclass(frozen=True)
class Counterexample:
    world: World
    interp: dict = field(default_factory=dict)
    initial: Optional[World] = None
    reason: str = ""

    def __bool__(self) -> bool:
        return False


def int_vars(*fs) -> List[str]:
    out: Dict[str, None] = {}

    def walk(f, bound):
        if isinstance(f, Pred):
            for a in f.args:
                _free_int(a, bound, out)
        elif isinstance(f, Neg):
            _free_int(f.eps, bound, out)
        elif isinstance(f, (Not, Know)):
            walk(f.body, bound)
        elif isinstance(f, (And, Or)):
            for p in f.parts:
                walk(p, bound)
        elif isinstance(f, (Implies, Iff)):
            walk(f.left, bound)
            walk(f.right, bound)
        elif isinstance(f, (ForallInt, ExistsInt)):
            walk(f.body, bound | {f.var})
        elif isinstance(f, (Belief, PossBelief)):
            _free_int(f.eps, bound, out)
            walk(f.body, bound)
            if f.kappa is not None:
                walk(f.kappa, bound)
    for f in fs:
        walk(f, frozenset())
    return list(out)


def _free_int(t, bound, out) -> None:
    if isinstance(t, IntVar) and t.name not in bound:
        out.setdefault(t.name, None)
    for a in getattr(t, "args", ()):
        _free_int(a, bound, out)


def interpretations(M: Model, names: List[str]):
    for combo in itertools.product(range(M.int_bound + 1), repeat=len(names)):
        yield dict(zip(names, combo))


def _by_size(M: Model):
    return sorted(M.worlds, key=lambda w: (len(w), M._index[w]))


def check_valid(M: Model, f, env=None) -> object:
    """Valid if every world satisfies f under every bounded interpretation."""
    names = int_vars(f)
    for I in interpretations(M, names):
        for w in _by_size(M):
            if not satisfies(M, w, f, I):
                return Counterexample(w, I, reason="formula false")
    return Valid(len(M.worlds))


@dataclass(frozen=True)
class Holds:
    checked: int
    exhausted: bool = False
    note: str = "no counterexample in this finite model"

    def __bool__(self) -> bool:
        return True


def judgment_holds(M: Model, pre, prog, post, budget: Optional[int] = None,
                   interleavings: str = "canonical"):
    """Partial correctness of {pre} prog {post} on the model closed under prog."""
    base = list(M.worlds)
    finals_of = {}
    exhausted = M.exhausted
    for w in base:
        r = execute(M.machine, prog, w, budget, interleavings)
        finals_of[w] = r.finals
        exhausted |= r.exhausted
    closed = M.extended([v for fs in finals_of.values() for v in fs])
    closed.exhausted = exhausted
    warn_missing_nulls(closed, prog, (pre, post))
    M.warnings[:] = closed.warnings
    names = int_vars(pre, post)
    checked = 0
    for I in interpretations(closed, names):
        for w in sorted(base, key=lambda x: (len(x), closed._index[x])):
            if not satisfies(closed, w, pre, I):
                continue
            checked += 1
            for v in finals_of[w]:
                if not satisfies(closed, v, post, I):
                    return Counterexample(v, I, initial=w, reason="postcondition false")
    return Holds(checked, exhausted)
