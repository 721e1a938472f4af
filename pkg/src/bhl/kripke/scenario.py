"""Scenarios: finite slices of the universe of possible worlds."""
from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from ..semantics.values import BOTTOM, EvalError, eval_term, show_value
from ..semantics.world import FrozenMap, Init, Sampling, State, World
from ..stats.build import TestRegistry, needs_seed
from ..syntax.ast import App, Const, Term
from ..syntax.decls import Signature
from ..syntax.errors import DeclError
from ..syntax.parser import Document, load_document

DEFAULT_INT_BOUND = 8


class ScenarioError(DeclError):
    pass


@dataclass
class Scenario:
    sig: Signature
    grid: List[Tuple[Tuple[str, ...], list]] = field(default_factory=list)
    data: Dict[str, list] = field(default_factory=dict)  # dataset -> alternative values
    inits: Dict[str, object] = field(default_factory=dict)
    samples: Dict[str, Optional[Term]] = field(default_factory=dict)  # None: no sampling record
    int_bound: int = DEFAULT_INT_BOUND
    budget: Optional[int] = None
    program: object = None
    path: Optional[str] = None
    seed: Optional[int] = None

    @property
    def name(self) -> str:
        return os.path.basename(self.path) if self.path else "<scenario>"

    def registry(self) -> TestRegistry:
        if needs_seed(self.sig) and self.seed is None:
            raise ScenarioError("a seed is required: some test has a Monte-Carlo null")
        return TestRegistry(self.sig, self.seed)

    def grid_points(self) -> List[Dict[str, object]]:
        if not self.grid:
            return [{}]
        out = []
        for combo in itertools.product(*(pts for _, pts in self.grid)):
            point: Dict[str, object] = {}
            for (names, _), vals in zip(self.grid, combo):
                point.update(zip(names, vals))
            out.append(point)
        return out

    def data_choices(self) -> List[Dict[str, object]]:
        names = list(self.data)
        return [dict(zip(names, combo)) for combo in itertools.product(*(self.data[n] for n in names))]

    def initial_worlds(self, tests=None) -> List[World]:
        sig = self.sig
        worlds = []
        for point in self.grid_points():
            for choice in self.data_choices():
                worlds.append(self._initial_world(sig, point, choice, tests))
        if not worlds:
            raise ScenarioError("the scenario has no initial world")
        return worlds

    def _initial_world(self, sig, point, choice, tests) -> World:
        mem: Dict[object, object] = {name: BOTTOM for name in sig.vars}
        for k in sig.hist_universe():
            mem[k] = 0
        mem.update(point)
        for n, v in self.inits.items():
            mem[n] = v
        sampled = []
        for n in sig.datasets():
            if n not in choice:
                continue
            decl = sig.vars[n]
            dist_term = self.samples.get(n, decl.population)
            if dist_term is None:
                mem[n] = choice[n]
            else:
                sampled.append((n, dist_term))
        states = [State(FrozenMap(mem), Init(), FrozenMap())]
        for n, dist_term in sampled:
            try:
                dist = eval_term(mem, dist_term, tests)
            except EvalError as e:
                raise ScenarioError(f"population of {n}: {e}") from None
            mem[n] = choice[n]
            states.append(State(FrozenMap(mem), Sampling(n, choice[n], dist, len(choice[n])),
                                FrozenMap()))
        return World(tuple(states))


def _resolve_csv(t: Term, base: str) -> Term:
    if isinstance(t, App):
        if t.fn == "csv" and isinstance(t.args[0], Const) and isinstance(t.args[0].value, str):
            p = t.args[0].value
            if not os.path.isabs(p):
                p = os.path.join(base, p)
            return App("csv", (Const(p),))
        return App(t.fn, tuple(_resolve_csv(a, base) for a in t.args))
    return t


def _const(t: Term, base: str, what: str):
    try:
        return eval_term({}, _resolve_csv(t, base))
    except EvalError as e:
        raise ScenarioError(f"{what}: {e}") from None


def _dataset(v, name: str) -> tuple:
    if not isinstance(v, tuple) or not v:
        raise ScenarioError(f"data for {name} must be a non-empty list, got {show_value(v)}")
    try:
        return tuple(float(x) if not isinstance(x, tuple) else tuple(float(c) for c in x)
                     for x in v)
    except (TypeError, ValueError):
        raise ScenarioError(f"data for {name} must be numeric") from None


def scenario_from_document(doc: Document, seed: Optional[int] = None,
                           int_bound: Optional[int] = None) -> Scenario:
    sig = doc.sig
    base = os.path.dirname(doc.path) if doc.path else "."
    sc = Scenario(sig, path=doc.path, program=doc.program, seed=seed)
    for d in doc.directives:
        kind = d[0]
        if kind == "int_bound":
            sc.int_bound = d[1]
        elif kind == "budget":
            sc.budget = d[1]
        elif kind == "grid":
            names, points = d[1], d[2]
            for n in names:
                if not sig.is_invisible(n):
                    raise ScenarioError(f"grid variable {n} is not a declared invisible")
            vals = [tuple(_const(t, base, f"grid {n}") for t, n in zip(p, names)) for p in points]
            sc.grid.append((tuple(names), vals))
        elif kind in ("data", "data_in"):
            n = d[1]
            if n not in sig.datasets():
                raise ScenarioError(f"{n} is not a declared dataset")
            terms = [d[2]] if kind == "data" else d[2]
            sc.data[n] = [_dataset(_const(t, base, f"data {n}"), n) for t in terms]
        elif kind == "init":
            n = d[1]
            if n not in sig.vars:
                raise ScenarioError(f"init of undeclared variable {n}")
            sc.inits[n] = _const(d[2], base, f"init {n}")
        elif kind == "sample":
            if d[1] not in sig.datasets():
                raise ScenarioError(f"{d[1]} is not a declared dataset")
            sc.samples[d[1]] = d[2]
        elif kind == "nosample":
            sc.samples[d[1]] = None
    if int_bound is not None:
        sc.int_bound = int_bound
    if sc.int_bound < 0:
        raise ScenarioError("int_bound must be non-negative")
    return sc


def load_scenario(path: str, seed: Optional[int] = None,
                  int_bound: Optional[int] = None) -> Scenario:
    return scenario_from_document(load_document(path), seed, int_bound)
