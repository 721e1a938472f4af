"""Small-step interpreter for programs over possible worlds."""
from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from typing import List, Optional, Tuple

from ..syntax.ast import (
    Assert, Assign, HistKey, If, Par, Seq, Skip, TestCall, While, format_ref,
)
from ..syntax.decls import Signature
from .values import EvalError, eval_term, ref_value, read, show_value, values_equal
from .world import Cmd, State, World, history_add

log = logging.getLogger(__name__)

DEFAULT_BUDGET = 10 ** 6
BUDGET_ENV = "BHL_BUDGET"


def default_budget() -> int:
    raw = os.environ.get(BUDGET_ENV)
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ValueError(f"{BUDGET_ENV} must be an integer, got {raw!r}") from None
        if n >= 1:
            return n
    return DEFAULT_BUDGET


class ExecError(Exception):
    """Runtime error tagged with the world prefix in which it happened."""

    def __init__(self, message: str, world: Optional[World] = None, cmd=None):
        super().__init__(message)
        self.message = message
        self.world = world
        self.cmd = cmd

    def __str__(self) -> str:
        where = ""
        span = getattr(self.cmd, "span", None)
        if span is not None:
            where = f"{span}: "
        n = len(self.world) if self.world is not None else 0
        return f"{where}{self.message} (after {n} state(s))"


class Machine:
    """Everything execution needs besides the program: declarations and test kernels."""

    def __init__(self, sig: Signature, tests):
        self.sig = sig
        self.tests = tests
        self._warned = set()

    def eval(self, m, e, cmd=None, w=None):
        try:
            return eval_term(m, e, self.tests)
        except EvalError as ex:
            raise ExecError(str(ex), w, cmd) from None

    def visible(self, key) -> bool:
        return isinstance(key, str) and self.sig.is_observable(key)

    def _check_alias(self, m, key: HistKey, data) -> None:
        for other in self.sig.hist_universe():
            if other.test != key.test or other == key or (other, key) in self._warned:
                continue
            try:
                v = ref_value(m, other.data)
            except EvalError:
                continue
            if values_equal(v, data):
                self._warned.add((other, key))
                self._warned.add((key, other))
                log.warning(
                    "datasets %s and %s hold equal values; the test history merges them "
                    "while the counters %s and %s stay separate",
                    format_ref(key.data), format_ref(other.data), key, other)


Config = Tuple[Optional[object], World]


def _append(w: World, memory, cmd, history=None) -> World:
    s = w.current
    return w.extend(State(memory, Cmd(cmd), s.history if history is None else history))


def step(machine: Machine, c, w: World) -> List[Config]:
    """All one-step successors; a successor with command None is terminal."""
    m = w.memory
    if isinstance(c, Skip):
        return [(None, _append(w, m, c))]
    if isinstance(c, Assert):
        return [(None, w)]
    if isinstance(c, Assign):
        v = machine.eval(m, c.expr, c, w)
        return [(None, _append(w, m.updated({c.var: v}), c))]
    if isinstance(c, TestCall):
        key = c.hist_key
        try:
            data = ref_value(m, c.data)
            count = read(m, key)
        except EvalError as ex:
            raise ExecError(str(ex), w, c) from None
        try:
            p = machine.tests.p_value(c.test, data).value
        except ValueError as ex:
            raise ExecError(str(ex), w, c) from None
        machine._check_alias(m, key, data)
        mem = m.updated({c.var: p, key: count + 1})
        return [(None, _append(w, mem, c, history_add(w.history, data, c.test)))]
    if isinstance(c, Seq):
        out = []
        for c1, w1 in step(machine, c.first, w):
            out.append((c.second if c1 is None else Seq(c1, c.second, span=c.span), w1))
        return out
    if isinstance(c, If):
        g = _guard(machine, c, w)
        return [(c.then if g else c.orelse, w)]
    if isinstance(c, While):
        g = _guard(machine, c, w)
        return [(Seq(c.body, c, span=c.span), w)] if g else [(None, w)]
    if isinstance(c, Par):
        out = []
        for c1, w1 in step(machine, c.left, w):
            out.append((c.right if c1 is None else Par(c1, c.right, span=c.span), w1))
        for c2, w2 in step(machine, c.right, w):
            out.append((c.left if c2 is None else Par(c.left, c2, span=c.span), w2))
        return out
    raise ExecError(f"not a command: {c!r}", w)


def _guard(machine: Machine, c, w: World) -> bool:
    g = machine.eval(w.memory, c.cond, c, w)
    if not isinstance(g, bool):
        raise ExecError(f"guard evaluated to {show_value(g)}, not a boolean", w, c)
    return g


@dataclass(frozen=True)
class RunResult:
    finals: tuple
    exhausted: bool
    steps: int


def run(machine: Machine, c, w: World, budget: Optional[int] = None) -> RunResult:
    """All terminal worlds reachable with at most ``budget`` steps on each path."""
    budget = default_budget() if budget is None else budget
    if budget < 1:
        raise ValueError("budget must be at least 1")
    finals: dict = {}
    exhausted = False
    seen = set()
    stack = [(c, w, 0)]
    total = 0
    while stack:
        cmd, world, n = stack.pop()
        if n >= budget:
            exhausted = True
            continue
        succ = step(machine, cmd, world)
        total += 1
        for c1, w1 in reversed(succ):
            if c1 is None:
                finals.setdefault(w1, None)
            elif (c1, w1) not in seen:
                seen.add((c1, w1))
                stack.append((c1, w1, n + 1))
    return RunResult(tuple(finals), exhausted, total)


def run_canonical(machine: Machine, c, w: World, budget: Optional[int] = None) -> RunResult:
    """Deterministic left-first schedule; Par runs as left branch then right branch."""
    budget = default_budget() if budget is None else budget
    if budget < 1:
        raise ValueError("budget must be at least 1")
    cmd, world = c, w
    for n in range(budget):
        cmd, world = step(machine, cmd, world)[0]
        if cmd is None:
            return RunResult((world,), False, n + 1)
    return RunResult((), True, budget)


def execute(machine: Machine, c, w: World, budget: Optional[int] = None,
            interleavings: str = "canonical") -> RunResult:
    if interleavings == "all":
        return run(machine, c, w, budget)
    if interleavings == "canonical":
        return run_canonical(machine, c, w, budget)
    raise ValueError(f"unknown interleaving mode {interleavings}")
