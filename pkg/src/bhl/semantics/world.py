"""Memories, states, possible worlds and their observation."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping, Optional

from ..syntax.ast import HistKey
from ..syntax.printer import show_program
from .values import BOTTOM, show_value


def _key_order(k):
    return (1, k.test, repr(k.data)) if isinstance(k, HistKey) else (0, k, "")


class FrozenMap(Mapping):
    """Immutable, hashable mapping."""
    __slots__ = ("_d", "_hash")

    def __init__(self, items=()):
        self._d = dict(items)
        self._hash = None

    def __getitem__(self, k):
        return self._d[k]

    def __iter__(self) -> Iterator:
        return iter(self._d)

    def __len__(self) -> int:
        return len(self._d)

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._d.items()))
        return self._hash

    def __eq__(self, other) -> bool:
        if isinstance(other, FrozenMap):
            return self._d == other._d
        return NotImplemented

    def updated(self, changes: Mapping) -> "FrozenMap":
        d = dict(self._d)
        d.update(changes)
        return FrozenMap(d)

    def __repr__(self) -> str:
        return "{" + ", ".join(f"{k}: {show_value(v)}" for k, v in sorted(
            self._d.items(), key=lambda kv: _key_order(kv[0]))) + "}"


# ---------------------------------------------------------------- actions

@dataclass(frozen=True)
class Init:
    def __str__(self) -> str:
        return "init"


@dataclass(frozen=True)
class Sampling:
    """d ~ D^n; ``var`` names the dataset variable the sample is stored in."""
    var: str
    data: tuple
    dist: object
    n: int

    def __str__(self) -> str:
        d = "?" if self.dist is None else str(self.dist)
        return f"{self.var} ~ {d}^{self.n}"


@dataclass(frozen=True)
class Cmd:
    cmd: object

    def __str__(self) -> str:
        return show_program(self.cmd)


# ---------------------------------------------------------------- states and worlds

@dataclass(frozen=True)
class State:
    memory: FrozenMap
    action: object
    history: FrozenMap  # (dataset value, test id) -> multiplicity

    def tests_on(self, data) -> dict:
        return {t: n for (d, t), n in self.history.items() if d == data}


@dataclass(frozen=True)
class World:
    states: tuple
    _hash: Optional[int] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not self.states:
            raise ValueError("a world has at least one state")

    def __hash__(self) -> int:
        h = self._hash
        if h is None:
            h = hash(self.states)
            object.__setattr__(self, "_hash", h)
        return h

    @property
    def current(self) -> State:
        return self.states[-1]

    @property
    def memory(self) -> FrozenMap:
        return self.states[-1].memory

    @property
    def history(self) -> FrozenMap:
        return self.states[-1].history

    def __len__(self) -> int:
        return len(self.states)

    def extend(self, st: State) -> "World":
        return World(self.states + (st,))

    def samplings(self):
        for s in self.states:
            if isinstance(s.action, Sampling):
                yield s.action


def history_add(h: FrozenMap, data, test: str) -> FrozenMap:
    """H ⊎ {data -> {test}}."""
    key = (data, test)
    return h.updated({key: h.get(key, 0) + 1})


# ---------------------------------------------------------------- observation

def observe_state(s: State, visible) -> tuple:
    mem = tuple(sorted(((k, v) for k, v in s.memory.items() if visible(k)),
                       key=lambda kv: _key_order(kv[0])))
    act = s.action
    if isinstance(act, Sampling):
        # the data are observed, the population they came from is not
        act = Sampling(act.var, act.data, None, act.n)
    return (mem, act, s.history)


def observation(w: World, visible) -> tuple:
    """obs(w): invisible variables (history counters included) masked in every state."""
    return tuple(observe_state(s, visible) for s in w.states)


def observed_world(w: World, visible) -> World:
    """obs(w) as a world whose invisible variables read as ⊥."""
    out = []
    for s in w.states:
        mem = FrozenMap({k: (v if visible(k) else BOTTOM) for k, v in s.memory.items()})
        act = s.action
        if isinstance(act, Sampling):
            act = Sampling(act.var, act.data, None, act.n)
        out.append(State(mem, act, s.history))
    return World(tuple(out))


# ---------------------------------------------------------------- trace dump

def trace_lines(w: World) -> list:
    """One line per state: action, memory changes, history changes."""
    lines = []
    prev = None
    for i, s in enumerate(w.states):
        if prev is None:
            diff = {k: v for k, v in s.memory.items() if v is not BOTTOM}
            hdelta = dict(s.history)
        else:
            diff = {k: v for k, v in s.memory.items() if prev.memory.get(k, BOTTOM) != v}
            hdelta = {k: n - prev.history.get(k, 0) for k, n in s.history.items()
                      if prev.history.get(k, 0) != n}
        mem = ", ".join(f"{k}={show_value(v)}" for k, v in sorted(
            diff.items(), key=lambda kv: _key_order(kv[0])))
        hist = ", ".join(f"+{n} {t}[{show_value(d)}]" for (d, t), n in sorted(
            hdelta.items(), key=lambda kv: (kv[0][1], repr(kv[0][0]))))
        lines.append(f"[{i}] {s.action} | {mem or '-'} | {hist or '-'}")
        prev = s
    return lines
