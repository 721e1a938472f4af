"""Abstract syntax for programs, terms and assertions.

All nodes are immutable and hashable so they can be used as dictionary keys
(memoisation in the model checker, structural comparison in the proof checker).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union


@dataclass(frozen=True)
class Span:
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


# A data reference names the dataset(s) a test runs on.  An atomic reference is
# a tuple of variable names, e.g. ("y1", "y2").  A reference for a combined test
# is a tuple of sub-references, e.g. (("y1", "y2"), ("y1", "y3")).
DataRef = tuple


def is_atomic_ref(ref: DataRef) -> bool:
    return all(isinstance(x, str) for x in ref)


def ref_vars(ref: DataRef) -> tuple:
    if is_atomic_ref(ref):
        return tuple(ref)
    out: list = []
    for sub in ref:
        out.extend(ref_vars(sub))
    return tuple(out)


def format_ref(ref: DataRef, top: bool = True) -> str:
    if is_atomic_ref(ref):
        if len(ref) == 1 and top:
            return ref[0]
        return "(" + ", ".join(ref) + ")"
    return "(" + ", ".join(format_ref(sub, top=False) for sub in ref) + ")"


@dataclass(frozen=True, order=True)
class HistKey:
    """Key of the history variable h_{y,A}."""
    test: str
    data: tuple

    def __str__(self) -> str:
        return f"hist({format_ref(self.data)}, {self.test})"


# ---------------------------------------------------------------- terms

class Term:
    __slots__ = ()


@dataclass(frozen=True)
class Var(Term):
    name: str


@dataclass(frozen=True)
class IntVar(Term):
    name: str


@dataclass(frozen=True)
class HistVar(Term):
    key: HistKey


@dataclass(frozen=True, eq=False)
class Const(Term):
    value: object

    def _tag(self):
        v = self.value
        return (type(v).__name__, v)

    def __eq__(self, other):
        return isinstance(other, Const) and self._tag() == other._tag()

    def __hash__(self):
        return hash(("Const",) + self._tag())


@dataclass(frozen=True)
class App(Term):
    fn: str
    args: tuple


@dataclass(frozen=True)
class PVal(Term):
    """The p-value procedure f_A applied to a data reference."""
    test: str
    data: tuple


# ---------------------------------------------------------------- formulas

class Formula:
    __slots__ = ()


@dataclass(frozen=True)
class TrueF(Formula):
    pass


@dataclass(frozen=True)
class FalseF(Formula):
    pass


TRUE = TrueF()
FALSE = FalseF()

COMPARISONS = ("=", "!=", "<", "<=", ">", ">=")


@dataclass(frozen=True)
class Pred(Formula):
    sym: str  # a comparison, "sampled" or "followed"
    args: tuple


@dataclass(frozen=True)
class Neg(Formula):
    """Neg^op_{y,A}(eps): the p-value of A on y stands in relation op to eps."""
    op: str
    data: tuple
    test: str
    eps: Term


@dataclass(frozen=True)
class Not(Formula):
    body: Formula


@dataclass(frozen=True)
class And(Formula):
    parts: tuple


@dataclass(frozen=True)
class Or(Formula):
    parts: tuple


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Iff(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Know(Formula):
    body: Formula


@dataclass(frozen=True)
class ForallInt(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class ExistsInt(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class Belief(Formula):
    """Statistical belief K^{op eps}_{y,A} body.

    ``kappa`` is None for the default history formula kappa_{ListTests(y,A)};
    substitution of history counters replaces it with an explicit formula.
    """
    op: str
    eps: Term
    data: tuple
    test: str
    body: Formula
    kappa: Optional[Formula] = None


@dataclass(frozen=True)
class PossBelief(Formula):
    """Statistical possibility: not Belief(not body)."""
    op: str
    eps: Term
    data: tuple
    test: str
    body: Formula
    kappa: Optional[Formula] = None


@dataclass(frozen=True)
class Kappa(Formula):
    """kappa_S; ``pairs`` is the multiset S as a sorted tuple of (data, test)."""
    pairs: tuple

    @staticmethod
    def of(pairs) -> "Kappa":
        return Kappa(tuple(sorted(pairs, key=_pair_key)))


def _pair_key(pair):
    data, test = pair
    return (test, repr(data))


@dataclass(frozen=True)
class Compds(Formula):
    data: tuple
    test: str


HYP_KINDS = ("alt", "nuh", "upper", "lower")


@dataclass(frozen=True)
class Hyp(Formula):
    """Hypothesis formula of a test instance: alternative, null, or a tail part."""
    kind: str
    data: tuple
    test: str


# ---------------------------------------------------------------- programs

class Command:
    __slots__ = ()


def _span():
    return field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Skip(Command):
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Assign(Command):
    var: str
    expr: Term
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class TestCall(Command):
    var: str
    test: str
    data: tuple
    span: Optional[Span] = _span()

    @property
    def hist_key(self) -> HistKey:
        return HistKey(self.test, self.data)


@dataclass(frozen=True)
class Seq(Command):
    first: Command
    second: Command
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Par(Command):
    left: Command
    right: Command
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class If(Command):
    cond: Term
    then: Command
    orelse: Command
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class While(Command):
    cond: Term
    body: Command
    invariant: Optional[Formula] = None
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Assert(Command):
    """Cut-point annotation used by VC generation; executes as a no-op."""
    formula: Formula
    span: Optional[Span] = _span()


Program = Command
Key = Union[str, HistKey]


# ---------------------------------------------------------------- helpers

def conj(*fs: Formula) -> Formula:
    """Flattening conjunction; drops ``true`` and collapses singletons."""
    parts: list = []
    for f in fs:
        if isinstance(f, And):
            parts.extend(f.parts)
        elif isinstance(f, TrueF):
            continue
        else:
            parts.append(f)
    if not parts:
        return TRUE
    if len(parts) == 1:
        return parts[0]
    return And(tuple(parts))


def disj(*fs: Formula) -> Formula:
    parts: list = []
    for f in fs:
        if isinstance(f, Or):
            parts.extend(f.parts)
        elif isinstance(f, FalseF):
            continue
        else:
            parts.append(f)
    if not parts:
        return FALSE
    if len(parts) == 1:
        return parts[0]
    return Or(tuple(parts))


def poss(f: Formula) -> Formula:
    return Not(Know(Not(f)))


def seq_of(*cmds: Command) -> Command:
    """Right-nested sequence."""
    if not cmds:
        return Skip()
    out = cmds[-1]
    for c in reversed(cmds[:-1]):
        out = Seq(c, out)
    return out

