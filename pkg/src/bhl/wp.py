"""Weakest preconditions and verification conditions."""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple

from .syntax.ast import (
    And, App, Assert, Assign, Const, HistVar, If, Implies, Not, Or, Par, PVal, Seq, Skip,
    TestCall, While,
)
from .syntax.transform import expr_to_formula, subst
from .syntax.errors import BhlError


class WpError(BhlError):
    pass


def hist_subst(c: TestCall) -> dict:
    """{v -> f_A(y), h_{y,A} -> h_{y,A} + 1}, applied simultaneously."""
    key = c.hist_key
    return {c.var: PVal(c.test, c.data), key: App("+", (HistVar(key), Const(1)))}


def weakest_pre(c, post, sig):
    """wp(C, post) for loop-free C; assert annotations are ignored."""
    if isinstance(c, (Skip, Assert)):
        return post
    if isinstance(c, Assign):
        return subst(post, {c.var: c.expr}, sig)
    if isinstance(c, TestCall):
        return subst(post, hist_subst(c), sig)
    if isinstance(c, Seq):
        return weakest_pre(c.first, weakest_pre(c.second, post, sig), sig)
    if isinstance(c, Par):
        # executing the branches in sequence reaches the same final memory and history
        return weakest_pre(Seq(c.left, c.right), post, sig)
    if isinstance(c, If):
        e = expr_to_formula(c.cond)
        return Or((And((e, weakest_pre(c.then, post, sig))),
                   And((Not(e), weakest_pre(c.orelse, post, sig)))))
    if isinstance(c, While):
        raise WpError("wp of a while loop is not computed; annotate the loop with an "
                      "invariant and use vc generation", c.span)
    raise TypeError(f"not a command: {c!r}")


@dataclass(frozen=True)
class VCSet:
    obligations: Tuple[Tuple[str, object], ...]
    residual: object

    def __iter__(self):
        return iter(self.obligations)

    def __len__(self) -> int:
        return len(self.obligations)


def _flat_seq(c) -> List[object]:
    if isinstance(c, Seq):
        return _flat_seq(c.first) + _flat_seq(c.second)
    return [c]


def _seq(cs):
    if not cs:
        return Skip()
    out = cs[-1]
    for x in reversed(cs[:-1]):
        out = Seq(x, out)
    return out


def _structured(c) -> bool:
    """Contains an assert or a loop, so plain wp does not apply."""
    if isinstance(c, (Assert, While)):
        return True
    if isinstance(c, (Seq, Par)):
        a, b = (c.first, c.second) if isinstance(c, Seq) else (c.left, c.right)
        return _structured(a) or _structured(b)
    if isinstance(c, If):
        return _structured(c.then) or _structured(c.orelse)
    return False


def _where(c, what: str) -> str:
    span = getattr(c, "span", None)
    return f"{what}@{span}" if span is not None else what


def _awp(c, post, sig) -> Tuple[object, list]:
    """Annotated wp: a precondition plus the obligations met on the way."""
    if not _structured(c):
        return weakest_pre(c, post, sig), []
    if isinstance(c, Assert):
        return c.formula, [(_where(c, "assert"), Implies(c.formula, post))]
    if isinstance(c, While):
        inv = _invariant(c)
        e = expr_to_formula(c.cond)
        body = vc_list(And((inv, e)), c.body, inv, sig, _where(c, "loop-body"))
        return inv, body + [(_where(c, "loop-exit"), Implies(And((inv, Not(e))), post))]
    if isinstance(c, (Seq, Par)):
        a, b = (c.first, c.second) if isinstance(c, Seq) else (c.left, c.right)
        mid, ob = _awp(b, post, sig)
        pre, oa = _awp(a, mid, sig)
        return pre, oa + ob
    if isinstance(c, If):
        e = expr_to_formula(c.cond)
        p1, o1 = _awp(c.then, post, sig)
        p2, o2 = _awp(c.orelse, post, sig)
        return Or((And((e, p1)), And((Not(e), p2)))), o1 + o2
    raise TypeError(f"not a command: {c!r}")


def _invariant(c: While):
    if c.invariant is None:
        raise WpError("loop without an invariant annotation", c.span)
    return c.invariant


def vc_list(pre, c, post, sig, name: str = "vc") -> list:
    """Hoare-style obligations for {pre} c {post}."""
    if isinstance(c, Par):
        return vc_list(pre, Seq(c.left, c.right), post, sig, name)
    if isinstance(c, Seq):
        items = _flat_seq(c)
        k = max((i for i, x in enumerate(items) if isinstance(x, Assert)), default=None)
        if k is not None:
            a = items[k]
            return (vc_list(pre, _seq(items[:k]), a.formula, sig, name)
                    + vc_list(a.formula, _seq(items[k + 1:]), post, sig, _where(a, "assert")))
        mid, obls = _awp(c, post, sig)
        return [(name, Implies(pre, mid))] + obls
    if isinstance(c, Assert):
        return [(name, Implies(pre, c.formula)), (_where(c, "assert"), Implies(c.formula, post))]
    if isinstance(c, If):
        e = expr_to_formula(c.cond)
        return (vc_list(And((pre, e)), c.then, post, sig, _where(c, "then"))
                + vc_list(And((pre, Not(e))), c.orelse, post, sig, _where(c, "else")))
    if isinstance(c, While):
        inv = _invariant(c)
        e = expr_to_formula(c.cond)
        return ([(name, Implies(pre, inv))]
                + vc_list(And((inv, e)), c.body, inv, sig, _where(c, "loop-body"))
                + [(_where(c, "loop-exit"), Implies(And((inv, Not(e))), post))])
    return [(name, Implies(pre, weakest_pre(c, post, sig)))]


def vc_gen(c, pre, post, sig) -> VCSet:
    """Obligations whose validity establishes {pre} c {post}."""
    residual, _ = _awp(c, post, sig)
    return VCSet(tuple(vc_list(pre, c, post, sig)), residual)
