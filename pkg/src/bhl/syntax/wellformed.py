"""Static checks: parallel non-interference, observability, typing, quantifier placement."""
from __future__ import annotations

from typing import Optional

from .ast import (
    And, App, Assert, Assign, Belief, Compds, Const, ExistsInt, ForallInt, Formula,
    HistVar, Hyp, If, Iff, Implies, IntVar, Kappa, Know, Neg, Not, Or, Par, PossBelief,
    Pred, PVal, Seq, Skip, TestCall, Term, Var, While, TrueF, FalseF,
)
from .decls import Signature
from .errors import DeclError, ParInterference, WellFormedError
from .transform import program_vars, term_vars, updated_vars

NUMERIC = ("nat", "int", "real", "prob")


def check_program(c, sig: Optional[Signature] = None) -> None:
    _check_cmd(c, sig)


def _check_cmd(c, sig) -> None:
    if isinstance(c, (Skip, Assert)):
        if isinstance(c, Assert):
            check_formula(c.formula, sig)
        return
    if isinstance(c, Assign):
        _check_target(c.var, c, sig)
        _check_expr(c.expr, c, sig)
        if sig is not None:
            want = sig.vars[c.var].type
            got = term_type(c.expr, sig)
            if got is not None and not assignable(want, got):
                raise WellFormedError(
                    f"cannot assign a {got} value to {c.var} of type {want}", c.span)
        return
    if isinstance(c, TestCall):
        _check_target(c.var, c, sig)
        if sig is not None:
            try:
                sig.check_ref(c.data, c.test)
            except DeclError as e:
                raise WellFormedError(e.message, c.span) from None
            if sig.test(c.test).combined:
                raise WellFormedError("only atomic tests can be called from a program", c.span)
            want = sig.vars[c.var].type
            if want not in ("prob", "real"):
                raise WellFormedError(f"p-value assigned to {c.var} of type {want}", c.span)
            if c.var in c.data:
                raise WellFormedError("a test result cannot overwrite its own dataset", c.span)
        return
    if isinstance(c, (Seq, Par)):
        a, b = (c.first, c.second) if isinstance(c, Seq) else (c.left, c.right)
        _check_cmd(a, sig)
        _check_cmd(b, sig)
        if isinstance(c, Par):
            clash = (updated_vars(a) & program_vars(b)) | (updated_vars(b) & program_vars(a))
            if clash:
                raise ParInterference(clash, c.span)
        return
    if isinstance(c, If):
        _check_guard(c.cond, c, sig)
        _check_cmd(c.then, sig)
        _check_cmd(c.orelse, sig)
        return
    if isinstance(c, While):
        _check_guard(c.cond, c, sig)
        if c.invariant is not None:
            check_formula(c.invariant, sig)
        _check_cmd(c.body, sig)
        return
    raise WellFormedError(f"unknown command {c!r}")


def _check_target(name: str, c, sig) -> None:
    if sig is None:
        return
    d = sig.vars.get(name)
    if d is None:
        raise WellFormedError(f"undeclared variable {name}", c.span)
    if not d.visible:
        raise WellFormedError(f"program assigns invisible variable {name}", c.span)
    if d.type == "list":
        raise WellFormedError(f"program assigns dataset variable {name}", c.span)


def _check_expr(e: Term, c, sig) -> None:
    for node in _subterms(e):
        if isinstance(node, PVal):
            raise WellFormedError(
                "test procedures may only be called as a whole right-hand side", c.span)
        if isinstance(node, (HistVar, IntVar)):
            raise WellFormedError("programs cannot mention history or integer variables", c.span)
    if sig is not None:
        for v in term_vars(e):
            if not sig.is_observable(v):
                raise WellFormedError(f"program reads non-observable variable {v}", c.span)


def _check_guard(e: Term, c, sig) -> None:
    _check_expr(e, c, sig)
    if sig is not None:
        t = term_type(e, sig)
        if t is not None and t != "bool":
            raise WellFormedError(f"guard has type {t}, expected bool", c.span)


def _subterms(t: Term):
    yield t
    if isinstance(t, App):
        for a in t.args:
            yield from _subterms(a)


def assignable(target: str, value: str) -> bool:
    if target == value:
        return True
    if target == "real" and value in NUMERIC:
        return True
    if target == "int" and value in ("nat", "int"):
        return True
    if target == "nat" and value == "nat":
        return True
    return False


def term_type(t: Term, sig: Signature) -> Optional[str]:
    if isinstance(t, Const):
        v = t.value
        if isinstance(v, bool):
            return "bool"
        if isinstance(v, int):
            return "nat" if v >= 0 else "int"
        if isinstance(v, float):
            return "prob" if 0.0 <= v <= 1.0 else "real"
        if isinstance(v, tuple):
            return "list"
        return None
    if isinstance(t, Var):
        d = sig.vars.get(t.name)
        return d.type if d else None
    if isinstance(t, HistVar):
        return "nat"
    if isinstance(t, IntVar):
        return "int"
    if isinstance(t, PVal):
        return "prob"
    if isinstance(t, App):
        fn = t.fn
        if fn in ("<", "<=", ">", ">=", "=", "!=", "and", "or", "not"):
            return "bool"
        args = [term_type(a, sig) for a in t.args]
        if fn in ("+", "*"):
            if all(a in ("nat",) for a in args):
                return "nat"
            if all(a in ("nat", "int") for a in args):
                return "int"
            return "real"
        if fn in ("-", "neg"):
            if all(a in ("nat", "int") for a in args):
                return "int"
            return "real"
        if fn in ("min", "max"):
            if all(a == "prob" for a in args):
                return "prob"
            if all(a in ("nat", "int") for a in args):
                return "int"
            return "real"
        if fn == "size":
            return "nat"
        if fn in ("Normal", "Marginal"):
            return "dist"
        if fn == "pair":
            return "pair"
        if fn == "ite":
            return args[1]
        return "real"
    return None


def check_formula(f: Formula, sig: Optional[Signature] = None) -> None:
    _check_f(f, sig, inside_k=False, bound=())


def _check_f(f, sig, inside_k: bool, bound) -> None:
    if isinstance(f, (TrueF, FalseF)):
        return
    if isinstance(f, (ForallInt, ExistsInt)):
        if inside_k:
            raise WellFormedError("integer quantifiers may not occur inside an epistemic modality")
        if sig is not None and f.var in sig.vars:
            raise WellFormedError(f"cannot quantify over program variable {f.var}")
        _check_f(f.body, sig, inside_k, bound + (f.var,))
        return
    if isinstance(f, Know):
        _check_f(f.body, sig, True, bound)
        return
    if isinstance(f, (Belief, PossBelief)):
        _check_terms((f.eps,), sig, bound)
        _check_f(f.body, sig, True, bound)
        if f.kappa is not None:
            _check_f(f.kappa, sig, True, bound)
        return
    if isinstance(f, Not):
        _check_f(f.body, sig, inside_k, bound)
        return
    if isinstance(f, (And, Or)):
        for p in f.parts:
            _check_f(p, sig, inside_k, bound)
        return
    if isinstance(f, (Implies, Iff)):
        _check_f(f.left, sig, inside_k, bound)
        _check_f(f.right, sig, inside_k, bound)
        return
    if isinstance(f, Pred):
        _check_terms(f.args, sig, bound)
        return
    if isinstance(f, Neg):
        _check_terms((f.eps,), sig, bound)
        return
    if isinstance(f, (Kappa, Compds, Hyp)):
        return
    raise WellFormedError(f"unknown formula node {f!r}")


def _check_terms(ts, sig, bound) -> None:
    for t in ts:
        for node in _subterms(t):
            if isinstance(node, IntVar) and node.name not in bound:
                raise WellFormedError(f"integer variable {node.name} is not bound")
            if isinstance(node, Var) and sig is not None and node.name not in sig.vars:
                raise WellFormedError(f"undeclared variable {node.name}")
