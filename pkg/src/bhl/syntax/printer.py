"""Concrete-syntax printers; ``parse(show(x)) == x`` for every AST the parser can build."""
from __future__ import annotations

from .ast import (
    And, App, Assert, Assign, Belief, Compds, Const, ExistsInt, FalseF, ForallInt, Formula,
    HistVar, Hyp, If, Iff, Implies, IntVar, Kappa, Know, Neg, Not, Or, Par, PossBelief, Pred,
    PVal, Seq, Skip, TestCall, TrueF, Var, While, format_ref, is_atomic_ref,
)

_TERM_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}
_BOOL_WORD = {"<": "lt", "<=": "le", ">": "gt", ">=": "ge", "=": "eq", "!=": "ne",
              "and": "band", "or": "bor", "not": "bnot"}


def show_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, int):
        return str(v)
    if isinstance(v, tuple):
        return "[" + ", ".join(show_value(x) for x in v) + "]"
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    return str(v)


def _pval_args(ref) -> str:
    if is_atomic_ref(ref):
        return "(" + ", ".join(ref) + ")"
    return "(" + ", ".join("(" + ", ".join(sub) + ")" if is_atomic_ref(sub)
                           else format_ref(sub, top=False) for sub in ref) + ")"


def show_term(t, program: bool = False) -> str:
    return _term(t, 0, program)


def _term(t, ctx: int, program: bool) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, IntVar):
        return t.name
    if isinstance(t, HistVar):
        return f"hist({format_ref(t.key.data)}, {t.key.test})"
    if isinstance(t, Const):
        s = show_value(t.value)
        if s.startswith("-") and ctx > 0:
            return "(" + s + ")" if ctx >= 3 else s
        return s
    if isinstance(t, PVal):
        return t.test + _pval_args(t.data)
    if isinstance(t, App):
        fn = t.fn
        if fn in _TERM_PREC:
            p = _TERM_PREC[fn]
            s = f"{_term(t.args[0], p, program)} {fn} {_term(t.args[1], p + 1, program)}"
            return f"({s})" if ctx > p else s
        if fn == "neg":
            inner = t.args[0]
            body = _term(inner, 3, program)
            if isinstance(inner, Const) or body.startswith("-"):
                body = "(" + _term(inner, 0, program) + ")"
            s = "-" + body
            return f"({s})" if ctx > 3 else s
        if fn in _BOOL_WORD:
            if program:
                return _expr(t, ctx)
            return _BOOL_WORD[fn] + "(" + ", ".join(_term(a, 0, program) for a in t.args) + ")"
        return fn + "(" + ", ".join(_arg(a, program) for a in t.args) + ")"
    raise TypeError(f"not a term: {t!r}")


def _arg(a, program: bool) -> str:
    return _expr(a, 0) if program else _term(a, 0, program)


# program expressions: or=-3, and=-2, not=-1, comparison=0, arithmetic >= 1
_EXPR_PREC = {"or": -3, "and": -2, "not": -1}


def show_expr(e) -> str:
    return _expr(e, -4)


def _expr(e, ctx: int) -> str:
    if isinstance(e, App) and e.fn in ("or", "and"):
        p = _EXPR_PREC[e.fn]
        s = f"{_expr(e.args[0], p)} {e.fn} {_expr(e.args[1], p + 1)}"
        return f"({s})" if ctx > p else s
    if isinstance(e, App) and e.fn == "not":
        s = "not " + _expr(e.args[0], -1)
        return f"({s})" if ctx > -1 else s
    if isinstance(e, App) and e.fn in ("<", "<=", ">", ">=", "=", "!="):
        s = f"{_term(e.args[0], 1, True)} {e.fn} {_term(e.args[1], 1, True)}"
        return f"({s})" if ctx > -1 else s
    return _term(e, max(ctx, 0), True)


# ---------------------------------------------------------------- formulas
# precedence: quantifier 0, iff 1, implies 2, or 3, and 4, unary 5, atom 6


def show_formula(f: Formula) -> str:
    return _fml(f, 0)


def _wrap(s: str, prec: int, ctx: int) -> str:
    return f"({s})" if ctx > prec else s


def _is_poss(f) -> bool:
    return isinstance(f, Not) and isinstance(f.body, Know) and isinstance(f.body.body, Not)


def _fml(f, ctx: int) -> str:
    if isinstance(f, TrueF):
        return "true"
    if isinstance(f, FalseF):
        return "false"
    if isinstance(f, Pred):
        if f.sym in ("sampled", "followed"):
            return f.sym + "(" + ", ".join(_term(a, 0, False) for a in f.args) + ")"
        return _wrap(f"{_term(f.args[0], 1, False)} {f.sym} {_term(f.args[1], 1, False)}", 6, ctx)
    if isinstance(f, Neg):
        return f"Neg[{f.op}; {format_ref(f.data)}; {f.test}]({_term(f.eps, 0, False)})"
    if isinstance(f, Kappa):
        return "kappa{" + ", ".join(f"({format_ref(d)}, {t})" for d, t in f.pairs) + "}"
    if isinstance(f, Compds):
        return f"compds({format_ref(f.data)}, {f.test})"
    if isinstance(f, Hyp):
        return f"{f.kind}({format_ref(f.data)}, {f.test})"
    if isinstance(f, Not):
        if _is_poss(f):
            return _wrap("P " + _fml(f.body.body.body, 5), 5, ctx)
        return _wrap("not " + _fml(f.body, 5), 5, ctx)
    if isinstance(f, Know):
        return _wrap("K " + _fml(f.body, 5), 5, ctx)
    if isinstance(f, (Belief, PossBelief)):
        word = "Belief" if isinstance(f, Belief) else "Poss"
        head = f"{word}[{f.op} {_term(f.eps, 0, False)}; {format_ref(f.data)}; {f.test}"
        if f.kappa is not None:
            head += "; " + _fml(f.kappa, 0)
        return _wrap(head + "] " + _fml(f.body, 5), 5, ctx)
    if isinstance(f, And):
        return _wrap(" and ".join(_fml(p, 5) for p in f.parts), 4, ctx)
    if isinstance(f, Or):
        return _wrap(" or ".join(_fml(p, 5 if isinstance(p, Or) else 4) for p in f.parts), 3, ctx)
    if isinstance(f, Implies):
        return _wrap(f"{_fml(f.left, 3)} -> {_fml(f.right, 2)}", 2, ctx)
    if isinstance(f, Iff):
        return _wrap(f"{_fml(f.left, 1)} <-> {_fml(f.right, 2)}", 1, ctx)
    if isinstance(f, (ForallInt, ExistsInt)):
        q = "forall" if isinstance(f, ForallInt) else "exists"
        return _wrap(f"{q} {f.var}. {_fml(f.body, 0)}", 0, ctx)
    raise TypeError(f"not a formula: {f!r}")


# ---------------------------------------------------------------- programs


def show_program(c, indent: str = "") -> str:
    return _cmd(c, 0)


def _cmd(c, ctx: int) -> str:
    # precedence: seq 0, par 1, command 2
    if isinstance(c, Skip):
        return "skip"
    if isinstance(c, Assign):
        return f"{c.var} := {show_expr(c.expr)}"
    if isinstance(c, TestCall):
        return f"{c.var} := {c.test}{_pval_args(c.data)}"
    if isinstance(c, Assert):
        return f"assert {show_formula(c.formula)}"
    if isinstance(c, Seq):
        s = f"{_cmd(c.first, 1)}; {_cmd(c.second, 0)}"
        return f"({s})" if ctx > 0 else s
    if isinstance(c, Par):
        s = f"{_cmd(c.left, 2)} || {_cmd(c.right, 1)}"
        return f"({s})" if ctx > 1 else s
    if isinstance(c, If):
        return f"if {show_expr(c.cond)} {{ {_cmd(c.then, 0)} }} else {{ {_cmd(c.orelse, 0)} }}"
    if isinstance(c, While):
        inv = f" invariant {show_formula(c.invariant)}" if c.invariant is not None else ""
        return f"while {show_expr(c.cond)}{inv} {{ {_cmd(c.body, 0)} }}"
    raise TypeError(f"not a command: {c!r}")


def show(x) -> str:
    from .ast import Command, Term
    if isinstance(x, Formula):
        return show_formula(x)
    if isinstance(x, Command):
        return show_program(x)
    if isinstance(x, Term):
        return show_term(x)
    return str(x)
