"""Variable sets, substitution and sugar expansion."""
from __future__ import annotations

from collections import Counter
from typing import Dict, Optional, Set

from .ast import (
    And, App, Assert, Assign, Belief, Compds, Const, ExistsInt, FalseF, ForallInt, Formula,
    HistKey, HistVar, Hyp, If, Iff, Implies, IntVar, Kappa, Know, Neg, Not, Or, Par,
    PossBelief, Pred, PVal, Seq, Skip, TestCall, Term, TrueF, Var, While, TRUE, FALSE,
    conj, disj, ref_vars,
)

# ---------------------------------------------------------------- programs


def updated_vars(c) -> Set[str]:
    """upd(C): the variables a program may assign."""
    if isinstance(c, (Skip, Assert)):
        return set()
    if isinstance(c, Assign):
        return {c.var}
    if isinstance(c, TestCall):
        return {c.var}
    if isinstance(c, Seq):
        return updated_vars(c.first) | updated_vars(c.second)
    if isinstance(c, Par):
        return updated_vars(c.left) | updated_vars(c.right)
    if isinstance(c, If):
        return updated_vars(c.then) | updated_vars(c.orelse)
    if isinstance(c, While):
        return updated_vars(c.body)
    raise TypeError(f"not a command: {c!r}")


def term_vars(t: Term) -> Set[str]:
    if isinstance(t, Var):
        return {t.name}
    if isinstance(t, App):
        out: Set[str] = set()
        for a in t.args:
            out |= term_vars(a)
        return out
    if isinstance(t, PVal):
        return set(ref_vars(t.data))
    return set()


def program_vars(c) -> Set[str]:
    """Var(C): every program variable occurring in C."""
    if isinstance(c, (Skip, Assert)):
        return set()
    if isinstance(c, Assign):
        return {c.var} | term_vars(c.expr)
    if isinstance(c, TestCall):
        return {c.var} | set(c.data)
    if isinstance(c, Seq):
        return program_vars(c.first) | program_vars(c.second)
    if isinstance(c, Par):
        return program_vars(c.left) | program_vars(c.right)
    if isinstance(c, If):
        return term_vars(c.cond) | program_vars(c.then) | program_vars(c.orelse)
    if isinstance(c, While):
        return term_vars(c.cond) | program_vars(c.body)
    raise TypeError(f"not a command: {c!r}")


def test_calls(c) -> list:
    if isinstance(c, TestCall):
        return [c]
    if isinstance(c, Seq):
        return test_calls(c.first) + test_calls(c.second)
    if isinstance(c, Par):
        return test_calls(c.left) + test_calls(c.right)
    if isinstance(c, If):
        return test_calls(c.then) + test_calls(c.orelse)
    if isinstance(c, While):
        return test_calls(c.body)
    return []


def strip_annotations(c):
    """Drop assert cut points and loop invariants."""
    if isinstance(c, Seq):
        a, b = strip_annotations(c.first), strip_annotations(c.second)
        if isinstance(a, Assert):
            return b
        if isinstance(b, Assert):
            return a
        return Seq(a, b, span=c.span)
    if isinstance(c, Par):
        return Par(strip_annotations(c.left), strip_annotations(c.right), span=c.span)
    if isinstance(c, If):
        return If(c.cond, strip_annotations(c.then), strip_annotations(c.orelse), span=c.span)
    if isinstance(c, While):
        return While(c.cond, strip_annotations(c.body), None, span=c.span)
    if isinstance(c, Assert):
        return Skip(span=c.span)
    return c


def is_loop_free(c) -> bool:
    if isinstance(c, While):
        return False
    if isinstance(c, (Seq, Par)):
        a, b = (c.first, c.second) if isinstance(c, Seq) else (c.left, c.right)
        return is_loop_free(a) and is_loop_free(b)
    if isinstance(c, If):
        return is_loop_free(c.then) and is_loop_free(c.orelse)
    return True


def expr_to_formula(e: Term) -> Formula:
    """View a boolean program expression as an assertion."""
    if isinstance(e, Const) and isinstance(e.value, bool):
        return TRUE if e.value else FALSE
    if isinstance(e, App):
        if e.fn == "and":
            return And((expr_to_formula(e.args[0]), expr_to_formula(e.args[1])))
        if e.fn == "or":
            return Or((expr_to_formula(e.args[0]), expr_to_formula(e.args[1])))
        if e.fn == "not":
            return Not(expr_to_formula(e.args[0]))
        if e.fn in ("<", "<=", ">", ">=", "=", "!="):
            return Pred(e.fn, e.args)
    return Pred("=", (e, Const(True)))


# ---------------------------------------------------------------- terms


def term_keys(t: Term) -> Set[object]:
    """Variables of a term, history variables included."""
    if isinstance(t, Var):
        return {t.name}
    if isinstance(t, HistVar):
        return {t.key}
    if isinstance(t, App):
        out: Set[object] = set()
        for a in t.args:
            out |= term_keys(a)
        return out
    if isinstance(t, PVal):
        return set(ref_vars(t.data))
    return set()


def subst_term(t: Term, m: Dict[object, Term]) -> Term:
    if isinstance(t, Var):
        return m.get(t.name, t)
    if isinstance(t, HistVar):
        return m.get(t.key, t)
    if isinstance(t, App):
        return App(t.fn, tuple(subst_term(a, m) for a in t.args))
    if isinstance(t, PVal):
        if any(v in m for v in ref_vars(t.data)):
            raise ValueError("cannot substitute for a dataset variable under a test procedure")
        return t
    return t


def subst_intvar(t: Term, name: str, value: Term) -> Term:
    if isinstance(t, IntVar) and t.name == name:
        return value
    if isinstance(t, App):
        return App(t.fn, tuple(subst_intvar(a, name, value) for a in t.args))
    return t


# ---------------------------------------------------------------- formulas


def free_vars(f: Formula, sig=None) -> Set[object]:
    """fv(phi): program, invisible and history variables (int-vars excluded).

    Sugar nodes are expanded first; expansion needs the signature.
    """
    if isinstance(f, (TrueF, FalseF)):
        return set()
    if isinstance(f, Pred):
        out: Set[object] = set()
        for a in f.args:
            out |= term_keys(a)
        return out
    if isinstance(f, Neg):
        return set(ref_vars(f.data)) | term_keys(f.eps)
    if isinstance(f, (Not, Know)):
        return free_vars(f.body, sig)
    if isinstance(f, (And, Or)):
        out = set()
        for p in f.parts:
            out |= free_vars(p, sig)
        return out
    if isinstance(f, (Implies, Iff)):
        return free_vars(f.left, sig) | free_vars(f.right, sig)
    if isinstance(f, (ForallInt, ExistsInt)):
        return free_vars(f.body, sig)
    if sig is None:
        raise ValueError("free variables of sugar need declarations")
    return free_vars(expand_node(f, sig), sig)


def _kappa_counts(pairs) -> Counter:
    return Counter(HistKey(t, tuple(d)) for d, t in pairs)


def _increment_of(term: Term, key: HistKey) -> Optional[int]:
    """If ``term`` is ``h + c`` for the history variable ``key``, return c."""
    if (isinstance(term, App) and term.fn == "+" and term.args[0] == HistVar(key)
            and isinstance(term.args[1], Const) and type(term.args[1].value) is int):
        return term.args[1].value
    return None


def subst(f: Formula, m: Dict[object, Term], sig=None) -> Formula:
    """Simultaneous substitution; history increments act directly on kappa."""
    if not m:
        return f
    if isinstance(f, (TrueF, FalseF)):
        return f
    if isinstance(f, Pred):
        return Pred(f.sym, tuple(subst_term(a, m) for a in f.args))
    if isinstance(f, Neg):
        if any(v in m for v in ref_vars(f.data)):
            raise ValueError("cannot substitute for a dataset variable")
        return Neg(f.op, f.data, f.test, subst_term(f.eps, m))
    if isinstance(f, Not):
        return Not(subst(f.body, m, sig))
    if isinstance(f, Know):
        return Know(subst(f.body, m, sig))
    if isinstance(f, And):
        return And(tuple(subst(p, m, sig) for p in f.parts))
    if isinstance(f, Or):
        return Or(tuple(subst(p, m, sig) for p in f.parts))
    if isinstance(f, Implies):
        return Implies(subst(f.left, m, sig), subst(f.right, m, sig))
    if isinstance(f, Iff):
        return Iff(subst(f.left, m, sig), subst(f.right, m, sig))
    if isinstance(f, ForallInt):
        return ForallInt(f.var, subst(f.body, m, sig))
    if isinstance(f, ExistsInt):
        return ExistsInt(f.var, subst(f.body, m, sig))
    if isinstance(f, (Belief, PossBelief)):
        kappa = f.kappa
        if any(isinstance(k, HistKey) for k in m):
            if kappa is None:
                kappa = Kappa.of(sig.list_tests(f.data, f.test))
            kappa = subst(kappa, m, sig)
        elif kappa is not None:
            kappa = subst(kappa, m, sig)
        return type(f)(f.op, subst_term(f.eps, m), f.data, f.test, subst(f.body, m, sig), kappa)
    if isinstance(f, Kappa):
        hist = {k: v for k, v in m.items() if isinstance(k, HistKey)}
        if not hist:
            return f
        counts = _kappa_counts(f.pairs)
        for key, term in hist.items():
            inc = _increment_of(term, key)
            if inc is None:
                return subst(expand_node(f, sig), m, sig)
            if counts[key] < inc:
                return FALSE  # h + inc = n has no solution in the naturals
            counts[key] -= inc
        pairs = []
        for key, n in counts.items():
            pairs.extend([(key.data, key.test)] * n)
        return Kappa.of(pairs)
    if isinstance(f, (Compds, Hyp)):
        expanded = expand_node(f, sig)
        if free_vars(expanded, sig) & set(m):
            return subst(expanded, m, sig)
        return f
    raise TypeError(f"not a formula: {f!r}")


def subst_int(f: Formula, name: str, value: Term) -> Formula:
    """Replace a bound integer variable (used when instantiating quantifiers)."""
    if isinstance(f, Pred):
        return Pred(f.sym, tuple(subst_intvar(a, name, value) for a in f.args))
    if isinstance(f, Neg):
        return Neg(f.op, f.data, f.test, subst_intvar(f.eps, name, value))
    if isinstance(f, (Not, Know)):
        return type(f)(subst_int(f.body, name, value))
    if isinstance(f, (And, Or)):
        return type(f)(tuple(subst_int(p, name, value) for p in f.parts))
    if isinstance(f, (Implies, Iff)):
        return type(f)(subst_int(f.left, name, value), subst_int(f.right, name, value))
    if isinstance(f, (ForallInt, ExistsInt)):
        if f.var == name:
            return f
        return type(f)(f.var, subst_int(f.body, name, value))
    if isinstance(f, (Belief, PossBelief)):
        kappa = None if f.kappa is None else subst_int(f.kappa, name, value)
        return type(f)(f.op, subst_intvar(f.eps, name, value), f.data, f.test,
                       subst_int(f.body, name, value), kappa)
    return f


# ---------------------------------------------------------------- sugar


def kappa_formula(pairs, sig) -> Formula:
    counts = _kappa_counts(pairs)
    universe = sig.hist_universe()
    unknown = [k for k in counts if k not in universe]
    if unknown:
        raise ValueError(f"kappa mentions undeclared history variable {unknown[0]}")
    return conj(*(Pred("=", (HistVar(k), Const(counts.get(k, 0)))) for k in universe))


def belief_core(f, sig) -> Formula:
    kappa = f.kappa if f.kappa is not None else Kappa.of(sig.list_tests(f.data, f.test))
    body = f.body if isinstance(f, Belief) else Not(f.body)
    k = Know(Or((body, And((Neg(f.op, f.data, f.test, f.eps), kappa)),
                 Not(Compds(f.data, f.test)))))
    return k if isinstance(f, Belief) else Not(k)


def expand_node(f: Formula, sig) -> Formula:
    """One-step unfolding of a sugar node."""
    if isinstance(f, Kappa):
        return kappa_formula(f.pairs, sig)
    if isinstance(f, Compds):
        return sig.compds(f.data, f.test)
    if isinstance(f, Hyp):
        return sig.hypothesis(f.kind, f.data, f.test)
    if isinstance(f, (Belief, PossBelief)):
        return belief_core(f, sig)
    return f


def expand(f: Formula, sig) -> Formula:
    """Full expansion into core form (Pred, Neg, Not, And, Or, Implies, Iff, K, quantifiers).

    Or/Implies/Iff/Exists are kept as display sugar with their standard meaning.
    """
    if isinstance(f, (TrueF, FalseF, Pred, Neg)):
        return f
    if isinstance(f, Not):
        return Not(expand(f.body, sig))
    if isinstance(f, Know):
        return Know(expand(f.body, sig))
    if isinstance(f, And):
        return And(tuple(expand(p, sig) for p in f.parts))
    if isinstance(f, Or):
        return Or(tuple(expand(p, sig) for p in f.parts))
    if isinstance(f, Implies):
        return Implies(expand(f.left, sig), expand(f.right, sig))
    if isinstance(f, Iff):
        return Iff(expand(f.left, sig), expand(f.right, sig))
    if isinstance(f, ForallInt):
        return ForallInt(f.var, expand(f.body, sig))
    if isinstance(f, ExistsInt):
        return ExistsInt(f.var, expand(f.body, sig))
    return expand(expand_node(f, sig), sig)


def is_core(f: Formula) -> bool:
    if isinstance(f, (TrueF, FalseF, Pred, Neg)):
        return True
    if isinstance(f, (Not, Know)):
        return is_core(f.body)
    if isinstance(f, (And, Or)):
        return all(is_core(p) for p in f.parts)
    if isinstance(f, (Implies, Iff)):
        return is_core(f.left) and is_core(f.right)
    if isinstance(f, (ForallInt, ExistsInt)):
        return is_core(f.body)
    return False


def flatten(f: Formula) -> Formula:
    """Normalise nested conjunctions/disjunctions (used for structural comparison)."""
    if isinstance(f, And):
        return conj(*(flatten(p) for p in f.parts)) if f.parts else TRUE
    if isinstance(f, Or):
        return disj(*(flatten(p) for p in f.parts)) if f.parts else FALSE
    if isinstance(f, (Not, Know)):
        return type(f)(flatten(f.body))
    if isinstance(f, (Implies, Iff)):
        return type(f)(flatten(f.left), flatten(f.right))
    if isinstance(f, (ForallInt, ExistsInt)):
        return type(f)(f.var, flatten(f.body))
    if isinstance(f, (Belief, PossBelief)):
        kappa = None if f.kappa is None else flatten(f.kappa)
        return type(f)(f.op, f.eps, f.data, f.test, flatten(f.body), kappa)
    return f
