"""Derived rules for hypothesis tests, expanded into Hist under Conseq."""
from __future__ import annotations

from ..syntax.ast import (
    And, App, Belief, Compds, Hyp, Implies, Kappa, TestCall, Var, conj, disj, poss,
)
from ..syntax.errors import BhlError, DeclError
from ..syntax.printer import show_formula
from ..syntax.transform import flatten, free_vars
from .tree import ProofTree, SideCondition

TAIL_OF = {"Two-HT": "two", "Low-HT": "lower", "Up-HT": "upper"}
BODY_OF = {"Two-HT": "alt", "Low-HT": "lower", "Up-HT": "upper"}
KIND_OF = {"Mult-or": "disj", "Mult-and": "conj"}


class DerivationError(BhlError):
    pass


class NeedsContext(DerivationError):
    """The instance cannot be formed until the precondition is known."""


def _parts(f) -> list:
    f = flatten(f)
    return list(f.parts) if isinstance(f, And) else [f]


def _fresh(var: str, key, fs, sig, rule: str) -> None:
    fv = set()
    for f in fs:
        fv |= free_vars(f, sig)
    if var in fv:
        raise DerivationError(f"{rule}: freshness violated, {var} occurs free in the "
                              "invariant or hypothesis formulas")
    if key in fv:
        raise DerivationError(f"{rule}: freshness violated, the history variable {key} occurs "
                              "free in the invariant or hypothesis formulas")


def _call(rule: str, prog) -> TestCall:
    if not isinstance(prog, TestCall):
        raise DerivationError(f"{rule} applies to a test call v := A(y), not to this program")
    return prog


def apply_derived(rule: str, sig, prog, pre=None, bindings=None) -> ProofTree:
    """Instantiate a derived rule; the result is a Conseq node over a Hist node.

    ``bindings`` may give ``psi`` (otherwise read off the precondition) and, for the
    Mult rules, ``test`` (the combined test id).  The meaningfulness condition of the
    instance is attached as the ``advisory`` binding.
    """
    b = dict(bindings or {})
    if rule in TAIL_OF:
        return _single(rule, sig, _call(rule, prog), pre, b)
    if rule in KIND_OF:
        return _mult(rule, sig, _call(rule, prog), pre, b)
    raise DerivationError(f"{rule} is not a derived rule")


def _expansion(pre_c, prog, post_c, schema: str, advisory) -> ProofTree:
    hist = ProofTree("Hist", prog=prog, post=post_c)
    return ProofTree("Conseq", pre_c, prog, post_c, (hist,),
                     (SideCondition("pre", f"schema({schema})"),),
                     (("advisory", advisory),))


def _single(rule, sig, c: TestCall, pre, b) -> ProofTree:
    try:
        t = sig.test(c.test)
    except DeclError as e:
        raise DerivationError(e.message) from None
    if t.combined:
        raise DerivationError(f"{rule} needs an atomic test; {t.id} is combined")
    if t.tail != TAIL_OF[rule]:
        raise DerivationError(f"tail mismatch: {rule} needs a {TAIL_OF[rule]}-tailed test, "
                              f"{t.id} is {t.tail}-tailed")
    psi = b.get("psi")
    if psi is None:
        if pre is None:
            raise NeedsContext(f"{rule}: neither bindings.psi nor the precondition is known")
        parts = _parts(pre)
        rest = [p for p in parts if p != Kappa(())]
        if len(rest) == len(parts):
            raise DerivationError(f"{rule}: the precondition must state kappa{{}} "
                                  "(no test has been run)")
        psi = conj(*rest)
    upper, lower = Hyp("upper", c.data, c.test), Hyp("lower", c.data, c.test)
    _fresh(c.var, c.hist_key, (psi, upper, lower), sig, rule)
    body = Hyp(BODY_OF[rule], c.data, c.test)
    pre_c = conj(psi, Kappa(()))
    post_c = conj(psi, Kappa.of([(c.data, c.test)]), Belief("=", Var(c.var), c.data, c.test, body))
    hyps = (poss(lower), poss(upper)) if rule == "Two-HT" else (poss(body),)
    advisory = conj(Compds(c.data, c.test), *hyps)
    return _expansion(pre_c, c, post_c, "BHT", Implies(psi, advisory))


def _mult(rule, sig, c: TestCall, pre, b) -> ProofTree:
    name = b.get("test")
    if name is None:
        raise DerivationError(f"{rule} needs bindings.test naming the combined test")
    try:
        t = sig.test(str(name))
    except DeclError as e:
        raise DerivationError(e.message) from None
    if t.kind != KIND_OF[rule]:
        raise DerivationError(f"{rule} needs a {KIND_OF[rule]}-combined test; {t.id} is {t.kind}")
    a1, a2 = t.components
    if c.test != a2:
        raise DerivationError(f"{rule}: the program runs {c.test}, but the second component "
                              f"of {t.id} is {a2}")
    if pre is None:
        raise NeedsContext(f"{rule}: the precondition is not known")
    parts = _parts(pre)
    cands = [p for p in parts if isinstance(p, Belief) and p.test == a1
             and p.op in ("=", "<=") and isinstance(p.eps, Var)]
    if not cands:
        raise DerivationError(f"{rule}: the precondition has no belief with threshold "
                              f"= alpha or <= alpha from test {a1}")
    if len(cands) > 1:
        raise DerivationError(f"{rule}: several beliefs from test {a1} in the precondition")
    b1 = cands[0]
    y1, y2 = b1.data, c.data
    k1 = Kappa.of([(y1, a1)])
    if b1.kappa is not None and flatten(b1.kappa) != k1:
        raise DerivationError(f"{rule}: the first belief must use the history formula "
                              f"{show_formula(k1)}")
    kappas = [p for p in parts if isinstance(p, Kappa)]
    if kappas != [k1]:
        raise DerivationError(f"{rule}: the precondition must state exactly the history "
                              f"formula {show_formula(k1)}")
    psi = conj(*(p for p in parts if p is not b1 and p != k1))
    ref = (y1, y2)
    try:
        sig.check_ref(ref, t.id)
    except DeclError as e:
        raise DerivationError(e.message) from None
    alpha1 = b1.eps.name
    if alpha1 == c.var:
        raise DerivationError(f"{rule}: freshness violated, {c.var} already names the first "
                              "p-value")
    phi2 = Hyp("alt", y2, a2)
    if (y1, a1) == (y2, a2):
        raise DerivationError(f"{rule}: freshness violated, the history variable of "
                              f"{a2} on the second dataset is already constrained")
    _fresh(c.var, c.hist_key, (psi, b1.body, phi2), sig, rule)
    if alpha1 in free_vars(psi, sig):
        raise DerivationError(f"{rule}: freshness violated, {alpha1} occurs free in the "
                              "invariant")
    if t.kind == "disj":
        eps, body, schema = App("+", (Var(alpha1), Var(c.var))), disj(b1.body, phi2), "BHT-or"
    else:
        eps, body, schema = App("min", (Var(alpha1), Var(c.var))), conj(b1.body, phi2), "BHT-and"
    post_c = conj(psi, Kappa.of(sig.list_tests(ref, t.id)), Belief("<=", eps, ref, t.id, body))
    advisory = Implies(psi, conj(Compds(ref, t.id), poss(Hyp("alt", ref, t.id))))
    return _expansion(conj(*parts), c, post_c, schema, advisory)
