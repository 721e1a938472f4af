"""Propositional validity with modal atoms, background facts and belief schemata.

Every maximal K-subformula, statistical belief, comparison and predicate is a
propositional letter.  Schemata contribute implications between letters; the
goal is valid when the implications together with the negated goal are
unsatisfiable.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from ..semantics.values import EvalError, compare, eval_term
from ..syntax.ast import (
    FALSE, TRUE, And, App, Belief, Compds, Const, ExistsInt, FalseF, ForallInt, HistVar, Hyp,
    Iff, Implies, IntVar, Kappa, Know, Neg, Not, Or, PossBelief, Pred, PVal, TrueF, Var, conj, disj,
)
from ..syntax.printer import show_term
from ..syntax.transform import expand_node, kappa_formula, term_keys

SCHEMATA = ("S5", "Kmono", "SBk", "SB4", "SB5", "SB-<", "BHk", "BHT", "BHT-or", "BHT-and")
_ALIASES = {
    "bhκ": "BHk", "bhkappa": "BHk", "bht-∨": "BHT-or", "bht-∧": "BHT-and",
    "bht-disj": "BHT-or", "bht-conj": "BHT-and", "sb<": "SB-<", "k-mono": "Kmono",
}

VACUITY_CAVEAT = ("needs a related world where the null hypothesis and the test's model "
                  "hold; without one the belief is vacuous")
PIN_CAVEAT = ("reads the recorded threshold as the component's p-value; needs a related "
              "world where that component's alternative fails and its model holds")


def schema_name(raw: str) -> str:
    key = raw.strip()
    for s in SCHEMATA:
        if s.lower() == key.lower():
            return s
    hit = _ALIASES.get(key.lower())
    if hit is None:
        raise KeyError(raw)
    return hit


@dataclass(frozen=True)
class Constraint:
    formula: object
    schema: str
    caveat: Optional[str] = None


@dataclass(frozen=True)
class Proof:
    """A successful propositional discharge: the schemata it needed and their caveats."""
    schemata: Tuple[str, ...]
    caveats: Tuple[str, ...]


# ---------------------------------------------------------------- atoms


def is_atom(f) -> bool:
    return isinstance(f, (Pred, Neg, Know, Belief, ForallInt, ExistsInt))


def _not(f):
    if isinstance(f, TrueF):
        return FALSE
    if isinstance(f, FalseF):
        return TRUE
    if isinstance(f, Not):
        return f.body
    return Not(f)


def _nnf_not(f):
    """Negation pushed through conjunctions and disjunctions."""
    if isinstance(f, And):
        return disj(*(_nnf_not(p) for p in f.parts))
    if isinstance(f, Or):
        parts = [_nnf_not(p) for p in f.parts]
        return FALSE if any(isinstance(p, FalseF) for p in parts) else conj(*parts)
    return _not(f)


def _term_key(t) -> str:
    return show_term(t)


def _closed(t) -> bool:
    if isinstance(t, (Var, HistVar, IntVar, PVal)):
        return False
    if isinstance(t, App):
        return all(_closed(a) for a in t.args)
    return True


def _int_const(t) -> Optional[int]:
    if isinstance(t, Const) and type(t.value) is int:
        return t.value
    return None


def _shift(a, b):
    """Move integer offsets of history arithmetic across a comparison."""
    for _ in range(4):
        if isinstance(a, App) and a.fn == "+" and _int_const(a.args[1]) is not None \
                and _int_const(b) is not None:
            a, b = a.args[0], Const(_int_const(b) - _int_const(a.args[1]))
        elif isinstance(b, App) and b.fn == "+" and _int_const(b.args[1]) is not None \
                and _int_const(a) is not None:
            a, b = Const(_int_const(a) - _int_const(b.args[1])), b.args[0]
        else:
            break
    return a, b


def lt(a, b):
    return Pred("<", (a, b))


def eq(a, b):
    if _term_key(b) < _term_key(a):
        a, b = b, a
    return Pred("=", (a, b))


def comparison(op: str, a, b):
    """A comparison as a propositional combination of strict-order and equality letters."""
    a, b = _shift(a, b)
    if _closed(a) and _closed(b):
        try:
            return TRUE if compare(op, eval_term({}, a), eval_term({}, b)) else FALSE
        except (EvalError, TypeError, ValueError):
            pass
    for h, c, flip in ((a, b, False), (b, a, True)):
        n = _int_const(c)
        if isinstance(h, HistVar) and n is not None:
            # history counters are naturals
            o = {"<": ">", ">": "<", "<=": ">=", ">=": "<="}.get(op, op) if flip else op
            if (o == "=" and n < 0) or (o == "<" and n <= 0) or (o == "<=" and n < 0):
                return FALSE
            if (o == "!=" and n < 0) or (o == ">" and n < 0) or (o == ">=" and n <= 0):
                return TRUE
    if op == "<":
        return lt(a, b)
    if op == ">":
        return lt(b, a)
    if op == "<=":
        return Or((lt(a, b), eq(a, b)))
    if op == ">=":
        return Or((lt(b, a), eq(a, b)))
    if op == "=":
        return TRUE if a == b else eq(a, b)
    if op == "!=":
        return FALSE if a == b else Not(eq(a, b))
    raise ValueError(op)


def _hist_only(f) -> bool:
    """Only history counters and constants: such facts are known (BHk)."""
    if isinstance(f, (TrueF, FalseF)):
        return True
    if isinstance(f, Pred) and f.sym in ("<", "="):
        keys = set().union(*(term_keys(a) for a in f.args))
        return bool(keys) and all(not isinstance(k, str) for k in keys)
    if isinstance(f, Not):
        return _hist_only(f.body)
    if isinstance(f, (And, Or)):
        return all(_hist_only(p) for p in f.parts)
    return False


# ---------------------------------------------------------------- the reasoner


class Reasoner:
    """Decides Γ ⊨ φ propositionally for a chosen set of schemata (sound, incomplete)."""

    MAX_DEPTH = 2

    def __init__(self, sig, schemata: Iterable[str] = SCHEMATA, depth: int = 0, extra=()):
        self.sig = sig
        self.on = frozenset(schemata)
        self.depth = depth
        self.extra = tuple(extra)  # assumed lemma formulas
        self._norm: Dict[object, object] = {}
        self._entails: Dict[tuple, bool] = {}

    # -- normal form
    def norm(self, f):
        hit = self._norm.get(f)
        if hit is None:
            hit = self._norm_uncached(f)
            self._norm[f] = hit
        return hit

    def _norm_uncached(self, f):
        if isinstance(f, (TrueF, FalseF)):
            return f
        if isinstance(f, Pred):
            if f.sym in ("sampled", "followed"):
                return f
            return comparison(f.sym, *f.args)
        if isinstance(f, Neg):
            if isinstance(f.eps, PVal) and f.eps.test == f.test and f.eps.data == f.data \
                    and f.op in ("=", "<=", ">="):
                return TRUE  # the procedure returns the p-value
            return f
        if isinstance(f, Not):
            return _nnf_not(self.norm(f.body))
        if isinstance(f, And):
            parts = [self.norm(p) for p in f.parts]
            if any(isinstance(p, FalseF) for p in parts):
                return FALSE
            return conj(*parts)
        if isinstance(f, Or):
            parts = [self.norm(p) for p in f.parts]
            if any(isinstance(p, TrueF) for p in parts):
                return TRUE
            return disj(*parts)
        if isinstance(f, Implies):
            return self.norm(Or((Not(f.left), f.right)))
        if isinstance(f, Iff):
            a, b = self.norm(f.left), self.norm(f.right)
            return disj(conj(a, b), conj(_not(a), _not(b)))
        if isinstance(f, Know):
            return self._know(self.norm(f.body))
        if isinstance(f, (Belief, PossBelief)):
            kappa = f.kappa if f.kappa is not None else Kappa.of(self.sig.list_tests(f.data, f.test))
            if not isinstance(kappa, Kappa):
                kappa = self.norm(kappa)
            body = f.body if isinstance(f, Belief) else Not(f.body)
            b = Belief(f.op, f.eps, f.data, f.test, self.norm(body), kappa)
            return b if isinstance(f, Belief) else _not(b)
        if isinstance(f, Kappa):
            return self.norm(kappa_formula(f.pairs, self.sig))
        if isinstance(f, (Compds, Hyp)):
            return self.norm(expand_node(f, self.sig))
        if isinstance(f, (ForallInt, ExistsInt)):
            return f
        raise TypeError(f"not a formula: {f!r}")

    def _know(self, body):
        if isinstance(body, TrueF):
            return TRUE
        if "S5" in self.on:
            if isinstance(body, Know) or (isinstance(body, Not) and isinstance(body.body, Know)):
                return body
            if isinstance(body, And):
                return conj(*(self._know(p) for p in body.parts))
        if "SB4" in self.on and isinstance(body, Belief):
            return body
        if "SB5" in self.on and isinstance(body, Not) and isinstance(body.body, Belief):
            return body
        if "BHk" in self.on and _hist_only(body):
            return body
        return Know(body)

    # -- entailment between bodies (used by the monotonicity schemata)
    def entails(self, x, y) -> bool:
        if x == y:
            return True
        key = (x, y)
        hit = self._entails.get(key)
        if hit is None:
            if self.depth >= self.MAX_DEPTH:
                sub = Reasoner(self.sig, (), self.depth + 1)
            else:
                sub = Reasoner(self.sig, self.on, self.depth + 1)
            hit = sub._valid_normed(disj(_not(x), y)) is not None
            self._entails[key] = hit
        return hit

    # -- constraints
    def constraints(self, goal) -> List[Constraint]:
        out: List[Constraint] = [Constraint(self.norm(e), "lemma") for e in self.extra]
        seen_atoms: Dict[object, None] = {}
        frontier = atoms_of(goal) + [a for c in out for a in atoms_of(c.formula)]
        done = set()
        for _ in range(3):
            for a in frontier:
                seen_atoms.setdefault(a, None)
            new = [c for c in self._generate(list(seen_atoms)) if c not in done]
            if not new:
                break
            done.update(new)
            out.extend(new)
            frontier = [a for c in new for a in atoms_of(c.formula) if a not in seen_atoms]
            if not frontier:
                break
        return out

    def _generate(self, atoms: Sequence) -> List[Constraint]:
        out: List[Constraint] = []
        preds = [a for a in atoms if isinstance(a, Pred)]
        out += _background(preds)
        ks = [a for a in atoms if isinstance(a, Know)]
        bs = [a for a in atoms if isinstance(a, Belief)]
        on = self.on
        if "S5" in on:
            out += [Constraint(disj(_not(k), k.body), "S5") for k in ks]
        if "Kmono" in on:
            for k1, k2 in itertools.permutations(ks, 2):
                if self.entails(k1.body, k2.body):
                    out.append(Constraint(disj(_not(k1), k2), "Kmono"))
            for b1, b2 in itertools.permutations(bs, 2):
                if (b1.op, b1.eps, b1.data, b1.test, b1.kappa) == (b2.op, b2.eps, b2.data, b2.test, b2.kappa) \
                        and self.entails(b1.body, b2.body):
                    out.append(Constraint(disj(_not(b1), b2), "Kmono"))
        if "SBk" in on:
            for k in ks:
                for b in bs:
                    if self.entails(k.body, b.body):
                        out.append(Constraint(disj(_not(k), b), "SBk"))
        if "SB-<" in on:
            out += self._sb_less(bs)
        out += self._bht(bs)
        return out

    def _observable_term(self, t) -> bool:
        return all(isinstance(k, str) and self.sig.is_observable(k) for k in term_keys(t))

    def _sb_less(self, bs) -> List[Constraint]:
        out = []
        for b1, b2 in itertools.permutations(bs, 2):
            if (b1.data, b1.test) != (b2.data, b2.test):
                continue
            if not (self._observable_term(b1.eps) and self._observable_term(b2.eps)):
                continue
            if b1.kappa == b2.kappa and (b1.op, b1.eps) != (b2.op, b2.eps) \
                    and self.entails(b1.body, b2.body):
                cond = _neg_implication(b1.op, b1.eps, b2.op, b2.eps)
                if cond is not None and not isinstance(cond, FalseF):
                    out.append(Constraint(disj(_not(b1), _not(cond), b2), "SB-<"))
            if b1.op == "=" and b2.op in ("<=", "<") and b1.body == b2.body:
                # an exact p-value above the threshold refutes the weaker belief, provided
                # some related world falsifies the body and meets the test's model
                above = comparison(">" if b2.op == "<=" else ">=", b1.eps, b2.eps)
                if isinstance(above, FalseF):
                    continue
                witness = self._witness(b1)
                out.append(Constraint(disj(_not(b1), _not(above), _not(witness), _not(b2)),
                                      "SB-<"))
                if b1.kappa == b2.kappa:
                    out.append(Constraint(disj(_not(b1), _not(above), _not(b2)), "SB-<",
                                          VACUITY_CAVEAT))
        return out

    def _witness(self, b):
        """P(not body and compds): a world where the belief can only hold through Neg."""
        return self.norm(Not(Know(Not(And((Not(b.body), Compds(b.data, b.test)))))))

    def _bht(self, bs) -> List[Constraint]:
        out = []
        sig = self.sig
        for b in bs:
            t = sig.test(b.test)
            kappa = b.kappa if not isinstance(b.kappa, Kappa) else self.norm(b.kappa)
            if not t.combined:
                if "BHT" in self.on and b.op in ("=", "<=", ">=") and b.eps == PVal(b.test, b.data):
                    out.append(Constraint(disj(_not(kappa), b), "BHT"))
                continue
            name = "BHT-or" if t.kind == "disj" else "BHT-and"
            fn = "+" if t.kind == "disj" else "min"
            if name not in self.on or b.op != "<=":
                continue
            if not (isinstance(b.eps, App) and b.eps.fn == fn and len(b.eps.args) == 2):
                continue
            options = []
            for e, sub, comp in zip(b.eps.args, b.data, t.components):
                if e == PVal(comp, sub):
                    options.append([None])
                    continue
                pins = [p for p in bs if p is not b and p.data == sub and p.test == comp
                        and p.op in ("=", "<=") and p.eps == e and p.kappa == b.kappa
                        and (t.kind == "conj" or self.entails(p.body, b.body))]
                options.append(pins)
            for choice in itertools.product(*options):
                pins = [p for p in choice if p is not None]
                if not pins:
                    out.append(Constraint(disj(_not(kappa), b), name))
                    continue
                if t.kind == "disj":
                    out.append(Constraint(disj(*(_not(p) for p in pins), b), name))
                    continue
                # p-values and histories are observable, so one world where the pinned
                # belief holds non-trivially fixes the threshold everywhere
                witnesses = [self._witness(p) for p in pins]
                out.append(Constraint(disj(*(_not(p) for p in pins + witnesses), b), name))
                out.append(Constraint(disj(*(_not(p) for p in pins), b), name, PIN_CAVEAT))
        return out

    # -- decision
    def _valid_normed(self, goal) -> Optional[Proof]:
        cons = self.constraints(goal)
        base = [c for c in cons if c.caveat is None]
        if _unsat([c.formula for c in base] + [_not(goal)]):
            return Proof(_needed(base, goal), ())
        if len(base) == len(cons):
            return None
        if not _unsat([c.formula for c in cons] + [_not(goal)]):
            return None
        needed = list(cons)
        for c in [c for c in cons if c.caveat is not None]:
            trial = [d for d in needed if d is not c]
            if _unsat([d.formula for d in trial] + [_not(goal)]):
                needed = trial
        caveats = tuple(dict.fromkeys(f"{c.schema}: {c.caveat}" for c in needed if c.caveat))
        return Proof(_needed(needed, goal), caveats)

    def prove(self, f) -> Optional[Proof]:
        return self._valid_normed(self.norm(f))


def _needed(cons: List[Constraint], goal) -> Tuple[str, ...]:
    """Schemata whose constraints cannot be dropped, in canonical order."""
    groups: Dict[str, List[Constraint]] = {}
    for c in cons:
        groups.setdefault(c.schema, []).append(c)
    keep = dict(groups)
    for name in list(groups):
        if name in ("prop", "lemma"):
            continue
        trial = [c for n, cs in keep.items() if n != name for c in cs]
        if _unsat([c.formula for c in trial] + [_not(goal)]):
            del keep[name]
    order = ("lemma",) + SCHEMATA
    return tuple(n for n in order if n in keep)


def _neg_implication(op1, e1, op2, e2):
    """Condition on thresholds under which p op1 e1 implies p op2 e2."""
    if op1 == "=":
        return comparison(op2, e1, e2)
    table = {
        ("<=", "<="): "<=", ("<=", "<"): "<", ("<", "<="): "<=", ("<", "<"): "<=",
        (">=", ">="): ">=", (">=", ">"): ">", (">", ">="): ">=", (">", ">"): ">=",
    }
    rel = table.get((op1, op2))
    return None if rel is None else comparison(rel, e1, e2)


def _background(preds) -> List[Constraint]:
    out = []
    pairs: Dict[tuple, tuple] = {}
    for p in preds:
        if p.sym in ("<", "="):
            a, b = p.args
            key = tuple(sorted((_term_key(a), _term_key(b))))
            pairs.setdefault(key, (a, b) if _term_key(a) <= _term_key(b) else (b, a))
        elif p.sym == "sampled":
            out.append(Constraint(disj(Not(p), Pred("followed", p.args[:2])), "prop"))
    for a, b in pairs.values():
        opts = [lt(a, b), eq(a, b), lt(b, a)]
        out.append(Constraint(disj(*opts), "prop"))
        for x, y in itertools.combinations(opts, 2):
            out.append(Constraint(disj(Not(x), Not(y)), "prop"))
    # a term compared with several constants
    consts: Dict[str, List[tuple]] = {}
    for a, b in pairs.values():
        for t, c in ((a, b), (b, a)):
            if _closed(c) and not _closed(t):
                try:
                    v = eval_term({}, c)
                except EvalError:
                    continue
                if isinstance(v, (int, float)) and not isinstance(v, bool):
                    consts.setdefault(_term_key(t), []).append((t, c, v))
    for items in consts.values():
        uniq = {_term_key(c): (t, c, v) for t, c, v in items}
        for (t, c1, v1), (_, c2, v2) in itertools.permutations(uniq.values(), 2):
            if not v1 < v2:
                continue
            # t <= c1 < c2 and c1 < c2 <= t
            out.append(Constraint(disj(Not(lt(t, c1)), lt(t, c2)), "prop"))
            out.append(Constraint(disj(Not(eq(t, c1)), lt(t, c2)), "prop"))
            out.append(Constraint(disj(Not(lt(c2, t)), lt(c1, t)), "prop"))
            out.append(Constraint(disj(Not(eq(t, c2)), lt(c1, t)), "prop"))
            out.append(Constraint(disj(Not(eq(t, c1)), Not(eq(t, c2))), "prop"))
    return out


def atoms_of(f) -> list:
    out: Dict[object, None] = {}

    def walk(g):
        if is_atom(g):
            out.setdefault(g, None)
        elif isinstance(g, Not):
            walk(g.body)
        elif isinstance(g, (And, Or)):
            for p in g.parts:
                walk(p)
    walk(f)
    return list(out)


# ---------------------------------------------------------------- satisfiability


def _simp(f, val: Dict[object, bool]):
    if isinstance(f, (TrueF, FalseF)):
        return f
    if isinstance(f, Not):
        return _not(_simp(f.body, val))
    if isinstance(f, And):
        parts = []
        for p in f.parts:
            q = _simp(p, val)
            if isinstance(q, FalseF):
                return FALSE
            if not isinstance(q, TrueF):
                parts.append(q)
        return conj(*parts)
    if isinstance(f, Or):
        parts = []
        for p in f.parts:
            q = _simp(p, val)
            if isinstance(q, TrueF):
                return TRUE
            if not isinstance(q, FalseF):
                parts.append(q)
        return disj(*parts)
    v = val.get(f)
    if v is None:
        return f
    return TRUE if v else FALSE


def _units(f, out: Dict[object, bool]) -> None:
    if is_atom(f):
        out.setdefault(f, True)
    elif isinstance(f, Not) and is_atom(f.body):
        out.setdefault(f.body, False)
    elif isinstance(f, And):
        for p in f.parts:
            _units(p, out)


def _first_atom(f):
    if is_atom(f):
        return f
    if isinstance(f, Not):
        return _first_atom(f.body)
    for p in f.parts:
        a = _first_atom(p)
        if a is not None:
            return a
    return None


def _sat(fs: list, val: Dict[object, bool]) -> bool:
    while True:
        cur = []
        for f in fs:
            g = _simp(f, val)
            if isinstance(g, FalseF):
                return False
            if not isinstance(g, TrueF):
                cur.append(g)
        if not cur:
            return True
        units: Dict[object, bool] = {}
        for g in cur:
            _units(g, units)
        fresh = {a: v for a, v in units.items() if a not in val}
        if not fresh:
            break
        val = {**val, **fresh}
        fs = cur
    a = _first_atom(min(cur, key=_size))
    return _sat(cur, {**val, a: True}) or _sat(cur, {**val, a: False})


def _size(f) -> int:
    if isinstance(f, (And, Or)):
        return 1 + sum(_size(p) for p in f.parts)
    if isinstance(f, Not):
        return 1 + _size(f.body)
    return 1


def _unsat(fs: list) -> bool:
    return not _sat(list(fs), {})
