"""Checking derivation trees rule by rule; side conditions go to ``discharge``."""
from __future__ import annotations

import dataclasses
import os
import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from ..kripke.model import (
    Counterexample, Model, build_model, check_valid, judgment_holds, reachable_model,
)
from ..kripke.scenario import Scenario, load_scenario
from ..semantics.values import EvalError
from ..semantics.world import trace_lines
from ..syntax.ast import (
    And, Assign, Belief, Compds, ExistsInt, ForallInt, Hyp, Iff, If, Implies, Kappa, Know,
    Not, Or, Par, PossBelief, Pred, PVal, Seq, Skip, TestCall, While, conj, seq_of,
)
from ..syntax.errors import BhlError
from ..syntax.printer import show_formula, show_program, show_term
from ..syntax.transform import expand_node, expr_to_formula, flatten, subst
from ..wp import hist_subst
from .derived import DerivationError, NeedsContext, apply_derived
from .logic import SCHEMATA, Reasoner, schema_name
from .tree import DERIVED, Judgment, LemmaBase, ProofScript, ProofTree, load_proof


class Rejection(Exception):
    def __init__(self, reason: str, path: str = "", line: Optional[int] = None):
        super().__init__(reason)
        self.reason = reason
        self.path = path
        self.line = line


class CannotInfer(Rejection):
    """A judgment part is neither written down nor fixed by the context."""


# ---------------------------------------------------------------- structural equality

_FLIP = {">": "<", ">=": "<="}
_NEGATE = {"<": ">=", "<=": ">", ">": "<=", ">=": "<", "=": "!=", "!=": "="}


def canon(f, sig):
    """Comparisons oriented, hypothesis sugar unfolded, default histories made explicit."""
    if isinstance(f, Pred):
        if f.sym in _FLIP:
            return Pred(_FLIP[f.sym], (f.args[1], f.args[0]))
        return f
    if isinstance(f, Not):
        if isinstance(f.body, Pred) and f.body.sym in _NEGATE:
            return canon(Pred(_NEGATE[f.body.sym], f.body.args), sig)
        if isinstance(f.body, Not):
            return canon(f.body.body, sig)
        return Not(canon(f.body, sig))
    if isinstance(f, Know):
        return Know(canon(f.body, sig))
    if isinstance(f, (And, Or)):
        return type(f)(tuple(canon(p, sig) for p in f.parts))
    if isinstance(f, (Implies, Iff)):
        return type(f)(canon(f.left, sig), canon(f.right, sig))
    if isinstance(f, (ForallInt, ExistsInt)):
        return type(f)(f.var, canon(f.body, sig))
    if isinstance(f, (Hyp, Compds)):
        return canon(expand_node(f, sig), sig)
    if isinstance(f, (Belief, PossBelief)):
        kappa = f.kappa if f.kappa is not None else Kappa.of(sig.list_tests(f.data, f.test))
        return type(f)(f.op, f.eps, f.data, f.test, canon(f.body, sig), canon(kappa, sig))
    return f


def same(a, b, sig) -> bool:
    return a == b or flatten(canon(a, sig)) == flatten(canon(b, sig))


def _items(c) -> list:
    if isinstance(c, Seq):
        return _items(c.first) + _items(c.second)
    return [c]


# ---------------------------------------------------------------- discharge outcomes


@dataclass(frozen=True)
class Discharged:
    route: str  # "schema", "scenario" or "lemma"
    schemata: Tuple[str, ...] = ()
    caveats: Tuple[str, ...] = ()
    scenario: Optional[str] = None
    detail: str = ""

    def __bool__(self) -> bool:
        return True


@dataclass(frozen=True)
class Assumed:
    reason: str

    def __bool__(self) -> bool:
        return True


@dataclass(frozen=True)
class Refuted:
    reason: str
    witness: Tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return False


_DIRECTIVE = re.compile(r"^\s*([A-Za-z][\w-]*)\s*(?:\((.*)\))?\s*$")


def parse_directive(text: str) -> Tuple[str, List[str]]:
    m = _DIRECTIVE.match(text or "")
    if not m:
        raise ValueError(f"malformed discharge directive {text!r}")
    kind = m.group(1).lower()
    args = [a.strip() for a in (m.group(2) or "").split(",") if a.strip()]
    if kind not in ("auto", "schema", "scenario", "assume", "lemma"):
        raise ValueError(f"unknown discharge directive {kind!r}")
    if kind in ("schema", "lemma") and not args:
        raise ValueError(f"{kind}(...) needs an argument")
    return kind, args


class Scenarios:
    """Scenario lookup by name, with one reachable-state model per scenario."""

    def __init__(self, default: Optional[Scenario] = None, base: str = ".", prog=None):
        self.default = default
        self.base = base
        self.prog = prog
        self._loaded: Dict[str, Scenario] = {}
        self._models: Dict[str, Model] = {}

    def get(self, name: Optional[str]) -> Scenario:
        if name is None:
            if self.default is None:
                raise ValueError("no scenario was given for model checking")
            return self.default
        if self.default is not None and name in (self.default.name, self.default.path):
            return self.default
        if name not in self._loaded:
            path = name if os.path.isabs(name) else os.path.join(self.base, name)
            if not os.path.exists(path):
                raise ValueError(f"unknown scenario {name!r}")
            self._loaded[name] = load_scenario(path)
        return self._loaded[name]

    def model(self, sc: Scenario) -> Model:
        key = sc.path or id(sc)
        if key not in self._models:
            prog = self.prog if self.prog is not None else sc.program
            if prog is None:
                self._models[key] = Model(sc.sig, sc.initial_worlds(sc.registry()),
                                          sc.registry(), sc.int_bound)
            else:
                self._models[key] = reachable_model(sc, prog)
        return self._models[key]


def _model_check(cond, sc: Scenario, scenarios: Scenarios):
    try:
        res = check_valid(scenarios.model(sc), cond)
    except EvalError as e:
        return Refuted(f"evaluation error on scenario {sc.name}: {e}")
    if isinstance(res, Counterexample):
        return Refuted(f"counterexample in scenario {sc.name}", tuple(trace_lines(res.world)))
    return Discharged("scenario", scenario=sc.name, detail=f"valid in {res.worlds} worlds")


def discharge(cond, directive: str, sig, scenarios: Optional[Scenarios] = None,
              lemmas: Optional[LemmaBase] = None):
    """Decide a validity obligation by the route the directive names."""
    kind, args = parse_directive(directive)
    if kind == "assume":
        return Assumed("assumed by directive")
    if kind == "scenario":
        scenarios = scenarios or Scenarios()
        try:
            sc = scenarios.get(args[0] if args else None)
        except (ValueError, BhlError) as e:
            return Refuted(str(e))
        return _model_check(cond, sc, scenarios)
    if kind == "lemma":
        if lemmas is None or args[0] not in lemmas:
            return Refuted(f"unknown lemma {args[0]!r}")
        lem = lemmas.get(args[0])
        if lem.formula is None:
            return Refuted(f"lemma {lem.name} is a judgment, not a validity assertion")
        proof = Reasoner(sig, SCHEMATA, extra=(lem.formula,)).prove(cond)
        if proof is None:
            return Refuted(f"the obligation does not follow from lemma {lem.name}")
        return Discharged("lemma", proof.schemata, proof.caveats, detail=lem.name)
    names = SCHEMATA
    if kind == "schema":
        try:
            names = tuple(dict.fromkeys(schema_name(a) for a in args))
        except KeyError as e:
            return Refuted(f"unknown schema {e.args[0]!r}")
    proof = Reasoner(sig, names).prove(cond)
    if proof is None:
        which = "the built-in schemata" if kind == "auto" else "schemata " + ", ".join(names)
        return Refuted(f"not derivable with {which}")
    return Discharged("schema", proof.schemata, proof.caveats)


# ---------------------------------------------------------------- report


@dataclass
class CheckReport:
    verdict: str = "Accepted"
    reason: str = ""
    path: str = ""
    line: Optional[int] = None
    source: Optional[str] = None
    conclusion: Optional[Judgment] = None
    nodes: int = 0
    discharged: List[dict] = field(default_factory=list)
    model_checked: List[dict] = field(default_factory=list)
    assumed: List[dict] = field(default_factory=list)
    advisories: List[dict] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)
    witness: List[str] = field(default_factory=list)

    @property
    def accepted(self) -> bool:
        return self.verdict == "Accepted"

    def to_dict(self) -> dict:
        out = {
            "kind": "proof-check",
            "source": self.source,
            "verdict": self.verdict,
            "conclusion": None if self.conclusion is None else {
                "pre": show_formula(self.conclusion.pre),
                "prog": show_program(self.conclusion.prog),
                "post": show_formula(self.conclusion.post),
            },
            "nodes": self.nodes,
            "discharged": self.discharged,
            "model_checked": self.model_checked,
            "assumed": self.assumed,
            "advisories": self.advisories,
            "warnings": self.warnings,
        }
        if not self.accepted:
            out["reason"] = self.reason
            out["path"] = self.path
            out["line"] = self.line
            out["witness"] = self.witness
        return out

    def to_text(self) -> str:
        name = os.path.basename(self.source) if self.source else "<proof>"
        if self.accepted:
            lines = [f"{name}: Accepted"]
        else:
            at = self.path + (f" (line {self.line})" if self.line else "")
            lines = [f"{name}: Rejected: {self.reason}", f"  at {at}"]
            lines += ["  " + w for w in self.witness]
        if self.conclusion is not None:
            lines.append(f"conclusion: {self.conclusion}")
        lines.append(f"nodes checked: {self.nodes}; side conditions: "
                     f"{len(self.discharged)} by schema, {len(self.model_checked)} model-checked, "
                     f"{len(self.assumed)} assumed")
        for d in self.discharged:
            via = ", ".join(d["schemata"]) or "propositional reasoning"
            lines.append(f"  discharged [{d['path']}] {d['on']}: {via}")
        for d in self.model_checked:
            lines.append(f"  model-checked [{d['path']}] {d['on']} on {d['scenario']}: "
                         f"{d['result']}")
        for d in self.assumed:
            lines.append(f"  ASSUMED [{d['path']}] {d['on']}: {d['formula']}")
        for a in self.advisories:
            lines.append(f"  advisory [{a['path']}] {a['formula']}: {a['status']}")
        for w in self.warnings:
            lines.append(f"  warning: {w}")
        return "\n".join(lines)


# ---------------------------------------------------------------- the checker


class _Checker:
    def __init__(self, sig, program, lemmas: LemmaBase, scenarios: Scenarios):
        self.sig = sig
        self.program = program
        self.lemmas = lemmas
        self.scenarios = scenarios
        self.report = CheckReport()

    # -- helpers
    def _snapshot(self):
        r = self.report
        return (r.nodes, len(r.discharged), len(r.model_checked), len(r.assumed),
                len(r.advisories), len(r.warnings))

    def _restore(self, snap) -> None:
        r = self.report
        r.nodes = snap[0]
        del r.discharged[snap[1]:], r.model_checked[snap[2]:], r.assumed[snap[3]:]
        del r.advisories[snap[4]:], r.warnings[snap[5]:]

    def _same(self, a, b) -> bool:
        return same(a, b, self.sig)

    def _meet(self, given, wanted, what: str, node, path):
        if given is not None and wanted is not None and not self._same(given, wanted):
            raise Rejection(f"{what} mismatch: the node states {show_formula(given)} but its "
                            f"context requires {show_formula(wanted)}", path, node.line)
        return given if given is not None else wanted

    def _shape(self, node, path, rule: str, expected: str, found) -> Rejection:
        return Rejection(f"{rule} expects {expected}, found {show_program(found)}", path, node.line)

    def _arity(self, node, path, n: int) -> None:
        if len(node.premises) != n:
            raise Rejection(f"{node.rule} takes {n} premise(s), found {len(node.premises)}",
                            path, node.line)

    @staticmethod
    def _child(path: str, i: int, node) -> str:
        return f"{path}/{i + 1}:{node.rule}"

    # -- entry
    def check(self, node: ProofTree, path: str, pre=None, prog=None, post=None) -> Judgment:
        pre = self._meet(node.pre, pre, "precondition", node, path)
        post = self._meet(node.post, post, "postcondition", node, path)
        if node.prog is not None and prog is not None and node.prog != prog:
            raise Rejection(f"program mismatch: the node states {show_program(node.prog)} but "
                            f"its context requires {show_program(prog)}", path, node.line)
        prog = node.prog if node.prog is not None else prog
        if prog is None:
            raise CannotInfer("the program of the node is not known", path, node.line)
        if node.rule in DERIVED:
            j = self._derived(node, path, pre, prog, post)
        else:
            handler = getattr(self, "_" + node.rule.lower().replace("-", "_"))
            j = handler(node, path, pre, prog, post)
        self.report.nodes += 1
        return j

    # -- basic rules
    def _skip(self, node, path, pre, prog, post):
        self._arity(node, path, 0)
        if not isinstance(prog, Skip):
            raise self._shape(node, path, "Skip", "skip", prog)
        if pre is None and post is None:
            raise CannotInfer("Skip: neither pre nor post is known", path, node.line)
        if pre is not None and post is not None and not self._same(pre, post):
            raise Rejection(f"Skip needs equal pre and post, found {show_formula(pre)} and "
                            f"{show_formula(post)}", path, node.line)
        return Judgment(pre if pre is not None else post, prog, post if post is not None else pre)

    def _substituted(self, node, path, rule, pre, prog, post, mapping, label):
        if post is None:
            raise CannotInfer(f"{rule}: the postcondition is not known", path, node.line)
        try:
            expect = subst(post, mapping, self.sig)
        except ValueError as e:
            raise Rejection(f"{rule}: {e}", path, node.line) from None
        if pre is not None and not self._same(pre, expect):
            raise Rejection(f"{rule} shape mismatch: expected pre {label} = "
                            f"{show_formula(expect)}, found {show_formula(pre)}", path, node.line)
        return Judgment(pre if pre is not None else expect, prog, post)

    def _updvar(self, node, path, pre, prog, post):
        self._arity(node, path, 0)
        if not isinstance(prog, Assign):
            raise self._shape(node, path, "UpdVar", "an assignment v := e", prog)
        return self._substituted(node, path, "UpdVar", pre, prog, post, {prog.var: prog.expr},
                                 f"post[{prog.var} := {show_term(prog.expr, program=True)}]")

    def _hist(self, node, path, pre, prog, post):
        self._arity(node, path, 0)
        if not isinstance(prog, TestCall):
            raise self._shape(node, path, "Hist", "a test call v := A(y)", prog)
        sig = self.sig
        if sig.test(prog.test).combined:
            raise Rejection(f"Hist needs an atomic test; {prog.test} is combined", path, node.line)
        if prog.hist_key not in sig.hist_universe():
            raise Rejection(f"type side condition: {prog.hist_key} is not a declared history "
                            "variable", path, node.line)
        d = sig.vars.get(prog.var)
        if d is None or not d.visible or d.type != "prob":
            raise Rejection(f"type side condition: {prog.var} must be an observable prob "
                            "variable", path, node.line)
        key = prog.hist_key
        return self._substituted(node, path, "Hist", pre, prog, post, hist_subst(prog),
                                 f"post[{prog.var} := {show_term(PVal(prog.test, prog.data))}, "
                                 f"{key} := {key} + 1]")

    def _seq(self, node, path, pre, prog, post):
        if not isinstance(prog, Seq):
            raise self._shape(node, path, "Seq", "a sequence C1; C2", prog)
        if len(node.premises) < 2:
            raise Rejection(f"Seq takes at least 2 premises, found {len(node.premises)}",
                            path, node.line)
        items = _items(prog)
        progs, pos, n = [], 0, len(node.premises)
        for i, p in enumerate(node.premises):
            if p.prog is not None:
                k = len(_items(p.prog))
                if items[pos:pos + k] != _items(p.prog):
                    raise Rejection(f"Seq premise {i + 1} proves {show_program(p.prog)}, which "
                                    "is not the next part of the program", path, node.line)
                progs.append(p.prog)
                pos += k
            elif i == n - 1:
                if pos >= len(items):
                    raise Rejection("Seq premises cover more than the program", path, node.line)
                progs.append(seq_of(*items[pos:]))
                pos = len(items)
            else:
                if pos >= len(items):
                    raise Rejection("Seq premises cover more than the program", path, node.line)
                progs.append(items[pos])
                pos += 1
        if pos != len(items):
            raise Rejection("Seq premises do not cover the whole program", path, node.line)
        paths = [self._child(path, i, p) for i, p in enumerate(node.premises)]
        first, last = self._chain(list(node.premises), progs, paths, pre, post)
        return Judgment(first.pre, prog, last.post)

    def _chain(self, nodes, progs, paths, pre, post):
        if len(nodes) == 1:
            j = self.check(nodes[0], paths[0], pre, progs[0], post)
            return j, j
        head, rest = nodes[0], nodes[1:]
        mid = head.post if head.post is not None else rest[0].pre
        if mid is not None:
            j1 = self.check(head, paths[0], pre, progs[0], mid)
            _, jn = self._chain(rest, progs[1:], paths[1:], j1.post, post)
            return j1, jn
        snap = self._snapshot()
        try:
            j2, jn = self._chain(rest, progs[1:], paths[1:], None, post)
        except CannotInfer:
            self._restore(snap)
            j1 = self.check(head, paths[0], pre, progs[0], None)
            _, jn = self._chain(rest, progs[1:], paths[1:], j1.post, post)
            return j1, jn
        j1 = self.check(head, paths[0], pre, progs[0], j2.pre)
        return j1, jn

    def _if(self, node, path, pre, prog, post):
        self._arity(node, path, 2)
        if not isinstance(prog, If):
            raise self._shape(node, path, "If", "a conditional", prog)
        e = expr_to_formula(prog.cond)
        p1, p2 = node.premises
        if pre is None and p1.pre is not None:
            parts = list(flatten(p1.pre).parts) if isinstance(flatten(p1.pre), And) else [p1.pre]
            if parts and self._same(parts[-1], e):
                pre = conj(*parts[:-1])
        if pre is None:
            raise CannotInfer("If: the precondition is not known", path, node.line)
        j1 = self.check(p1, self._child(path, 0, p1), conj(pre, e), prog.then, post)
        j2 = self.check(p2, self._child(path, 1, p2), conj(pre, Not(e)), prog.orelse, j1.post)
        return Judgment(pre, prog, j1.post)

    def _loop(self, node, path, pre, prog, post):
        self._arity(node, path, 1)
        if not isinstance(prog, While):
            raise self._shape(node, path, "Loop", "a while loop", prog)
        inv = pre if pre is not None else prog.invariant
        if inv is None:
            raise CannotInfer("Loop: the invariant is not known", path, node.line)
        if prog.invariant is not None and not self._same(inv, prog.invariant):
            raise Rejection("Loop: the precondition differs from the loop's invariant "
                            "annotation", path, node.line)
        e = expr_to_formula(prog.cond)
        p = node.premises[0]
        self.check(p, self._child(path, 0, p), conj(inv, e), prog.body, inv)
        exit_ = conj(inv, Not(e))
        if post is not None and not self._same(post, exit_):
            raise Rejection(f"Loop shape mismatch: expected post {show_formula(exit_)}, found "
                            f"{show_formula(post)}", path, node.line)
        return Judgment(inv, prog, exit_)

    def _par(self, node, path, pre, prog, post):
        self._arity(node, path, 1)
        if not isinstance(prog, Par):
            raise self._shape(node, path, "Par", "a parallel composition", prog)
        p = node.premises[0]
        j = self.check(p, self._child(path, 0, p), pre, Seq(prog.left, prog.right), post)
        return Judgment(j.pre, prog, j.post)

    def _conseq(self, node, path, pre, prog, post):
        self._arity(node, path, 1)
        p = node.premises[0]
        ppath = self._child(path, 0, p)
        j = None
        attempts = list(dict.fromkeys([(None, None), (pre, None), (None, post), (pre, post)]))
        for i, (wp_, wq) in enumerate(attempts):
            snap = self._snapshot()
            try:
                j = self.check(p, ppath, wp_, prog, wq)
                break
            except CannotInfer:
                self._restore(snap)
                if i == len(attempts) - 1:
                    raise
        pre = pre if pre is not None else j.pre
        post = post if post is not None else j.post
        declared = {sc.on: sc for sc in node.side_conditions}
        for on, lhs, rhs in (("pre", pre, j.pre), ("post", j.post, post)):
            sc = declared.get(on)
            self._obligation(node, path, on, lhs, rhs, sc)
        return Judgment(pre, prog, post)

    def _obligation(self, node, path, on, lhs, rhs, sc) -> None:
        goal = Implies(lhs, rhs)
        if sc is not None and sc.formula is not None and not self._same(sc.formula, goal):
            raise Rejection(f"the {on} side condition states {show_formula(sc.formula)} but the "
                            f"rule needs {show_formula(goal)}", path, sc.line or node.line)
        if self._same(lhs, rhs):
            return
        directive = sc.discharge if sc is not None else "auto"
        line = sc.line if sc is not None and sc.line else node.line
        try:
            res = discharge(goal, directive, self.sig, self.scenarios, self.lemmas)
        except ValueError as e:
            raise Rejection(str(e), path, line) from None
        text = show_formula(goal)
        if isinstance(res, Refuted):
            r = Rejection(f"{on} side condition refuted: {res.reason}: {text}", path, line)
            self.report.witness = list(res.witness)
            raise r
        if isinstance(res, Assumed):
            self.report.assumed.append({"path": path, "on": on, "formula": text,
                                        "reason": res.reason})
            return
        if res.route == "scenario":
            self.report.model_checked.append({"path": path, "on": on, "formula": text,
                                              "scenario": res.scenario, "result": res.detail})
            return
        entry = {"path": path, "on": on, "formula": text, "route": res.route,
                 "schemata": list(res.schemata), "caveats": list(res.caveats)}
        if res.route == "lemma":
            lem = self.lemmas.get(res.detail)
            entry["lemma"] = lem.name
            self._use_lemma(lem, path, line)
        self.report.discharged.append(entry)
        if res.caveats:
            self._cross_check(goal, path, on, line, res.caveats)

    def _cross_check(self, goal, path, on, line, caveats) -> None:
        if self.scenarios.default is None:
            for c in caveats:
                self.report.warnings.append(f"[{path}] {on}: unchecked caveat, {c}")
            return
        sc = self.scenarios.default
        res = _model_check(goal, sc, self.scenarios)
        if isinstance(res, Refuted):
            self.report.witness = list(res.witness)
            raise Rejection(f"{on} side condition used a caveated schema and fails on the "
                            f"scenario: {res.reason}", path, line)
        for c in caveats:
            self.report.warnings.append(f"[{path}] {on}: caveat cross-checked on {sc.name}, {c}")

    def _use_lemma(self, lem, path, line) -> None:
        if lem.status == "assumed":
            rec = {"path": path, "on": "lemma", "formula": lem.name, "reason": "assumed lemma"}
            if rec not in self.report.assumed:
                self.report.assumed.append(rec)
            return
        f = lem.formula
        if lem.status == "axiom-schema":
            if f is None or Reasoner(self.sig).prove(f) is None:
                raise Rejection(f"lemma {lem.name} is not an instance of the built-in schemata",
                                path, line)
            return
        try:
            sc = self.scenarios.get(None)
        except ValueError:
            raise Rejection(f"lemma {lem.name} is scenario-checked but no scenario was given",
                            path, line) from None
        if f is not None:
            res = _model_check(f, sc, self.scenarios)
        else:
            j = lem.judgment
            try:
                res = judgment_holds(self.scenarios.model(sc), j.pre, j.prog, j.post)
            except EvalError as e:
                res = Refuted(f"evaluation error: {e}")
            if isinstance(res, Counterexample):
                res = Refuted(f"counterexample in scenario {sc.name}", tuple(trace_lines(res.world)))
        if isinstance(res, Refuted):
            self.report.witness = list(res.witness)
            raise Rejection(f"lemma {lem.name}: {res.reason}", path, line)
        rec = {"path": path, "on": "lemma", "formula": lem.name, "scenario": sc.name,
               "result": "holds"}
        if rec not in self.report.model_checked:
            self.report.model_checked.append(rec)

    def _lemma(self, node, path, pre, prog, post):
        self._arity(node, path, 0)
        name = node.binding("name")
        if name is None or name not in self.lemmas:
            raise Rejection(f"Lemma: unknown lemma {name!r}", path, node.line)
        lem = self.lemmas.get(name)
        j = lem.judgment
        if j is None:
            raise Rejection(f"Lemma: {name} is a validity assertion, not a judgment", path,
                            node.line)
        if j.prog != prog:
            raise Rejection(f"Lemma {name} is about {show_program(j.prog)}, not "
                            f"{show_program(prog)}", path, node.line)
        self._meet(j.pre, pre, "precondition", node, path)
        self._meet(j.post, post, "postcondition", node, path)
        self._use_lemma(lem, path, node.line)
        return Judgment(j.pre, prog, j.post)

    # -- derived rules
    def _derived(self, node, path, pre, prog, post):
        self._arity(node, path, 0)
        try:
            tree = apply_derived(node.rule, self.sig, prog, pre, dict(node.bindings))
        except NeedsContext as e:
            raise CannotInfer(e.message, path, node.line) from None
        except DerivationError as e:
            raise Rejection(e.message, path, node.line) from None
        concl = tree.conclusion
        self._meet(concl.pre, pre, "precondition", node, path)
        self._meet(concl.post, post, "postcondition", node, path)
        self.check(tree, f"{path}/expanded:Conseq")
        adv = tree.binding("advisory")
        if adv is not None:
            self._advise(adv, path)
        return Judgment(concl.pre, prog, concl.post)

    def _advise(self, adv, path) -> None:
        status = "not checked (no scenario)"
        if self.scenarios.default is not None:
            sc = self.scenarios.default
            res = _model_check(adv, sc, self.scenarios)
            status = (f"holds on {sc.name}" if not isinstance(res, Refuted)
                      else f"fails on {sc.name}; the concluded belief may be vacuous there")
        self.report.advisories.append({"path": path, "formula": show_formula(adv),
                                       "status": status})


def check_proof(t, lemmas: Optional[LemmaBase] = None, scenario=None, *, sig=None,
                program=None) -> CheckReport:
    """Check a proof script (or a bare tree with ``sig``) and return the report.

    ``scenario`` (a Scenario or a path) enables scenario discharge, cross-checks of
    caveated schemata, and a final model check of the concluded judgment.
    """
    source = None
    if isinstance(t, str):
        t = load_proof(t)
    if isinstance(t, ProofScript):
        sig = t.sig
        program = t.program if program is None else program
        lemmas = t.lemmas if lemmas is None else lemmas
        source = t.path
        base = os.path.dirname(t.path) if t.path else "."
        if scenario is None and t.scenario is not None:
            scenario = t.resolve(t.scenario)
        root = t.root
    else:
        root, base = t, "."
    if sig is None:
        raise ValueError("checking a bare proof tree needs the declarations")
    if isinstance(scenario, str):
        scenario = load_scenario(scenario)
    root_prog = root.prog if root.prog is not None else program
    checker = _Checker(sig, program, lemmas or LemmaBase(),
                       Scenarios(scenario, base, root_prog))
    report = checker.report
    report.source = source
    try:
        j = checker.check(root, root.rule, None, root_prog, None)
        report.conclusion = Judgment(flatten(j.pre), j.prog, flatten(j.post))
        if scenario is not None:
            _final_check(j, scenario, report)
    except Rejection as r:
        report.verdict = "Rejected"
        report.reason, report.path, report.line = r.reason, r.path, r.line
    except (BhlError, EvalError) as e:
        report.verdict = "Rejected"
        report.reason, report.path = str(e), root.rule
    return report


def _final_check(j: Judgment, sc: Scenario, report: CheckReport) -> None:
    model = build_model(dataclasses.replace(sc, program=None))
    try:
        res = judgment_holds(model, j.pre, j.prog, j.post)
    except EvalError as e:
        raise Rejection(f"the conclusion cannot be evaluated on {sc.name}: {e}", "conclusion")
    if isinstance(res, Counterexample):
        report.witness = trace_lines(res.world)
        raise Rejection(f"the concluded judgment has a counterexample in scenario {sc.name}",
                        "conclusion")
    report.model_checked.append({"path": "conclusion", "on": "judgment", "formula": str(j),
                                 "scenario": sc.name,
                                 "result": f"holds ({res.checked} initial worlds satisfy pre)"})
    report.warnings.extend(w for w in model.warnings if w not in report.warnings)
