"""Judgments, proof trees and the YAML proof-script format."""
from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import yaml

from ..syntax.ast import Formula
from ..syntax.decls import Signature
from ..syntax.errors import BhlError
from ..syntax.parser import load_document, parse_formula, parse_program
from ..syntax.printer import show_formula, show_program

RULES = ("Skip", "UpdVar", "Seq", "If", "Loop", "Conseq", "Hist", "Par",
         "Two-HT", "Low-HT", "Up-HT", "Mult-or", "Mult-and", "Lemma")
DERIVED = ("Two-HT", "Low-HT", "Up-HT", "Mult-or", "Mult-and")
_RULE_ALIASES = {"mult-∨": "Mult-or", "mult-∧": "Mult-and", "assign": "UpdVar",
                 "consequence": "Conseq", "while": "Loop"}
LEMMA_STATUSES = ("assumed", "axiom-schema", "scenario-checked")


class ProofFormatError(BhlError):
    pass


def rule_name(raw: str) -> Optional[str]:
    for r in RULES:
        if r.lower() == raw.strip().lower():
            return r
    return _RULE_ALIASES.get(raw.strip().lower())


@dataclass(frozen=True)
class Judgment:
    pre: Formula
    prog: object
    post: Formula
    env: Optional[str] = None

    def __str__(self) -> str:
        return (f"{{{show_formula(self.pre)}}} {show_program(self.prog)} "
                f"{{{show_formula(self.post)}}}")


@dataclass(frozen=True)
class SideCondition:
    on: str  # "pre" or "post" of a Conseq node
    discharge: str = "auto"
    formula: Optional[Formula] = None
    line: Optional[int] = None


@dataclass(frozen=True)
class ProofTree:
    """A node as written; absent judgment parts are inferred from the parent."""
    rule: str
    pre: Optional[Formula] = None
    prog: object = None
    post: Optional[Formula] = None
    premises: Tuple["ProofTree", ...] = ()
    side_conditions: Tuple[SideCondition, ...] = ()
    bindings: Tuple[Tuple[str, object], ...] = ()
    line: Optional[int] = None

    def binding(self, name: str, default=None):
        for k, v in self.bindings:
            if k == name:
                return v
        return default

    @property
    def conclusion(self) -> Optional[Judgment]:
        if self.pre is None or self.prog is None or self.post is None:
            return None
        return Judgment(self.pre, self.prog, self.post)


@dataclass(frozen=True)
class Lemma:
    name: str
    status: str
    formula: Optional[Formula] = None
    judgment: Optional[Judgment] = None
    line: Optional[int] = None


@dataclass
class LemmaBase:
    """Named validity assertions and judgments, each with a trust status."""
    lemmas: Dict[str, Lemma] = field(default_factory=dict)

    def add(self, lemma: Lemma) -> None:
        if lemma.status not in LEMMA_STATUSES:
            raise ProofFormatError(f"lemma {lemma.name}: unknown status {lemma.status!r}")
        self.lemmas[lemma.name] = lemma

    def get(self, name: str) -> Lemma:
        try:
            return self.lemmas[name]
        except KeyError:
            raise ProofFormatError(f"unknown lemma {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self.lemmas


@dataclass
class ProofScript:
    sig: Signature
    root: ProofTree
    program: object = None
    lemmas: LemmaBase = field(default_factory=LemmaBase)
    defs: Dict[str, Formula] = field(default_factory=dict)
    scenario: Optional[str] = None
    path: Optional[str] = None
    decls_path: Optional[str] = None

    def resolve(self, rel: str) -> str:
        if os.path.isabs(rel) or not self.path:
            return rel
        return os.path.join(os.path.dirname(self.path), rel)


# ---------------------------------------------------------------- loading


class _Loader(yaml.SafeLoader):
    pass


# YAML 1.1 reads on/off/yes/no as booleans, which would turn the side-condition key
# `on` into True; only true/false are booleans here.
_Loader.yaml_implicit_resolvers = {
    ch: [(tag, rx) for tag, rx in rs if tag != "tag:yaml.org,2002:bool"]
    for ch, rs in yaml.SafeLoader.yaml_implicit_resolvers.items()
}
_Loader.add_implicit_resolver("tag:yaml.org,2002:bool",
                              re.compile(r"^(?:true|True|TRUE|false|False|FALSE)$"), list("tTfF"))


def _mapping(loader, node, deep=False):
    m = loader.construct_mapping(node, deep=True)
    m["__line__"] = node.start_mark.line + 1
    return m


_Loader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _mapping)


class _Reader:
    def __init__(self, sig: Signature, defs: Dict[str, Formula], program, source: Optional[str]):
        self.sig = sig
        self.defs = defs
        self.program = program
        self.source = source

    def fail(self, msg: str, line=None):
        from ..syntax.ast import Span
        raise ProofFormatError(msg, Span(line, 1) if line else None, self.source)

    def formula(self, text, line) -> Formula:
        if not isinstance(text, str):
            self.fail(f"expected a formula, found {text!r}", line)
        try:
            return parse_formula(text, self.sig, self.defs, self.source)
        except BhlError as e:
            self.fail(f"in formula {text.strip()!r}: {e.message}", line)

    def prog(self, text, line):
        if not isinstance(text, str):
            self.fail(f"expected a program, found {text!r}", line)
        try:
            return parse_program(text, self.sig, self.source)
        except BhlError as e:
            self.fail(f"in program {text.strip()!r}: {e.message}", line)

    def judgment_fields(self, m: dict, line):
        src = m
        if "conclusion" in m:
            src = m["conclusion"]
            if not isinstance(src, dict):
                self.fail("conclusion must be a mapping", line)
            line = src.get("__line__", line)
        pre = self.formula(src["pre"], line) if src.get("pre") is not None else None
        post = self.formula(src["post"], line) if src.get("post") is not None else None
        raw = src.get("prog", src.get("prog-ref"))
        prog = None
        if raw is not None:
            prog = self.program if raw == "program" else self.prog(raw, line)
        return pre, prog, post

    def node(self, m) -> ProofTree:
        if not isinstance(m, dict):
            self.fail(f"a proof node must be a mapping, found {m!r}")
        line = m.get("__line__")
        if "rule" not in m:
            self.fail("proof node without a rule", line)
        rule = rule_name(str(m["rule"]))
        if rule is None:
            self.fail(f"unknown rule {m['rule']!r}", line)
        pre, prog, post = self.judgment_fields(m, line)
        prem = m.get("premises") or []
        if not isinstance(prem, list):
            self.fail("premises must be a list", line)
        scs = []
        for sc in m.get("side_conditions") or []:
            if not isinstance(sc, dict):
                self.fail("a side condition must be a mapping", line)
            sline = sc.get("__line__", line)
            on = str(sc.get("on", "pre"))
            if on not in ("pre", "post"):
                self.fail(f"side condition 'on' must be pre or post, found {on!r}", sline)
            f = self.formula(sc["formula"], sline) if sc.get("formula") is not None else None
            scs.append(SideCondition(on, str(sc.get("discharge", "auto")), f, sline))
        binds = []
        for k, v in sorted((m.get("bindings") or {}).items()):
            if k == "__line__":
                continue
            if k == "psi":
                v = self.formula(v, line)
            binds.append((k, v))
        return ProofTree(rule, pre, prog, post, tuple(self.node(p) for p in prem),
                         tuple(scs), tuple(binds), line)


def parse_proof(text: str, path: Optional[str] = None, sig: Optional[Signature] = None,
                program=None) -> ProofScript:
    try:
        data = yaml.load(text, Loader=_Loader)
    except yaml.YAMLError as e:
        raise ProofFormatError(f"malformed proof script: {e}", source=path) from None
    if not isinstance(data, dict):
        raise ProofFormatError("a proof script is a mapping", source=path)
    base = os.path.dirname(path) if path else "."
    decls = data.get("decls", data.get("env"))
    decls_path = None
    if decls is not None:
        decls_path = decls if os.path.isabs(decls) else os.path.join(base, decls)
        doc = load_document(decls_path)
        sig, program = doc.sig, doc.program if program is None else program
    elif sig is None:
        raise ProofFormatError("the proof script names no declarations (decls: file.bhp)",
                               source=path)
    defs: Dict[str, Formula] = {}
    reader = _Reader(sig, defs, program, path)
    for name, text_ in (data.get("defs") or {}).items():
        if name == "__line__":
            continue
        defs[name] = reader.formula(text_, data["defs"].get("__line__"))
    lemmas = LemmaBase()
    for name, m in (data.get("lemmas") or {}).items():
        if name == "__line__":
            continue
        line = m.get("__line__") if isinstance(m, dict) else None
        if not isinstance(m, dict):
            reader.fail(f"lemma {name} must be a mapping")
        status = str(m.get("status", "assumed"))
        if m.get("formula") is not None:
            lemma = Lemma(name, status, formula=reader.formula(m["formula"], line), line=line)
        else:
            pre, prog, post = reader.judgment_fields(m, line)
            if pre is None or post is None:
                reader.fail(f"lemma {name} needs a formula or pre/post", line)
            lemma = Lemma(name, status, judgment=Judgment(pre, prog or program, post), line=line)
        try:
            lemmas.add(lemma)
        except ProofFormatError as e:
            reader.fail(e.message, line)
    if "proof" not in data:
        raise ProofFormatError("the proof script has no proof tree", source=path)
    root = reader.node(data["proof"])
    return ProofScript(sig, root, program, lemmas, defs, data.get("scenario"), path, decls_path)


def load_proof(path: str) -> ProofScript:
    with open(path, encoding="utf-8") as fh:
        return parse_proof(fh.read(), path)
