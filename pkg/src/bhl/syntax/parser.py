"""Recursive-descent parsers for programs, assertions and declaration files."""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from .ast import (
    And, App, Assert, Assign, Belief, Compds, Const, ExistsInt, FalseF, ForallInt,
    Formula, HistKey, HistVar, Hyp, HYP_KINDS, If, Iff, Implies, IntVar, Kappa, Know,
    Neg, Not, Or, Par, PossBelief, Pred, PVal, Seq, Skip, Span, TestCall, Term,
    TrueF, Var, While, COMPARISONS, is_atomic_ref,
)
from .decls import ATOMIC_KINDS, COMBINED_KINDS, TAILS, Signature, TestDecl, VarDecl
from .errors import DeclError, ParseError
from .lexer import Token, tokenize

# name -> arity; None means variadic is not supported, every symbol is fixed
FUNCTIONS: Dict[str, int] = {
    "mean": 1, "size": 1, "sum": 1, "abs": 1, "sqrt": 1, "exp": 1, "log": 1,
    "min": 2, "max": 2, "Normal": 2, "Marginal": 3, "pair": 2, "fst": 1, "snd": 1,
    "ite": 3, "csv": 1,
}
# boolean operators written in function form inside assertion terms
BOOL_WORDS = {
    "lt": "<", "le": "<=", "gt": ">", "ge": ">=", "eq": "=", "ne": "!=",
    "band": "and", "bor": "or", "bnot": "not",
}
BOOL_NAMES = {v: k for k, v in BOOL_WORDS.items()}
ARITH = {"+": 2, "-": 2, "*": 2, "/": 2, "neg": 1}
BOOL_ARITY = {"<": 2, "<=": 2, ">": 2, ">=": 2, "=": 2, "!=": 2, "and": 2, "or": 2, "not": 1}

RESERVED = {
    "skip", "if", "else", "while", "invariant", "assert", "and", "or", "not", "K", "P",
    "forall", "exists", "true", "false", "Belief", "Poss", "kappa", "compds", "sampled",
    "followed", "Neg", "hist",
} | set(HYP_KINDS)

BELIEF_OPS = ("=", "<", "<=", ">", ">=")
DECL_WORDS = {
    "obs", "inv", "dataset", "test", "histories", "int_bound", "grid", "data", "init",
    "sample", "nosample", "include", "program", "budget",
}


def fn_arity(fn: str) -> int:
    if fn in ARITH:
        return ARITH[fn]
    if fn in BOOL_ARITY:
        return BOOL_ARITY[fn]
    return FUNCTIONS[fn]


@dataclass
class Document:
    """Parsed declaration file: a signature, scenario directives and a program."""
    sig: Signature
    directives: List[tuple] = field(default_factory=list)
    program: object = None
    path: Optional[str] = None


class Parser:
    def __init__(self, text: str, sig: Optional[Signature] = None,
                 source: Optional[str] = None, defs: Optional[Dict[str, Formula]] = None):
        self.tokens = tokenize(text, source)
        self.pos = 0
        self.sig = sig
        self.source = source
        self.defs = defs or {}
        self.bound: List[str] = []

    # ------------------------------------------------------------ helpers
    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.pos + k, len(self.tokens) - 1)]

    def advance(self) -> Token:
        t = self.tokens[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def error(self, msg: str, tok: Optional[Token] = None) -> ParseError:
        tok = tok or self.tok
        return ParseError(msg, tok.span, self.source)

    def accept_op(self, *ops: str) -> Optional[Token]:
        if self.tok.is_op(*ops):
            return self.advance()
        return None

    def expect_op(self, op: str) -> Token:
        if not self.tok.is_op(op):
            found = self.tok.value or "end of input"
            raise self.error(f"expected '{op}', found '{found}'")
        return self.advance()

    def accept_word(self, *words: str) -> Optional[Token]:
        if self.tok.is_word(*words):
            return self.advance()
        return None

    def expect_word(self, word: str) -> Token:
        if not self.tok.is_word(word):
            raise self.error(f"expected '{word}', found '{self.tok.value or 'end of input'}'")
        return self.advance()

    def ident(self, what: str = "identifier") -> str:
        t = self.tok
        if t.kind != "ident" or t.value in RESERVED:
            raise self.error(f"expected {what}, found '{t.value or 'end of input'}'")
        self.advance()
        return t.value

    def expect_eof(self) -> None:
        if self.tok.kind != "eof":
            raise self.error(f"unexpected '{self.tok.value}'")

    def number(self) -> object:
        neg = bool(self.accept_op("-"))
        t = self.tok
        if t.kind != "num":
            raise self.error("expected a number")
        self.advance()
        v = _num(t.value)
        return -v if neg else v

    # ------------------------------------------------------------ data references
    def dataref(self) -> tuple:
        if self.accept_op("("):
            elems = [self._ref_elem()]
            while self.accept_op(","):
                elems.append(self._ref_elem())
            self.expect_op(")")
            if all(isinstance(e, str) for e in elems):
                return tuple(elems)
            return tuple((e,) if isinstance(e, str) else e for e in elems)
        return (self.ident("dataset variable"),)

    def _ref_elem(self):
        if self.tok.is_op("("):
            return self.dataref()
        return self.ident("dataset variable")

    def test_id(self) -> str:
        t = self.tok
        name = self.ident("test id")
        if self.sig is not None and name not in self.sig.tests:
            raise self.error(f"unknown test id '{name}'", t)
        return name

    def _check_ref(self, ref, tid, tok) -> None:
        if self.sig is not None:
            try:
                self.sig.check_ref(ref, tid)
            except DeclError as e:
                raise ParseError(e.message, tok.span, self.source) from None

    # ------------------------------------------------------------ terms
    def term(self, program: bool = False) -> Term:
        return self._additive(program)

    def _additive(self, program: bool) -> Term:
        left = self._multiplicative(program)
        while self.tok.is_op("+", "-"):
            op = self.advance().value
            left = App(op, (left, self._multiplicative(program)))
        return left

    def _multiplicative(self, program: bool) -> Term:
        left = self._unary_term(program)
        while self.tok.is_op("*", "/"):
            op = self.advance().value
            left = App(op, (left, self._unary_term(program)))
        return left

    def _unary_term(self, program: bool) -> Term:
        if self.tok.is_op("-"):
            self.advance()
            if self.tok.kind == "num":
                return Const(-_num(self.advance().value))
            return App("neg", (self._unary_term(program),))
        return self._primary(program)

    def _primary(self, program: bool) -> Term:
        t = self.tok
        if t.kind == "num":
            self.advance()
            return Const(_num(t.value))
        if t.kind == "str":
            self.advance()
            return Const(t.value)
        if t.is_word("true", "false"):
            self.advance()
            return Const(t.value == "true")
        if t.is_op("["):
            return self._list_literal()
        if t.is_op("("):
            self.advance()
            inner = self.expr() if program else self.term()
            self.expect_op(")")
            return inner
        if t.is_word("hist"):
            self.advance()
            self.expect_op("(")
            ref = self.dataref()
            self.expect_op(",")
            tt = self.tok
            tid = self.test_id()
            self.expect_op(")")
            self._check_ref(ref, tid, tt)
            return HistVar(HistKey(tid, ref))
        if t.kind != "ident" or t.value in RESERVED:
            raise self.error(f"expected a term, found '{t.value or 'end of input'}'")
        name = self.advance().value
        if not self.tok.is_op("("):
            if name in self.bound:
                return IntVar(name)
            return Var(name)
        if name in FUNCTIONS or (not program and name in BOOL_WORDS):
            fn = BOOL_WORDS.get(name, name) if not program else name
            self.advance()
            args = []
            if not self.tok.is_op(")"):
                args.append(self.expr() if program else self.term())
                while self.accept_op(","):
                    args.append(self.expr() if program else self.term())
            self.expect_op(")")
            if len(args) != fn_arity(fn):
                raise self.error(f"{name} takes {fn_arity(fn)} argument(s), got {len(args)}", t)
            return App(fn, tuple(args))
        if self.sig is not None and name not in self.sig.tests:
            raise self.error(f"unknown function or test '{name}'", t)
        # test procedure application f_A(y)
        self.pos -= 1
        tid = self.ident("test id")
        if not self.tok.is_op("("):
            raise self.error("expected dataset arguments")
        ref = self.dataref()
        self._check_ref(ref, tid, t)
        return PVal(tid, ref)

    def _list_literal(self) -> Term:
        self.expect_op("[")
        items: list = []
        if not self.tok.is_op("]"):
            items.append(self._list_item())
            while self.accept_op(","):
                items.append(self._list_item())
        self.expect_op("]")
        return Const(tuple(items))

    def _list_item(self):
        if self.tok.is_op("["):
            return self._list_literal().value
        return self.number()

    # ------------------------------------------------------------ program expressions
    def expr(self) -> Term:
        left = self._expr_and()
        while self.accept_word("or"):
            left = App("or", (left, self._expr_and()))
        return left

    def _expr_and(self) -> Term:
        left = self._expr_not()
        while self.accept_word("and"):
            left = App("and", (left, self._expr_not()))
        return left

    def _expr_not(self) -> Term:
        if self.accept_word("not"):
            return App("not", (self._expr_not(),))
        left = self.term(program=True)
        if self.tok.is_op(*COMPARISONS):
            op = self.advance().value
            return App(op, (left, self.term(program=True)))
        return left

    # ------------------------------------------------------------ formulas
    def formula(self) -> Formula:
        left = self._implies()
        while self.accept_op("<->"):
            left = Iff(left, self._implies())
        return left

    def _implies(self) -> Formula:
        left = self._or()
        if self.accept_op("->"):
            return Implies(left, self._implies())
        return left

    def _or(self) -> Formula:
        parts = [self._and()]
        while self.accept_word("or"):
            parts.append(self._and())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def _and(self) -> Formula:
        parts = [self._unary()]
        while self.accept_word("and"):
            parts.append(self._unary())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def _unary(self) -> Formula:
        t = self.tok
        if self.accept_word("not"):
            return Not(self._unary())
        if self.accept_word("K"):
            return Know(self._unary())
        if self.accept_word("P"):
            return Not(Know(Not(self._unary())))
        if t.is_word("forall", "exists"):
            self.advance()
            name = self.ident("integer variable")
            if self.sig is not None and name in self.sig.vars:
                raise self.error(f"cannot quantify over program variable '{name}'", t)
            self.expect_op(".")
            self.bound.append(name)
            try:
                body = self.formula()
            finally:
                self.bound.pop()
            return ForallInt(name, body) if t.value == "forall" else ExistsInt(name, body)
        if t.is_word("Belief", "Poss"):
            self.advance()
            op, eps, ref, tid, kappa = self._belief_header()
            body = self._unary()
            cls = Belief if t.value == "Belief" else PossBelief
            return cls(op, eps, ref, tid, body, kappa)
        return self._atom()

    def _belief_header(self):
        self.expect_op("[")
        op = "="
        if self.tok.is_op(*BELIEF_OPS):
            op = self.advance().value
        eps = self.term()
        self.expect_op(";")
        rt = self.tok
        ref = self.dataref()
        self.expect_op(";")
        tid = self.test_id()
        self._check_ref(ref, tid, rt)
        kappa = None
        if self.accept_op(";"):
            kappa = self.formula()
        self.expect_op("]")
        return op, eps, ref, tid, kappa

    def _atom(self) -> Formula:
        t = self.tok
        if self.accept_word("true"):
            return TrueF()
        if self.accept_word("false"):
            return FalseF()
        if t.is_op("$"):
            self.advance()
            name = self.tok.value
            self.advance()
            if name not in self.defs:
                raise self.error(f"undefined formula abbreviation '${name}'", t)
            return self.defs[name]
        if t.is_word("kappa"):
            self.advance()
            self.expect_op("{")
            pairs = []
            if not self.tok.is_op("}"):
                pairs.append(self._kappa_pair())
                while self.accept_op(","):
                    pairs.append(self._kappa_pair())
            self.expect_op("}")
            return Kappa.of(pairs)
        if t.is_word("compds", *HYP_KINDS):
            self.advance()
            self.expect_op("(")
            rt = self.tok
            ref = self.dataref()
            self.expect_op(",")
            tid = self.test_id()
            self.expect_op(")")
            self._check_ref(ref, tid, rt)
            if t.value == "compds":
                return Compds(ref, tid)
            return Hyp(t.value, ref, tid)
        if t.is_word("sampled", "followed"):
            self.advance()
            self.expect_op("(")
            args = [self.term()]
            while self.accept_op(","):
                args.append(self.term())
            self.expect_op(")")
            want = 3 if t.value == "sampled" else 2
            if len(args) != want:
                raise self.error(f"{t.value} takes {want} arguments", t)
            return Pred(t.value, tuple(args))
        if t.is_word("Neg"):
            self.advance()
            self.expect_op("[")
            if not self.tok.is_op(*BELIEF_OPS):
                raise self.error("expected a comparison operator")
            op = self.advance().value
            self.expect_op(";")
            rt = self.tok
            ref = self.dataref()
            self.expect_op(";")
            tid = self.test_id()
            self._check_ref(ref, tid, rt)
            self.expect_op("]")
            self.expect_op("(")
            eps = self.term()
            self.expect_op(")")
            return Neg(op, ref, tid, eps)
        if t.is_op("("):
            save = self.pos
            try:
                self.advance()
                inner = self.formula()
                self.expect_op(")")
                if not self.tok.is_op(*COMPARISONS, "+", "-", "*", "/"):
                    return inner
            except ParseError:
                pass
            self.pos = save
        left = self.term()
        if not self.tok.is_op(*COMPARISONS):
            raise self.error(f"expected a comparison after term, found '{self.tok.value or 'end of input'}'")
        op = self.advance().value
        return Pred(op, (left, self.term()))

    def _kappa_pair(self):
        self.expect_op("(")
        rt = self.tok
        ref = self.dataref()
        self.expect_op(",")
        tid = self.test_id()
        self.expect_op(")")
        self._check_ref(ref, tid, rt)
        return (ref, tid)

    # ------------------------------------------------------------ programs
    def program(self):
        first = self._par()
        if self.tok.is_op(";"):
            span = self.advance().span
            if self.tok.kind == "eof" or self.tok.is_op("}", ")"):
                return first  # trailing semicolon
            return Seq(first, self.program(), span=span)
        return first

    def _par(self):
        left = self._cmd()
        if self.tok.is_op("||"):
            span = self.advance().span
            return Par(left, self._par(), span=span)
        return left

    def _block(self):
        self.expect_op("{")
        body = self.program()
        self.expect_op("}")
        return body

    def _cmd(self):
        t = self.tok
        span = t.span
        if self.accept_word("skip"):
            return Skip(span=span)
        if self.accept_word("if"):
            cond = self.expr()
            then = self._block()
            orelse = self._block() if self.accept_word("else") else Skip(span=span)
            return If(cond, then, orelse, span=span)
        if self.accept_word("while"):
            cond = self.expr()
            inv = None
            if self.accept_word("invariant"):
                inv = self.formula()
            return While(cond, self._block(), inv, span=span)
        if self.accept_word("assert"):
            return Assert(self.formula(), span=span)
        if self.accept_op("("):
            inner = self.program()
            self.expect_op(")")
            return inner
        name = self.ident("command")
        self.expect_op(":=")
        et = self.tok
        e = self.expr()
        if isinstance(e, PVal):
            if not is_atomic_ref(e.data):
                raise self.error("only atomic tests can be called from a program", et)
            return TestCall(name, e.test, e.data, span=span)
        return Assign(name, e, span=span)

    # ------------------------------------------------------------ declaration files
    def document(self, path: Optional[str] = None) -> Document:
        sig = self.sig if self.sig is not None else Signature()
        self.sig = sig
        doc = Document(sig, path=path)
        while self.tok.kind == "ident" and self.tok.value in DECL_WORDS:
            self._decl(doc)
        if self.accept_op("---"):
            doc.program = self.program()
        self.expect_eof()
        return doc

    def _decl(self, doc: Document) -> None:
        t = self.advance()
        w = t.value
        sig = doc.sig
        try:
            if w in ("obs", "inv"):
                names = self._names()
                self.expect_op(":")
                ty = self.ident("type")
                for n in names:
                    sig.declare_var(VarDecl(n, ty, w == "obs"))
            elif w == "dataset":
                while True:
                    n = self.ident("dataset variable")
                    pop = self.term() if self.accept_op("~") else None
                    sig.declare_var(VarDecl(n, "list", True, pop))
                    if not self.accept_op(","):
                        break
            elif w == "test":
                sig.declare_test(self._test_decl())
            elif w == "histories":
                tid = self.test_id()
                self.expect_op("=")
                self.expect_op("{")
                refs = [self.dataref()]
                while self.accept_op(","):
                    refs.append(self.dataref())
                self.expect_op("}")
                sig.declare_histories(tid, refs)
            elif w in ("int_bound", "budget"):
                doc.directives.append((w, int(self.number())))
            elif w == "grid":
                self.expect_op("(")
                names = self._names()
                self.expect_op(")")
                self.expect_word_plain("in")
                self.expect_op("{")
                points = [self._grid_point(len(names))]
                while self.accept_op(","):
                    points.append(self._grid_point(len(names)))
                self.expect_op("}")
                doc.directives.append(("grid", tuple(names), points))
            elif w in ("data", "init"):
                n = self.ident("variable")
                if w == "data" and self.tok.kind == "ident" and self.tok.value == "in":
                    self.advance()
                    self.expect_op("{")
                    vals = [self.term()]
                    while self.accept_op(","):
                        vals.append(self.term())
                    self.expect_op("}")
                    doc.directives.append(("data_in", n, vals))
                else:
                    self.expect_op("=")
                    doc.directives.append((w, n, self.term()))
            elif w == "sample":
                n = self.ident("dataset variable")
                self.expect_op("~")
                dist = self.term()
                doc.directives.append(("sample", n, dist))
            elif w == "nosample":
                doc.directives.append(("nosample", self.ident("dataset variable")))
            elif w == "include":
                s = self.tok
                if s.kind != "str":
                    raise self.error("expected a file name string")
                self.advance()
                self._include(doc, s)
            elif w == "program":
                if self.tok.kind == "str":
                    s = self.advance()
                    self._include(doc, s, program_only=False)
                else:
                    doc.program = self._block()
        except DeclError as e:
            raise ParseError(e.message, t.span, self.source) from None

    def expect_word_plain(self, word: str) -> None:
        if not (self.tok.kind == "ident" and self.tok.value == word):
            raise self.error(f"expected '{word}'")
        self.advance()

    def _include(self, doc: Document, tok: Token, program_only: bool = False) -> None:
        base = os.path.dirname(doc.path) if doc.path else "."
        target = os.path.join(base, tok.value)
        try:
            with open(target, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as e:
            raise ParseError(f"cannot read {tok.value}: {e.strerror}", tok.span, self.source) from None
        sub = Parser(text, sig=doc.sig, source=target)
        inner = sub.document(path=target)
        doc.directives.extend(inner.directives)
        if inner.program is not None:
            doc.program = inner.program

    def _names(self) -> List[str]:
        names = [self.ident("variable")]
        while self.accept_op(","):
            names.append(self.ident("variable"))
        return names

    def _grid_point(self, width: int) -> tuple:
        if width == 1 and not self.tok.is_op("("):
            return (self.term(),)
        self.expect_op("(")
        vals = [self.term()]
        while self.accept_op(","):
            vals.append(self.term())
        self.expect_op(")")
        if len(vals) != width:
            raise self.error(f"grid point has {len(vals)} values, expected {width}")
        return tuple(vals)

    def _test_decl(self) -> TestDecl:
        tid = self.ident("test id")
        self.expect_op("=")
        kt = self.tok
        kind = self.ident("test kind")
        self.expect_op("(")
        if kind in COMBINED_KINDS:
            a = self.ident("test id")
            self.expect_op(",")
            b = self.ident("test id")
            self.expect_op(")")
            return TestDecl(tid, kind, "two", (), (a, b))
        if kind not in ATOMIC_KINDS:
            raise self.error(f"unknown test kind '{kind}'", kt)
        tt = self.tok
        if tt.kind != "ident":
            raise self.error("expected a tail")
        tail = self.advance().value
        if tail not in TAILS:
            raise self.error(f"tail must be one of {', '.join(TAILS)}")
        params = []
        while self.accept_op(","):
            if self.tok.kind != "ident":
                raise self.error("expected a parameter name")
            key = self.advance().value
            self.expect_op("=")
            params.append((key, self.term()))
        self.expect_op(")")
        return TestDecl(tid, kind, tail, tuple(params))


def _num(text: str):
    if any(c in text for c in ".eE"):
        return float(text)
    return int(text)


# ---------------------------------------------------------------- entry points

def parse_formula(text: str, sig: Optional[Signature] = None,
                  defs: Optional[Dict[str, Formula]] = None, source: Optional[str] = None) -> Formula:
    from .wellformed import check_formula
    p = Parser(text, sig, source, defs)
    f = p.formula()
    p.expect_eof()
    check_formula(f, sig)
    return f


def parse_term(text: str, sig: Optional[Signature] = None) -> Term:
    p = Parser(text, sig)
    t = p.term()
    p.expect_eof()
    return t


def parse_expr(text: str, sig: Optional[Signature] = None) -> Term:
    p = Parser(text, sig)
    t = p.expr()
    p.expect_eof()
    return t


def parse_program(text: str, sig: Optional[Signature] = None, source: Optional[str] = None):
    from .wellformed import check_program
    p = Parser(text, sig, source)
    c = p.program()
    p.expect_eof()
    check_program(c, sig)
    return c


def parse_document(text: str, path: Optional[str] = None, sig: Optional[Signature] = None) -> Document:
    from .wellformed import check_program
    p = Parser(text, sig, source=path)
    doc = p.document(path=path)
    if doc.program is not None:
        check_program(doc.program, doc.sig)
    return doc


def load_document(path: str) -> Document:
    with open(path, encoding="utf-8") as fh:
        return parse_document(fh.read(), path=path)
