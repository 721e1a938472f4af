"""Runtime values and term evaluation."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Mapping

from ..stats.dists import MarginalDist, NormalDist, dist_close
from ..syntax.ast import App, Const, HistVar, IntVar, PVal, Term, Var, is_atomic_ref

EPS = 1e-9


class EvalError(Exception):
    pass


class _Bottom:
    """The undefined value."""
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self) -> str:
        return "⊥"

    def __reduce__(self):
        return (_Bottom, ())


BOTTOM = _Bottom()


@dataclass(frozen=True)
class Pair:
    fst: object
    snd: object


def is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def values_equal(a, b) -> bool:
    """Value equality; reals compare with a shared absolute/relative tolerance."""
    if is_number(a) and is_number(b):
        return math.isclose(a, b, rel_tol=EPS, abs_tol=EPS)
    if isinstance(a, tuple) and isinstance(b, tuple):
        return len(a) == len(b) and all(values_equal(x, y) for x, y in zip(a, b))
    if isinstance(a, Pair) and isinstance(b, Pair):
        return values_equal(a.fst, b.fst) and values_equal(a.snd, b.snd)
    if isinstance(a, (NormalDist, MarginalDist)) or isinstance(b, (NormalDist, MarginalDist)):
        return dist_close(a, b, EPS)
    if isinstance(a, bool) or isinstance(b, bool):
        return type(a) is type(b) and a == b
    return a == b


def value_less(a, b) -> bool:
    """Strict order consistent with values_equal, so exactly one of <, =, > holds."""
    if not (is_number(a) and is_number(b)):
        raise EvalError(f"cannot order {show_value(a)} and {show_value(b)}")
    return a < b and not values_equal(a, b)


def compare(op: str, a, b) -> bool:
    if op == "=":
        return values_equal(a, b)
    if op == "!=":
        return not values_equal(a, b)
    if op == "<":
        return value_less(a, b)
    if op == ">":
        return value_less(b, a)
    if op == "<=":
        return not value_less(b, a)
    if op == ">=":
        return not value_less(a, b)
    raise EvalError(f"unknown comparison {op}")


def show_value(v) -> str:
    if v is BOTTOM:
        return "⊥"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".12g")
    if isinstance(v, tuple):
        return "[" + ", ".join(show_value(x) for x in v) + "]"
    if isinstance(v, Pair):
        return f"pair({show_value(v.fst)}, {show_value(v.snd)})"
    return str(v)


def load_csv(path: str) -> tuple:
    """One real per line, or several comma-separated reals per line for vector data."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.reader(fh):
            cells = [c.strip() for c in rec if c.strip()]
            if not cells or cells[0].startswith("#"):
                continue
            try:
                nums = tuple(float(c) for c in cells)
            except ValueError:
                raise EvalError(f"{path}: non-numeric cell in {rec}") from None
            rows.append(nums[0] if len(nums) == 1 else nums)
    return tuple(rows)


def _num(v, fn):
    if not is_number(v):
        raise EvalError(f"{fn} expects a number, got {show_value(v)}")
    return v


def _bool(v, fn):
    if not isinstance(v, bool):
        raise EvalError(f"{fn} expects a boolean, got {show_value(v)}")
    return v


def _list(v, fn):
    if not isinstance(v, tuple):
        raise EvalError(f"{fn} expects a list, got {show_value(v)}")
    if not v:
        raise EvalError(f"{fn} of an empty list")
    return v


def _apply(fn: str, args: list):
    if fn in ("<", "<=", ">", ">=", "=", "!="):
        return compare(fn, args[0], args[1])
    if fn == "and":
        return _bool(args[0], fn) and _bool(args[1], fn)
    if fn == "or":
        return _bool(args[0], fn) or _bool(args[1], fn)
    if fn == "not":
        return not _bool(args[0], fn)
    if fn in ("+", "-", "*", "/"):
        a, b = _num(args[0], fn), _num(args[1], fn)
        if fn == "+":
            return a + b
        if fn == "-":
            return a - b
        if fn == "*":
            return a * b
        if b == 0:
            raise EvalError("division by zero")
        return a / b
    if fn == "neg":
        return -_num(args[0], fn)
    if fn == "mean":
        xs = _list(args[0], fn)
        return math.fsum(_num(x, fn) for x in xs) / len(xs)
    if fn == "sum":
        return math.fsum(_num(x, fn) for x in _list(args[0], fn))
    if fn == "size":
        if not isinstance(args[0], tuple):
            raise EvalError(f"size expects a list, got {show_value(args[0])}")
        return len(args[0])
    if fn == "abs":
        return abs(_num(args[0], fn))
    if fn == "sqrt":
        x = _num(args[0], fn)
        if x < 0:
            raise EvalError("sqrt of a negative number")
        return math.sqrt(x)
    if fn == "exp":
        return math.exp(_num(args[0], fn))
    if fn == "log":
        x = _num(args[0], fn)
        if x <= 0:
            raise EvalError("log of a non-positive number")
        return math.log(x)
    if fn == "min":
        return min(_num(args[0], fn), _num(args[1], fn))
    if fn == "max":
        return max(_num(args[0], fn), _num(args[1], fn))
    if fn == "Normal":
        try:
            return NormalDist(float(_num(args[0], fn)), float(_num(args[1], fn)))
        except ValueError as e:
            raise EvalError(str(e)) from None
    if fn == "Marginal":
        try:
            return MarginalDist(*(float(_num(a, fn)) for a in args))
        except ValueError as e:
            raise EvalError(str(e)) from None
    if fn == "pair":
        return Pair(args[0], args[1])
    if fn in ("fst", "snd"):
        if not isinstance(args[0], Pair):
            raise EvalError(f"{fn} expects a pair")
        return args[0].fst if fn == "fst" else args[0].snd
    if fn == "csv":
        if not isinstance(args[0], str):
            raise EvalError("csv expects a file name")
        try:
            return load_csv(args[0])
        except OSError as e:
            raise EvalError(f"cannot read {args[0]}: {e.strerror}") from None
    raise EvalError(f"unknown function {fn}")


def ref_value(m: Mapping, ref):
    """m(y) for a data reference: a dataset, or a tuple of them."""
    if is_atomic_ref(ref):
        vals = tuple(read(m, v) for v in ref)
        return vals[0] if len(vals) == 1 else vals
    return tuple(ref_value(m, sub) for sub in ref)


def read(m: Mapping, key):
    v = m.get(key, BOTTOM)
    if v is BOTTOM:
        raise EvalError(f"read of undefined variable {key}")
    return v


def eval_term(m: Mapping, t: Term, tests=None, ints: Mapping = None):
    """Evaluate a term in memory ``m``; p-values go through the ``tests`` registry."""
    if isinstance(t, Const):
        return t.value
    if isinstance(t, Var):
        return read(m, t.name)
    if isinstance(t, HistVar):
        return read(m, t.key)
    if isinstance(t, IntVar):
        if ints is None or t.name not in ints:
            raise EvalError(f"unbound integer variable {t.name}")
        return ints[t.name]
    if isinstance(t, PVal):
        if tests is None:
            raise EvalError("p-value evaluation needs test definitions")
        data = ref_value(m, t.data)
        try:
            return tests.p_value(t.test, data).value
        except ValueError as e:
            raise EvalError(str(e)) from None
    if isinstance(t, App):
        if t.fn == "ite":
            c = _bool(eval_term(m, t.args[0], tests, ints), "ite")
            return eval_term(m, t.args[1] if c else t.args[2], tests, ints)
        if t.fn in ("and", "or"):
            a = _bool(eval_term(m, t.args[0], tests, ints), t.fn)
            if a == (t.fn == "or"):
                return a
            return _bool(eval_term(m, t.args[1], tests, ints), t.fn)
        return _apply(t.fn, [eval_term(m, a, tests, ints) for a in t.args])
    raise EvalError(f"not a term: {t!r}")
