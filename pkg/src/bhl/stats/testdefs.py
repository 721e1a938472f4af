"""Hypothesis-test definitions, p-values and test combination."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Tuple, Union

import numpy as np

from .kernels import std_normal_cdf, std_normal_sf, two_sided_tail


class Tail(Enum):
    LOWER = "lower"
    UPPER = "upper"
    TWO = "two"

    def at_most_as_likely(self, t, ref):
        """t is at most as likely as ref under this likeliness relation."""
        if self is Tail.TWO:
            return abs(t) >= abs(ref)
        if self is Tail.UPPER:
            return t >= ref
        return t <= ref


class StdNormal:
    def __repr__(self) -> str:
        return "StdNormal"

    def __eq__(self, other) -> bool:
        return isinstance(other, StdNormal)

    def __hash__(self) -> int:
        return hash("StdNormal")


STD_NORMAL = StdNormal()


@dataclass(frozen=True)
class Empirical:
    samples: int
    seed: Optional[int]
    generator: str

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("Empirical null needs at least one sample")


@dataclass(frozen=True)
class ProductCoupling:
    first: object
    second: object


NullDistribution = Union[StdNormal, Empirical, ProductCoupling]

DISJUNCTIVE = "disjunctive"
CONJUNCTIVE = "conjunctive"


@dataclass(frozen=True, eq=False)
class TestDef:
    """A concrete test: statistic, null distribution and likeliness relation.

    ``statistic`` maps a data value to the ordering statistic (for likelihood
    ratios this is the logarithm, which orders data identically).
    ``null_sampler(rng, data, n)`` returns n statistics drawn under the null.
    """
    id: str
    arity: int
    tail: Optional[Tail] = None
    statistic: Optional[Callable] = None
    null: NullDistribution = STD_NORMAL
    null_sampler: Optional[Callable] = None
    kind: Optional[str] = None
    components: Tuple["TestDef", ...] = ()
    decl: object = field(default=None, repr=False)
    __test__ = False  # keep pytest from collecting this class

    @property
    def combined(self) -> bool:
        return self.kind is not None


@dataclass(frozen=True)
class PValue:
    value: float
    stderr: Optional[float] = None

    def __post_init__(self):
        if not (0.0 <= self.value <= 1.0) or math.isnan(self.value):
            raise ValueError(f"p-value {self.value} outside [0,1]")

    def __float__(self) -> float:
        return self.value


def _check_shape(test: TestDef, data) -> None:
    if test.combined or test.arity > 1:
        if not isinstance(data, tuple) or len(data) != test.arity:
            raise ValueError(f"test {test.id} expects {test.arity} data components")
        if not test.combined and not all(isinstance(x, (tuple, list)) for x in data):
            raise ValueError(f"test {test.id} expects {test.arity} datasets")
    elif not isinstance(data, (tuple, list)) or any(isinstance(x, (tuple, list)) for x in data):
        raise ValueError(f"test {test.id} expects a single dataset")


def p_value(test: TestDef, data) -> PValue:
    _check_shape(test, data)
    if test.combined:
        a, b = test.components
        pa, pb = p_value(a, data[0]), p_value(b, data[1])
        return combine_p_values(test.kind, pa, pb)
    t = test.statistic(data)
    if isinstance(test.null, StdNormal):
        if test.tail is Tail.TWO:
            v = two_sided_tail(t)
        elif test.tail is Tail.UPPER:
            v = std_normal_sf(t)
        else:
            v = std_normal_cdf(t)
        return PValue(min(1.0, max(0.0, v)))
    if isinstance(test.null, Empirical):
        if test.null.seed is None:
            raise ValueError(f"test {test.id} has an empirical null but no seed")
        return mc_null_p_value(test, data, test.null.samples, test.null.seed)
    raise ValueError(f"unsupported null distribution {test.null!r}")


def combine_p_values(kind: str, pa: PValue, pb: PValue) -> PValue:
    """Pr[t1 at most as likely as T1 (or|and) t2 ...] under the independent product coupling."""
    p1, p2 = pa.value, pb.value
    if kind == DISJUNCTIVE:
        v = 1.0 - (1.0 - p1) * (1.0 - p2)
        # the product form is exact but can round above p1 + p2 in the last ulp
        v = min(v, p1 + p2, 1.0)
        v = max(v, p1, p2)
        d1, d2 = 1.0 - p2, 1.0 - p1
    elif kind == CONJUNCTIVE:
        v = min(p1 * p2, p1, p2)
        d1, d2 = p2, p1
    else:
        raise ValueError(f"unknown combination kind {kind}")
    err = None
    if pa.stderr is not None or pb.stderr is not None:
        s1, s2 = pa.stderr or 0.0, pb.stderr or 0.0
        err = math.hypot(d1 * s1, d2 * s2)
    return PValue(v, err)


def combine(kind: str, a1: TestDef, a2: TestDef, id: Optional[str] = None) -> TestDef:
    if kind not in (DISJUNCTIVE, CONJUNCTIVE):
        raise ValueError(f"unknown combination kind {kind}")
    op = "or" if kind == DISJUNCTIVE else "and"
    return TestDef(
        id=id or f"({a1.id} {op} {a2.id})",
        arity=2,
        null=ProductCoupling(a1.null, a2.null),
        kind=kind,
        components=(a1, a2),
    )


def list_tests(y, test: TestDef) -> list:
    """ListTests(y, A): the multiset of (dataset reference, atomic test id) pairs."""
    if not test.combined:
        return [(y, test.id)]
    if not isinstance(y, tuple) or len(y) != len(test.components):
        raise ValueError(f"reference {y!r} does not match the {len(test.components)} components of {test.id}")
    out = []
    for sub, comp in zip(y, test.components):
        out.extend(list_tests(sub, comp))
    return out


def mc_null_p_value(test: TestDef, data, n_samples: int, seed: int) -> PValue:
    """Monte-Carlo estimate of Pr[T(d) at most as likely as T(data)] for d from the null."""
    if test.null_sampler is None:
        raise ValueError(f"test {test.id} has no null-population generator")
    if n_samples < 1000:
        raise ValueError("Monte-Carlo p-values need at least 1000 samples")
    if seed is None:
        raise ValueError("Monte-Carlo p-values need a seed")
    rng = np.random.default_rng(seed)
    sims = np.asarray(test.null_sampler(rng, data, n_samples), dtype=float)
    t = test.statistic(data)
    if test.tail is Tail.TWO:
        hits = np.abs(sims) >= abs(t)
    elif test.tail is Tail.UPPER:
        hits = sims >= t
    else:
        hits = sims <= t
    p = float(np.count_nonzero(hits)) / n_samples
    return PValue(p, math.sqrt(p * (1.0 - p) / n_samples))
