"""Random program and formula text over a small fixed signature."""
import random

from bhl.syntax.parser import parse_document

SIG_TEXT = """\
obs a, b : prob
obs x, z : real
inv mu : real
dataset y1 ~ Normal(mu, 1.0), y2 ~ Normal(0.0, 1.0)
test A = Z1(two, sigma=1.0, mu0=0.0)
test B = Z1(upper, sigma=1.0, mu0=0.0)
test AB = disj(A, B)
histories A = {y1, y2}
histories B = {y1, y2}
"""

# 2 grid points x 3 datasets for y1 = 6 initial worlds
SCENARIO_TEXT = SIG_TEXT + """\
grid (mu) in {0.0, 1.0}
data y1 in {[0.4, -0.3, 0.8, 0.1], [1.9, 2.2, 1.4, 2.5], [0.9, 1.2, 0.6, 1.1]}
data y2 = [-0.2, 0.5, 0.1, -0.6]
init a = 1.0
init b = 1.0
init x = 0.0
init z = 1.0
"""


def signature():
    return parse_document(SIG_TEXT + "---\nskip\n").sig


def _term(r: random.Random, vars_=("x", "z")) -> str:
    k = r.randrange(4)
    if k == 0:
        return r.choice(["0.0", "1.0", "2.5", "-1.0"])
    if k == 1:
        return r.choice(vars_)
    if k == 2:
        return f"{r.choice(vars_)} + {r.choice(['1.0', 'a', 'b'])}"
    return f"{r.choice(vars_)} * 2.0"


def _cond(r: random.Random, probs=("a", "b"), reals=("x", "z")) -> str:
    k = r.randrange(4)
    if k == 0:
        return f"{r.choice(probs)} <= {r.choice(['0.05', '0.2', '0.5'])}"
    if k == 1:
        return f"{r.choice(reals)} < {r.choice(['0.5', '1.0', '2.0'])}"
    if k == 2:
        return f"{r.choice(probs)} < {r.choice(probs)}"
    return f"not ({r.choice(reals)} < 1.0)"


def program(r: random.Random, depth: int = 3, tests: int = 2, par: bool = True) -> str:
    """A loop-free program with at most ``tests`` test calls."""
    budget = [tests]

    def atom() -> str:
        k = r.randrange(4)
        if k == 0 and budget[0] > 0:
            budget[0] -= 1
            return f"{r.choice('ab')} := {r.choice('AB')}({r.choice(['y1', 'y2'])})"
        if k == 1:
            return "skip"
        return f"{r.choice('xz')} := {_term(r)}"

    def cmd(d: int) -> str:
        if d == 0:
            return atom()
        k = r.randrange(5 if par else 4)
        if k == 0:
            return atom()
        if k in (1, 2):
            return f"{cmd(d - 1)}; {cmd(d - 1)}"
        if k == 3:
            return f"if {_cond(r)} {{ {cmd(d - 1)} }} else {{ {cmd(d - 1)} }}"
        return par_cmd(r, d - 1, budget)

    return cmd(depth)


def par_cmd(r: random.Random, depth: int, budget=None) -> str:
    """Two branches that touch disjoint variables: (x, a, y1) on the left, (z, b, y2) on the right."""
    budget = budget if budget is not None else [2]

    def side(d, real, prob, data):
        k = r.randrange(4) if d > 0 else r.randrange(3)
        if k == 0 and budget[0] > 0:
            budget[0] -= 1
            return f"{prob} := {r.choice('AB')}({data})"
        if k == 1:
            return f"{real} := {real} + {r.choice(['1.0', '2.5'])}"
        if k == 2:
            return "skip"
        if r.random() < 0.5:
            return f"{side(d - 1, real, prob, data)}; {side(d - 1, real, prob, data)}"
        return (f"if {prob} <= 0.2 {{ {side(d - 1, real, prob, data)} }} "
                f"else {{ {side(d - 1, real, prob, data)} }}")

    return f"(({side(depth, 'x', 'a', 'y1')}) || ({side(depth, 'z', 'b', 'y2')}))"


def formula(r: random.Random, depth: int = 2, modal: bool = True) -> str:
    def atom() -> str:
        k = r.randrange(9)
        if k == 0:
            return f"{r.choice('xz')} < {r.choice(['0.5', '1.0', '3.0'])}"
        if k == 1:
            return f"{r.choice('ab')} <= {r.choice(['0.05', '0.3', '1.0'])}"
        if k == 2:
            return "x = z" if r.random() < 0.5 else "a < b"
        if k == 3:
            pairs = r.sample(["(y1, A)", "(y2, A)", "(y1, B)", "(y2, B)"], r.randrange(3))
            return "kappa{" + ", ".join(pairs) + "}"
        if k == 4:
            return f"hist({r.choice(['y1', 'y2'])}, {r.choice('AB')}) = {r.randrange(3)}"
        if k == 5:
            return f"mu > {r.choice(['0.5', '-0.5'])}"
        if k == 6:
            t = r.choice("AB")
            return f"Belief[{r.choice(['<=', '<', '='])} {r.choice(['0.05', 'a', 'b'])}; y1; {t}] alt(y1, {t})"
        if k == 7:
            return f"A(y1) <= {r.choice(['0.05', '0.5'])}"
        return f"compds({r.choice(['y1', 'y2'])}, {r.choice('AB')})"

    def f(d: int) -> str:
        if d == 0:
            return atom()
        k = r.randrange(6 if modal else 4)
        if k == 0:
            return atom()
        if k == 1:
            return f"not ({f(d - 1)})"
        if k == 2:
            return f"({f(d - 1)}) and ({f(d - 1)})"
        if k == 3:
            return f"({f(d - 1)}) or ({f(d - 1)})"
        if k == 4:
            return f"K ({f(d - 1)})"
        return f"P ({f(d - 1)})"

    return f(depth)
