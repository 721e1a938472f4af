from .interp import (
    BUDGET_ENV, DEFAULT_BUDGET, ExecError, Machine, RunResult, default_budget, execute, run,
    run_canonical, step,
)
from .values import (
    BOTTOM, EPS, EvalError, Pair, compare, eval_term, load_csv, ref_value, show_value,
    values_equal,
)
from .world import (
    Cmd, FrozenMap, Init, Sampling, State, World, history_add, observation, observed_world,
    trace_lines,
)
