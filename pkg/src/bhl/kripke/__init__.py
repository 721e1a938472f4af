from .model import (
    Counterexample, Holds, Model, ModelError, Valid, build_model, check_valid, close_under,
    int_vars, judgment_holds, reachable_model, satisfies, warn_missing_nulls,
)
from .scenario import (
    DEFAULT_INT_BOUND, Scenario, ScenarioError, load_scenario, scenario_from_document,
)
