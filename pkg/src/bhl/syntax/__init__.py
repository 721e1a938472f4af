from .ast import *  # noqa: F401,F403
from .decls import Env, Signature, TestDecl, VarDecl
from .errors import BhlError, DeclError, ParInterference, ParseError, WellFormedError
from .parser import (
    Document, load_document, parse_document, parse_expr, parse_formula, parse_program,
    parse_term,
)
from .printer import show, show_expr, show_formula, show_program, show_term
from .transform import (
    expand, expand_node, expr_to_formula, flatten, free_vars, is_core, is_loop_free,
    program_vars, strip_annotations, subst, term_keys, test_calls, updated_vars,
)
from .wellformed import check_formula, check_program

parse_sugar = parse_formula


def expand_sugar(f, sig):
    return expand(f, sig)
