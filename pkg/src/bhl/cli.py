"""Command-line entry point: ``bhl <subcommand> ...``."""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import shutil
import sys
from importlib import resources
from typing import List, Optional

from .kripke.model import (
    Counterexample, Model, build_model, check_valid, judgment_holds, reachable_model,
)
from .kripke.scenario import ScenarioError, scenario_from_document
from .proof import check_proof
from .proof.tree import ProofFormatError, load_proof
from .semantics.interp import ExecError, Machine, execute
from .semantics.values import BOTTOM, EvalError, Pair, load_csv, show_value
from .semantics.world import trace_lines
from .stats.build import TestRegistry, build_test
from .stats.testdefs import p_value
from .syntax.ast import Const, HistKey, TRUE
from .syntax.decls import Signature, TestDecl
from .syntax.errors import BhlError
from .syntax.parser import load_document, parse_formula
from .syntax.printer import show_formula
from .syntax.transform import expand
from .wp import WpError, vc_gen, weakest_pre

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
BUILTIN_TESTS = {"ztest2": "Z", "ztest1": "Z1"}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- output helpers


def _jsonable(v):
    if v is BOTTOM:
        return None
    if isinstance(v, (bool, int, float, str)) or v is None:
        return v
    if isinstance(v, tuple):
        return [_jsonable(x) for x in v]
    if isinstance(v, Pair):
        return [_jsonable(v.fst), _jsonable(v.snd)]
    return str(v)


def _key(k) -> str:
    return str(k) if isinstance(k, HistKey) else k


def _memory(m, datasets=()) -> dict:
    out = {}
    for k, v in m.items():
        if v is BOTTOM or k in datasets:
            continue
        if isinstance(k, HistKey) and v == 0:
            continue
        out[_key(k)] = v
    return dict(sorted(out.items()))


def _emit(args, doc: dict, text: List[str]) -> None:
    if args.format == "json":
        print(json.dumps(doc, indent=2, sort_keys=True, default=str))
    else:
        print("\n".join(text))


def _world_doc(w) -> dict:
    return {"memory": {k: _jsonable(v) for k, v in _memory(w.memory).items()},
            "trace": trace_lines(w)}


def _scenario(args, path: str):
    doc = load_document(path)
    return doc, scenario_from_document(doc, args.seed, args.int_bound)


# ---------------------------------------------------------------- subcommands


def cmd_run(args) -> int:
    doc, sc = _scenario(args, args.file)
    if doc.program is None:
        raise UsageError(f"{args.file} has no program after ---")
    tests = sc.registry()
    machine = Machine(sc.sig, tests)
    budget = args.budget if args.budget is not None else sc.budget
    runs, text = [], []
    ds = set(sc.sig.datasets())
    for i, w in enumerate(sc.initial_worlds(tests)):
        r = execute(machine, doc.program, w, budget, args.interleavings)
        init = {k: v for k, v in _memory(w.memory, ds).items() if not isinstance(v, tuple)}
        entry = {"initial": {k: _jsonable(v) for k, v in init.items()},
                 "finals": [_world_doc(f) for f in r.finals], "exhausted": r.exhausted}
        runs.append(entry)
        head = ", ".join(f"{k}={show_value(v)}" for k, v in init.items())
        text.append(f"world {i + 1}: {head}")
        for j, f in enumerate(r.finals):
            mem = ", ".join(f"{k}={show_value(v)}" for k, v in _memory(f.memory, ds).items())
            text.append(f"  final {j + 1}: {mem}")
            if args.trace:
                text.extend("    " + line for line in trace_lines(f))
        if r.exhausted:
            text.append("  step budget exhausted on some path")
    _emit(args, {"command": "run", "source": args.file, "interleavings": args.interleavings,
                 "runs": runs}, text)
    return EXIT_OK


def _read_data(spec: str) -> list:
    out = []
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            out.append(load_csv(part))
        except (OSError, EvalError) as e:
            raise UsageError(f"cannot read dataset {part}: {e}") from None
    if not out:
        raise UsageError("--data needs at least one CSV file")
    return out


def cmd_pvalue(args) -> int:
    datasets = _read_data(args.data)
    if args.decls:
        sig = load_document(args.decls).sig
        registry = TestRegistry(sig, args.seed)
        test = registry.get(args.test)
    elif args.test in BUILTIN_TESTS:
        sig = Signature()
        params = [("sigma", Const(float(args.sigma)))]
        if BUILTIN_TESTS[args.test] == "Z1":
            params.append(("mu0", Const(float(args.mu0))))
        sig.declare_test(TestDecl(args.test, BUILTIN_TESTS[args.test], args.tail, tuple(params)))
        test = build_test(sig, args.test, args.seed)
    else:
        raise UsageError(f"unknown test {args.test!r}; built-ins are "
                         f"{', '.join(BUILTIN_TESTS)} (or pass --decls)")
    if test.combined:
        raise UsageError("pvalue evaluates atomic tests; combine p-values with a proof or model")
    if len(datasets) != test.arity:
        raise UsageError(f"test {args.test} takes {test.arity} dataset(s), got {len(datasets)}")
    data = datasets[0] if test.arity == 1 else tuple(datasets)
    pv = p_value(test, data)
    stat = test.statistic(data)
    doc = {"command": "pvalue", "test": args.test, "statistic": stat, "p_value": pv.value,
           "stderr": pv.stderr}
    line = f"{args.test}: statistic = {stat:.6g}, p-value = {pv.value:.6g}"
    if pv.stderr is not None:
        line += f" (Monte-Carlo stderr {pv.stderr:.2g})"
    _emit(args, doc, [line])
    return EXIT_OK


def _formula(text: str, sig, what: str):
    try:
        return parse_formula(text, sig)
    except BhlError as e:
        raise UsageError(f"{what}: {e}") from None


def cmd_wp(args) -> int:
    doc = load_document(args.file)
    if doc.program is None:
        raise UsageError(f"{args.file} has no program after ---")
    sig = doc.sig
    post = _formula(args.post, sig, "--post")
    if args.vc:
        return _vcs(args, doc, post)
    f = weakest_pre(doc.program, post, sig)
    e = weakest_pre(doc.program, expand(post, sig), sig)
    _emit(args, {"command": "wp", "source": args.file, "post": show_formula(post),
                 "wp": show_formula(f), "expanded": show_formula(e)},
          [f"wp: {show_formula(f)}", f"expanded: {show_formula(e)}"])
    return EXIT_OK


def _vcs(args, doc, post) -> int:
    sig = doc.sig
    pre = _formula(args.pre, sig, "--pre") if args.pre else TRUE
    vcs = vc_gen(doc.program, pre, post, sig)
    items, text, failed = [], [], False
    model = None
    if getattr(args, "scenario", None):
        _, sc = _scenario(args, args.scenario)
        model = reachable_model(sc, doc.program, budget=args.budget)
    for name, f in vcs:
        item = {"name": name, "formula": show_formula(f)}
        line = f"{name}: {show_formula(f)}"
        if model is not None:
            res = _check(model, f)
            item["result"] = res
            line += f"  [{res['verdict']}]"
            failed |= res["verdict"] != "Valid"
        items.append(item)
        text.append(line)
    _emit(args, {"command": "vc", "source": args.file, "obligations": items}, text)
    return EXIT_FAIL if failed else EXIT_OK


def cmd_vc(args) -> int:
    doc = load_document(args.file)
    if doc.program is None:
        raise UsageError(f"{args.file} has no program after ---")
    return _vcs(args, doc, _formula(args.post, doc.sig, "--post"))


def _check(model: Model, f) -> dict:
    try:
        res = check_valid(model, f)
    except EvalError as e:
        return {"verdict": "Refuted", "reason": f"evaluation error: {e}"}
    if isinstance(res, Counterexample):
        return {"verdict": "Counterexample", "interp": res.interp,
                "witness": trace_lines(res.world)}
    return {"verdict": "Valid", "worlds": res.worlds, "note": res.note}


def cmd_model_check(args) -> int:
    doc, sc = _scenario(args, args.scenario)
    sig = sc.sig
    budget = args.budget if args.budget is not None else sc.budget
    if args.formula is not None:
        f = _formula(args.formula, sig, "--formula")
        model = build_model(sc, budget=budget, interleavings=args.interleavings)
        res = _check(model, f)
        out = {"command": "model-check", "scenario": sc.name, "formula": show_formula(f),
               "worlds": len(model.worlds), "warnings": model.warnings, **res}
        text = [f"{sc.name}: {res['verdict']}"]
        if res["verdict"] == "Valid":
            text[0] += f" ({res['note']}, {res['worlds']} worlds)"
    else:
        if args.post is None:
            raise UsageError("model-check needs --formula, or --post (with optional --pre)")
        if doc.program is None:
            raise UsageError(f"{args.scenario} has no program to check a judgment against")
        pre = _formula(args.pre, sig, "--pre") if args.pre else TRUE
        post = _formula(args.post, sig, "--post")
        base = build_model(dataclasses.replace(sc, program=None))
        try:
            res = judgment_holds(base, pre, doc.program, post, budget, args.interleavings)
        except EvalError as e:
            res = None
            out = {"verdict": "Refuted", "reason": f"evaluation error: {e}"}
        if isinstance(res, Counterexample):
            out = {"verdict": "Counterexample", "interp": res.interp,
                   "initial": trace_lines(res.initial) if res.initial else None,
                   "witness": trace_lines(res.world)}
        elif res is not None:
            out = {"verdict": "Holds", "checked": res.checked, "exhausted": res.exhausted,
                   "note": res.note}
        out = {"command": "model-check", "scenario": sc.name, "pre": show_formula(pre),
               "post": show_formula(post), "warnings": base.warnings, **out}
        text = [f"{sc.name}: {out['verdict']}"]
        if out["verdict"] == "Holds":
            text[0] += f" ({out['note']}; {out['checked']} initial worlds satisfy pre)"
    if out.get("reason"):
        text.append(f"  {out['reason']}")
    if out.get("witness"):
        if out.get("interp"):
            text.append("  interpretation: " + ", ".join(f"{k}={v}" for k, v in out["interp"].items()))
        text.append("  counterexample world:")
        text.extend("    " + line for line in out["witness"])
    for w in out.get("warnings") or []:
        text.append(f"  warning: {w}")
    _emit(args, out, text)
    return EXIT_OK if out["verdict"] in ("Valid", "Holds") else EXIT_FAIL


def cmd_check_proof(args) -> int:
    script = load_proof(args.file)
    report = check_proof(script, scenario=args.scenario)
    _emit(args, {"command": "check-proof", **report.to_dict()}, [report.to_text()])
    return EXIT_OK if report.accepted else EXIT_FAIL


def cmd_examples(args) -> int:
    dest = args.dest
    os.makedirs(dest, exist_ok=True)
    copied, skipped = [], []
    root = resources.files("bhl") / "corpus"
    for entry in sorted(root.iterdir(), key=lambda p: p.name):
        if not entry.is_file() or entry.name.startswith((".", "__")):
            continue
        target = os.path.join(dest, entry.name)
        if os.path.exists(target) and not args.force:
            skipped.append(entry.name)
            continue
        with resources.as_file(entry) as src:
            shutil.copyfile(src, target)
        copied.append(entry.name)
    text = [f"copied {len(copied)} file(s) to {dest}"]
    if skipped:
        text.append(f"kept {len(skipped)} existing file(s) (use --force to overwrite): "
                    + ", ".join(skipped))
    _emit(args, {"command": "examples", "dest": dest, "copied": copied, "skipped": skipped},
          text)
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--budget", type=int, help="step budget per execution path")
    common.add_argument("--seed", type=int, help="seed for Monte-Carlo null distributions")
    common.add_argument("--interleavings", choices=("canonical", "all"), default="canonical")
    common.add_argument("--int-bound", type=int, dest="int_bound",
                        help="bound for integer quantifiers")
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--trace", action="store_true", help="print full world traces")

    p = argparse.ArgumentParser(prog="bhl", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("run", parents=[common], help="execute a program on a scenario")
    s.add_argument("file", help=".scn or .bhp file with a program")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("pvalue", parents=[common], help="p-value of a test on CSV data")
    s.add_argument("--test", required=True)
    s.add_argument("--data", required=True, help="comma-separated CSV files")
    s.add_argument("--sigma", type=float, default=1.0)
    s.add_argument("--mu0", type=float, default=0.0)
    s.add_argument("--tail", choices=("two", "upper", "lower"), default="two")
    s.add_argument("--decls", help="declaration file defining the test")
    s.set_defaults(func=cmd_pvalue)

    s = sub.add_parser("wp", parents=[common], help="weakest precondition of a program")
    s.add_argument("file")
    s.add_argument("--post", required=True)
    s.add_argument("--pre", help="precondition for --vc")
    s.add_argument("--vc", action="store_true", help="print verification conditions instead")
    s.set_defaults(func=cmd_wp)

    s = sub.add_parser("vc", parents=[common], help="verification conditions of a judgment")
    s.add_argument("file")
    s.add_argument("--pre")
    s.add_argument("--post", required=True)
    s.add_argument("--scenario", help="model-check each obligation on this scenario")
    s.set_defaults(func=cmd_vc)

    s = sub.add_parser("model-check", parents=[common],
                       help="check a formula or a judgment on a scenario")
    s.add_argument("scenario")
    s.add_argument("--formula")
    s.add_argument("--pre")
    s.add_argument("--post")
    s.set_defaults(func=cmd_model_check)

    s = sub.add_parser("check-proof", parents=[common], help="check a .bhl proof script")
    s.add_argument("file")
    s.add_argument("--scenario")
    s.set_defaults(func=cmd_check_proof)

    s = sub.add_parser("examples", parents=[common], help="copy the bundled examples")
    s.add_argument("--dest", default="examples")
    s.add_argument("--force", action="store_true")
    s.set_defaults(func=cmd_examples)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"bhl: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (BhlError, ScenarioError, ProofFormatError, WpError) as e:
        print(f"bhl: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ExecError as e:
        print(f"bhl: runtime error: {e}", file=sys.stderr)
        return EXIT_FAIL
    except (OSError, ValueError) as e:
        print(f"bhl: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
