"""Command-line front end.

Exit codes: 0 success (and, for check, initial state satisfied); 1 check
ran but the initial state does not satisfy; 2 usage or formula errors;
3 invalid model; 4 no convergence; 5 oracle enumeration too large.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from . import engine, oracle
from .engine import ConvergenceError, EngineOptions
from .model import ModelError, Pots, load_model, validate
from .obstruction import (
    MemorylessStrategy,
    load_strategy,
    save_strategy,
    strategy_to_json,
    validate_strategy,
)
from .syntax import (
    Next,
    ObstructQuery,
    ParseError,
    PathFormula,
    Release,
    StateFormula,
    Until,
    parse,
    parse_path_formula,
    print_path,
    print_state,
)

EXIT_UNSAT = 1
EXIT_USAGE = 2
EXIT_BAD_MODEL = 3
EXIT_NO_CONVERGENCE = 4
EXIT_ORACLE_LIMIT = 5


class _CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _float_text(v: float) -> str:
    if v == int(v):
        return str(int(v))
    return repr(v)


def _rational_text(v: Fraction) -> str:
    return f"{v.numerator}/{v.denominator}"


def _load_valid_model(path: str) -> Pots:
    try:
        model = load_model(path)
    except OSError as exc:
        raise _CliError(f"cannot read model: {exc}", EXIT_BAD_MODEL)
    except ModelError as exc:
        raise _CliError(f"invalid model: {exc}", EXIT_BAD_MODEL)
    report = validate(model)
    if report:
        raise _CliError(
            "invalid model:\n" + "\n".join(f"  - {line}" for line in report),
            EXIT_BAD_MODEL,
        )
    return model


def _read_formula(args) -> StateFormula:
    if getattr(args, "formula_file", None):
        try:
            with open(args.formula_file, "r", encoding="utf-8") as handle:
                text = handle.read().strip()
        except OSError as exc:
            raise _CliError(f"cannot read formula file: {exc}", EXIT_USAGE)
    else:
        text = args.formula
    try:
        return parse(text)
    except ParseError as exc:
        raise _CliError(f"formula error: {exc}", EXIT_USAGE)


def _read_path(args) -> PathFormula:
    try:
        return parse_path_formula(args.path)
    except ParseError as exc:
        raise _CliError(f"path formula error: {exc}", EXIT_USAGE)


def _engine_options(args) -> EngineOptions:
    return EngineOptions(
        epsilon=args.epsilon,
        max_iterations=args.max_iterations,
        solver=args.solver,
    )


def _result_payload(result: engine.CheckResult) -> dict:
    return {
        "formula": result.formula,
        "sat": sorted(result.sat),
        "probabilities": None
        if result.values is None
        else {q: _float_text(v) for q, v in sorted(result.values.items())},
        "mode": result.mode,
        "grade": result.grade,
        "iterations": result.iterations,
        "warnings": result.warnings,
    }


def _emit(args, payload: dict, human_lines: list[str]) -> None:
    if args.json:
        print(json.dumps(payload, indent=2))
    else:
        for line in human_lines:
            print(line)


# -- subcommands ------------------------------------------------------------


def _cmd_check(args) -> int:
    model = _load_valid_model(args.model)
    phi = _read_formula(args)
    opts = _engine_options(args)
    try:
        result = engine.check(model, phi, opts)
    except ConvergenceError as exc:
        raise _CliError(str(exc), EXIT_NO_CONVERGENCE)
    satisfied = model.initial in result.sat
    lines = [
        f"formula:   {result.formula}",
        f"sat:       {{{', '.join(sorted(result.sat))}}}",
        f"initial:   {model.initial} {'satisfies' if satisfied else 'does not satisfy'}",
    ]
    if result.values is not None:
        rendered = ", ".join(
            f"{q}={_float_text(v)}" for q, v in sorted(result.values.items())
        )
        lines.append(f"prob[{result.mode}, grade {result.grade}]: {rendered}")
    for warning in result.warnings:
        lines.append(f"warning:   {warning}")
    _emit(args, _result_payload(result), lines)
    return 0 if satisfied else EXIT_UNSAT


def _cmd_prob(args) -> int:
    model = _load_valid_model(args.model)
    theta = _read_path(args)
    opts = _engine_options(args)
    try:
        if args.strategy:
            strategy = _load_strategy_for(model, args.strategy)
            stats = engine.Stats()
            sat1, sat2 = engine.operand_sets(model, theta, opts, stats)
            values = engine.prob_fixed(model, strategy, theta, sat1, sat2, opts, stats)
            result = engine.CheckResult(
                formula=print_path(theta),
                sat=frozenset(),
                values=values,
                mode="fixed",
                grade=strategy.grade,
                iterations=stats.iterations,
                warnings=stats.warnings,
            )
        else:
            result = engine.check_path(model, theta, args.grade, args.mode, opts)
    except ConvergenceError as exc:
        raise _CliError(str(exc), EXIT_NO_CONVERGENCE)
    values = result.values or {}
    if args.state:
        if args.state not in model.states:
            raise _CliError(f"unknown state {args.state!r}", EXIT_USAGE)
        values = {args.state: values[args.state]}
        result.values = values
    lines = [f"path:      {result.formula}"]
    lines += [f"{q}: {_float_text(v)}" for q, v in sorted(values.items())]
    for warning in result.warnings:
        lines.append(f"warning:   {warning}")
    _emit(args, _result_payload(result), lines)
    return 0


def _load_strategy_for(model: Pots, path: str) -> MemorylessStrategy:
    try:
        strategy = load_strategy(path)
    except OSError as exc:
        raise _CliError(f"cannot read strategy: {exc}", EXIT_USAGE)
    except ModelError as exc:
        raise _CliError(f"invalid strategy: {exc}", EXIT_USAGE)
    report = validate_strategy(model, strategy)
    if report:
        raise _CliError(
            "invalid strategy:\n" + "\n".join(f"  - {line}" for line in report),
            EXIT_USAGE,
        )
    return strategy


def _cmd_synthesize(args) -> int:
    model = _load_valid_model(args.model)
    theta = _read_path(args)
    opts = _engine_options(args)
    if args.mode != "min":
        raise _CliError("synthesis targets the minimizing player; use --mode min", EXIT_USAGE)
    stats = engine.Stats()
    try:
        sat1, sat2 = engine.operand_sets(model, theta, opts, stats)
        strategy, values = engine.synthesize(model, theta, sat1, sat2, args.grade, opts, stats)
    except ConvergenceError as exc:
        raise _CliError(str(exc), EXIT_NO_CONVERGENCE)
    if args.output:
        save_strategy(strategy, args.output)
    payload = {
        "formula": print_path(theta),
        "grade": args.grade,
        "mode": "min",
        "strategy": json.loads(strategy_to_json(strategy)),
        "probabilities": {q: _float_text(v) for q, v in sorted(values.items())},
        "iterations": stats.iterations,
        "warnings": stats.warnings,
    }
    lines = [
        f"path:      {print_path(theta)}",
        f"strategy:  {strategy_to_json(strategy)}",
    ]
    lines += [f"{q}: {_float_text(v)}" for q, v in sorted(values.items())]
    if args.output:
        lines.append(f"written:   {args.output}")
    _emit(args, payload, lines)
    return 0


def _cmd_validate(args) -> int:
    try:
        model = load_model(args.model)
    except OSError as exc:
        raise _CliError(f"cannot read model: {exc}", EXIT_BAD_MODEL)
    except ModelError as exc:
        raise _CliError(f"invalid model: {exc}", EXIT_BAD_MODEL)
    report = validate(model)
    payload = {"model": args.model, "violations": report}
    lines = (
        [f"model {args.model} is valid"]
        if not report
        else [f"model {args.model} is invalid:"] + [f"  - {line}" for line in report]
    )
    _emit(args, payload, lines)
    return 0 if not report else EXIT_BAD_MODEL


def _cmd_oracle(args) -> int:
    model = _load_valid_model(args.model)
    try:
        if args.formula:
            phi = _read_formula(args)
            satisfied = oracle.oracle_sat(model, phi, args.limit)
            payload = {
                "formula": print_state(phi),
                "sat": sorted(satisfied),
                "initial": model.initial,
                "satisfied": model.initial in satisfied,
            }
            if isinstance(phi, ObstructQuery):
                values = oracle.oracle_query_values(model, phi, args.limit)
                payload["mode"] = "min" if phi.cmp in ("<", "<=") else "max"
                payload["grade"] = phi.grade
                payload["values"] = {
                    q: _rational_text(v) for q, v in sorted(values.items())
                }
            lines = [
                f"formula:   {payload['formula']}",
                f"sat:       {{{', '.join(payload['sat'])}}}",
                f"initial:   {model.initial} "
                f"{'satisfies' if payload['satisfied'] else 'does not satisfy'}",
            ]
            if "values" in payload:
                lines += [f"{q}: {t}" for q, t in payload["values"].items()]
            _emit(args, payload, lines)
            return 0
        theta = _read_path(args)
        sat1, sat2 = _oracle_operand_sets(model, theta, args.limit)
        if args.strategy:
            strategy = _load_strategy_for(model, args.strategy)
            values = oracle.exact_prob(model, strategy, theta, sat1, sat2)
            payload = {
                "formula": print_path(theta),
                "mode": "fixed",
                "grade": strategy.grade,
                "values": {q: _rational_text(v) for q, v in sorted(values.items())},
            }
        elif isinstance(theta, (Next, Until, Release)):
            result = oracle.oracle_optimum(
                model, theta, sat1, sat2, args.grade, args.mode, args.limit
            )
            payload = {
                "formula": print_path(theta),
                "mode": args.mode,
                "grade": args.grade,
                "values": {
                    q: _rational_text(v) for q, v in sorted(result.values.items())
                },
                "witnesses": {
                    q: json.loads(strategy_to_json(w))["removal"]
                    for q, w in sorted(result.witnesses.items())
                },
            }
        else:
            # bounded operators: exact optimum with per-step re-choice
            values = oracle.step_optimum(model, theta, sat1, sat2, args.grade, args.mode)
            payload = {
                "formula": print_path(theta),
                "mode": args.mode,
                "grade": args.grade,
                "values": {q: _rational_text(v) for q, v in sorted(values.items())},
            }
        lines = [f"path:      {payload['formula']}"]
        lines += [f"{q}: {t}" for q, t in payload["values"].items()]
        _emit(args, payload, lines)
        return 0
    except oracle.EnumerationLimit as exc:
        raise _CliError(str(exc), EXIT_ORACLE_LIMIT)


def _oracle_operand_sets(model, theta, limit):
    if isinstance(theta, Next):
        return frozenset(), oracle.oracle_sat(model, theta.body, limit)
    return (
        oracle.oracle_sat(model, theta.left, limit),
        oracle.oracle_sat(model, theta.right, limit),
    )


def _cmd_conformance(args) -> int:
    model = _load_valid_model(args.model)
    theta = _read_path(args)
    if not isinstance(theta, (Until, Release)):
        raise _CliError(
            "conformance reports cover the unbounded until and release operators",
            EXIT_USAGE,
        )
    release = isinstance(theta, Release)
    stats = engine.Stats()
    sat1, sat2 = engine.operand_sets(model, theta, EngineOptions(), stats)
    algo_zero = engine.qual_zero_search(model, sat1, sat2, args.grade, release)
    algo_one = engine.qual_one_search(model, sat1, sat2, args.grade, algo_zero, release)
    try:
        oracle_zero, oracle_one = oracle.qualitative_sets(
            model, theta, sat1, sat2, args.grade, "min", args.limit
        )
    except oracle.EnumerationLimit as exc:
        raise _CliError(str(exc), EXIT_ORACLE_LIMIT)
    payload = {
        "formula": print_path(theta),
        "grade": args.grade,
        "mode": "min",
        "backward_search_zero": sorted(algo_zero),
        "backward_search_one": sorted(algo_one),
        "oracle_zero": sorted(oracle_zero),
        "oracle_one": sorted(oracle_one),
        "zero_diff": {
            "search_only": sorted(algo_zero - oracle_zero),
            "oracle_only": sorted(oracle_zero - algo_zero),
        },
        "one_diff": {
            "search_only": sorted(algo_one - oracle_one),
            "oracle_only": sorted(oracle_one - algo_one),
        },
    }
    agrees = algo_zero == oracle_zero and algo_one == oracle_one
    lines = [
        f"path:           {payload['formula']} (grade {args.grade}, min mode)",
        f"search zero:    {{{', '.join(payload['backward_search_zero'])}}}",
        f"oracle zero:    {{{', '.join(payload['oracle_zero'])}}}",
        f"search one:     {{{', '.join(payload['backward_search_one'])}}}",
        f"oracle one:     {{{', '.join(payload['oracle_one'])}}}",
        "agreement:      exact" if agrees else "agreement:      DIFFERS (informational)",
    ]
    _emit(args, payload, lines)
    return 0


# -- argument parsing -----------------------------------------------------------


def _add_engine_flags(sub) -> None:
    sub.add_argument("--epsilon", type=float, default=1e-10)
    sub.add_argument("--max-iterations", type=int, default=10**6)
    sub.add_argument("--solver", choices=["vi", "pi"], default="vi")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="potl",
        description="Model check obstruction queries over probabilistic "
        "structures with edge-removal costs.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    check = subparsers.add_parser("check", help="decide a state formula")
    check.add_argument("--model", required=True)
    group = check.add_mutually_exclusive_group(required=True)
    group.add_argument("--formula")
    group.add_argument("--formula-file")
    _add_engine_flags(check)
    check.add_argument("--json", action="store_true")
    check.set_defaults(func=_cmd_check)

    prob = subparsers.add_parser("prob", help="per-state path probabilities")
    prob.add_argument("--model", required=True)
    prob.add_argument("--path", required=True)
    prob.add_argument("--grade", type=int, default=0)
    prob.add_argument("--mode", choices=["min", "max"], default="min")
    prob.add_argument("--state")
    prob.add_argument("--strategy", help="evaluate this fixed strategy instead")
    _add_engine_flags(prob)
    prob.add_argument("--json", action="store_true")
    prob.set_defaults(func=_cmd_prob)

    synth = subparsers.add_parser("synthesize", help="extract a witness strategy")
    synth.add_argument("--model", required=True)
    synth.add_argument("--path", required=True)
    synth.add_argument("--grade", type=int, required=True)
    synth.add_argument("--mode", choices=["min", "max"], default="min")
    synth.add_argument("--output", "-o")
    _add_engine_flags(synth)
    synth.add_argument("--json", action="store_true")
    synth.set_defaults(func=_cmd_synthesize)

    val = subparsers.add_parser("validate", help="check model well-formedness")
    val.add_argument("--model", required=True)
    val.add_argument("--json", action="store_true")
    val.set_defaults(func=_cmd_validate)

    orc = subparsers.add_parser("oracle", help="exact rational ground truth")
    orc.add_argument("--model", required=True)
    group = orc.add_mutually_exclusive_group(required=True)
    group.add_argument("--formula")
    group.add_argument("--path")
    orc.add_argument("--grade", type=int, default=0)
    orc.add_argument("--mode", choices=["min", "max"], default="min")
    orc.add_argument("--strategy")
    orc.add_argument("--limit", type=int, default=oracle.DEFAULT_LIMIT)
    orc.add_argument("--json", action="store_true")
    orc.set_defaults(func=_cmd_oracle)

    conf = subparsers.add_parser(
        "conformance", help="backward-search transcriptions vs oracle sets"
    )
    conf.add_argument("--model", required=True)
    conf.add_argument("--path", required=True)
    conf.add_argument("--grade", type=int, required=True)
    conf.add_argument("--limit", type=int, default=oracle.DEFAULT_LIMIT)
    conf.add_argument("--json", action="store_true")
    conf.set_defaults(func=_cmd_conformance)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _CliError as exc:
        print(str(exc), file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
