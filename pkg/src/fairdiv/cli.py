"""Command-line front end.

Exit codes: 0 success (all requested notions hold), 1 a requested notion
fails, 2 malformed input or usage error, 3 instance too large, 4 mode not
applicable to the instance class.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import fairness, oracle, solvers
from .generate import CLASSES, random_instance
from .measure import cell_rates
from .model import (
    FORMAT,
    FairdivError,
    InstanceTooLargeError,
    NotApplicableError,
    SchemaError,
    format_rational,
    parse_allocation,
    parse_instance,
    parse_tolerance,
    serialize_allocation,
    serialize_instance,
)
from .polymatroid import canonical_partition

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_TOO_LARGE, EXIT_NOT_APPLICABLE = 0, 1, 2, 3, 4

DEFAULT_CAPS = {"agents": 8, "indivisible": 12, "divisible": 6, "cells": 8}


class UsageError(FairdivError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _caps(args) -> dict[str, int]:
    caps = {k: getattr(args, f"max_{k}") or v for k, v in DEFAULT_CAPS.items()}
    if any(caps[k] > DEFAULT_CAPS[k] for k in caps) and not args.unsafe_large:
        raise UsageError("raising an enumeration cap requires --unsafe-large")
    return caps


def _check_size(inst, caps) -> None:
    cells = max((len(cell_rates(inst, c.id)) for c in inst.divisible), default=0)
    sizes = {"agents": inst.n, "indivisible": len(inst.indivisible), "divisible": len(inst.divisible), "cells": cells}
    for k, v in sizes.items():
        if v > caps[k]:
            raise InstanceTooLargeError(f"instance too large: {v} {k} (cap {caps[k]})")


def cmd_check(args) -> int:
    inst = parse_instance(_read(args.instance))
    alloc = parse_allocation(inst, _read(args.allocation))
    if args.notions:
        try:
            notions = [fairness.CLI_NAMES[x.strip().lower()] for x in args.notions.split(",") if x.strip()]
        except KeyError as e:
            raise UsageError(f"unknown notion {e.args[0]!r}; choose from {', '.join(fairness.CLI_NAMES)}") from None
    else:
        notions = list(fairness.NOTIONS)
    report = fairness.full_report(inst, alloc, parse_tolerance(args.slack), notions)
    sys.stdout.write(report.to_json())
    return EXIT_OK if report.all_hold else EXIT_FAIL


def cmd_solve(args) -> int:
    inst = parse_instance(_read(args.instance))
    _check_size(inst, _caps(args))
    obj = args.objective
    if obj == "ef1m":
        result = solvers.construct_ef1m(inst)
    else:
        try:
            objective = solvers.Objective.parse(obj)
        except ValueError as e:
            raise UsageError(str(e)) from None
        tol = float(parse_tolerance(args.tol))
        scope = args.scope or ("uo" if args.mode == "exact" else "all")
        if args.mode == "exact" and scope != "uo":
            raise NotApplicableError("exact mode optimizes over utilitarian optimal allocations only")
        if objective.kind == "phi":
            if args.mode != "exact":
                raise NotApplicableError("phi objectives are solved in exact mode only")
            result = solvers.solve_phi_fair(inst, objective)
        elif objective.kind == "mnw":
            if args.scope == "uo" and args.mode == "approx":
                raise NotApplicableError("approximate MNW ranges over all allocations")
            result = solvers.solve_mnw(inst, args.mode, tol)
        else:
            result = solvers.solve_leximin(inst, args.mode, scope, tol)
    _emit(serialize_allocation(result.allocation, result.metadata()), args.out)
    return EXIT_OK


def cmd_partition(args) -> int:
    inst = parse_instance(_read(args.instance))
    part = canonical_partition(inst)
    sys.stdout.write(json.dumps({"format": FORMAT, **part.to_dict()}, indent=2) + "\n")
    return EXIT_OK


def cmd_gen(args) -> int:
    caps = _caps(args)
    sizes = {"agents": args.agents, "indivisible": args.indivisible, "divisible": args.divisible, "cells": args.cells}
    for k, v in sizes.items():
        if v > caps[k]:
            raise InstanceTooLargeError(f"instance too large: {v} {k} (cap {caps[k]})")
    try:
        inst = random_instance(args.seed, args.agents, args.indivisible, args.divisible, args.klass, args.cells)
    except ValueError as e:
        raise UsageError(str(e)) from None
    _emit(serialize_instance(inst), args.out)
    return EXIT_OK


def cmd_oracle(args) -> int:
    inst = parse_instance(_read(args.instance))
    if args.pareto:
        if not args.allocation:
            raise UsageError("--pareto needs --allocation")
        if inst.divisible:
            raise NotApplicableError("the Pareto oracle handles indivisible-only instances")
        alloc = parse_allocation(inst, _read(args.allocation))
        res = oracle.brute_force_pareto_check(inst, alloc)
        sys.stdout.write(json.dumps({"format": FORMAT, "notions": {"PO": res.to_dict()}}, indent=2) + "\n")
        return EXIT_OK if res.holds else EXIT_FAIL
    objective = solvers.Objective.parse(args.objective)
    if not inst.divisible and objective.kind == "mnw":
        res = oracle.brute_force_mnw_indivisible(inst)
        body = {
            "utilities": {a: format_rational(u) for a, u in res.utilities.items()},
            "assignments": [dict(zip([g.id for g in inst.indivisible], c)) for c in res.assignments],
        }
    else:
        utils = oracle.discretized_solve(inst, objective, args.slices)
        body = {"slices": args.slices, "utilities": {a: format_rational(u) for a, u in utils.items()}}
    sys.stdout.write(json.dumps({"format": FORMAT, "objective": str(objective), **body}, indent=2) + "\n")
    return EXIT_OK


def _add_caps(p) -> None:
    for k in DEFAULT_CAPS:
        p.add_argument(f"--max-{k}", type=int, default=None, help=f"cap on {k} (default {DEFAULT_CAPS[k]})")
    p.add_argument("--unsafe-large", action="store_true", help="allow caps above the defaults")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fairdiv", description="Fair allocation of mixed divisible and indivisible goods.")
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    p = sub.add_parser("check", help="check fairness notions of an allocation")
    p.add_argument("--instance", required=True)
    p.add_argument("--allocation", required=True)
    p.add_argument("--slack", default="0")
    p.add_argument("--notions", default=None, help="comma list of: " + ",".join(fairness.CLI_NAMES))
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("solve", help="compute an allocation")
    p.add_argument("--instance", required=True)
    p.add_argument("--objective", required=True, choices=["mnw", "leximin", "phi:sq", "phi:pow4", "ef1m"])
    p.add_argument("--mode", choices=["exact", "approx"], default="exact")
    p.add_argument("--tol", default="1e-9")
    p.add_argument("--scope", choices=["all", "uo"], default=None)
    p.add_argument("--out", default=None)
    _add_caps(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("partition", help="canonical partition of a binary linear instance")
    p.add_argument("--instance", required=True)
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("gen", help="generate a random instance")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--agents", type=int, required=True)
    p.add_argument("--indivisible", type=int, default=0)
    p.add_argument("--divisible", type=int, default=0)
    p.add_argument("--class", dest="klass", choices=CLASSES, default="additive")
    p.add_argument("--cells", type=int, default=2)
    p.add_argument("--out", default=None)
    _add_caps(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("oracle", help="brute-force reference solutions")
    p.add_argument("--instance", required=True)
    p.add_argument("--objective", default="mnw", choices=["mnw", "leximin", "phi:sq", "phi:pow4"])
    p.add_argument("--slices", type=int, default=12)
    p.add_argument("--pareto", action="store_true", help="Pareto-check --allocation instead")
    p.add_argument("--allocation", default=None)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except InstanceTooLargeError as e:
        print(f"fairdiv: {e}", file=sys.stderr)
        return EXIT_TOO_LARGE
    except NotApplicableError as e:
        print(f"fairdiv: mode not applicable: {e}", file=sys.stderr)
        return EXIT_NOT_APPLICABLE
    except (SchemaError, FairdivError, ValueError) as e:
        print(f"fairdiv: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
