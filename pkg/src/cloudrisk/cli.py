"""Command-line front end.

Exit codes: 0 ok, 2 bad input (parse/validation/config), 3 enumeration cap
exceeded, 4 unsupported sweep, 5 infeasible decision.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys

from .errors import (
    EnumerationTooLargeError,
    MalformedDecisionError,
    SweepConfigError,
    UnsupportedSweepError,
)
from .experiments import ParamPath, SweepSpec, parse_grid, policy_description, run_sweep
from .model import RiskInstance
from .objective import is_feasible, spend, total_cost, total_cost_by_expansion
from .serialization import (
    InstanceParseError,
    dump_decision,
    load_instance,
    parse_decision,
    write_atomic,
)
from .simulator import simulate
from .solver import BaselineMode, solve

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CAP = 3
EXIT_UNSUPPORTED = 4
EXIT_INFEASIBLE = 5

MODES = {m.value: m for m in BaselineMode}


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _policy_table(instance: RiskInstance, decision) -> str:
    policy = policy_description(decision)
    width = max([len(a.name) for a in instance.attacks] + [6])
    lines = [f"{'attack':<{width}}  {'policy':<8}  repairs by direct loss"]
    for attack, (label, repairs) in zip(instance.attacks, policy):
        reps = "  ".join(f"d{g + 1}:{r}" for g, r in enumerate(repairs))
        lines.append(f"{attack.name:<{width}}  {label:<8}  {reps}")
    return "\n".join(lines)


def _breakdown_lines(b) -> list[str]:
    return [
        f"stage1 (fees/premiums)     {_fmt(b.stage1)}",
        f"stage2 (direct + repairs)  {_fmt(b.stage2)}",
        f"stage3 (indirect - claims) {_fmt(b.stage3)}",
        f"total                      {_fmt(b.total)}",
    ]


def policy_csv(instance: RiskInstance, decision) -> str:
    rows = []
    for attack, (label, repairs) in zip(instance.attacks, policy_description(decision)):
        for g, r in enumerate(repairs):
            rows.append([attack.name, label, f"d{g + 1}", r])
    return _csv_text(["attack", "policy", "direct_loss", "repair"], rows)


def cmd_validate(args, out) -> int:
    load_instance(args.file)
    print(f"{args.file}: valid", file=out)
    return EXIT_OK


def cmd_solve(args, out) -> int:
    instance = load_instance(args.file)
    result = solve(instance, MODES[args.mode], args.solver)
    print(f"mode: {args.mode}   solver: {result.solver_name}   nodes: {result.nodes_explored}", file=out)
    print(_policy_table(instance, result.decision), file=out)
    print("", file=out)
    print("\n".join(_breakdown_lines(result.breakdown)), file=out)
    print(f"spend {_fmt(result.spend)} of budget {_fmt(instance.budget)}", file=out)
    if args.csv:
        write_atomic(args.csv, policy_csv(instance, result.decision))
    if args.decision_out:
        write_atomic(args.decision_out, dump_decision(instance, result.decision))
    return EXIT_OK


def _load_decision(path, instance):
    with open(path, encoding="utf-8") as fh:
        return parse_decision(fh.read(), instance)


def cmd_evaluate(args, out) -> int:
    instance = load_instance(args.file)
    decision = _load_decision(args.decision, instance)
    b = total_cost(instance, decision)
    print(_policy_table(instance, decision), file=out)
    print("", file=out)
    print("\n".join(_breakdown_lines(b)), file=out)
    outlay = spend(instance, decision)
    print(f"spend {_fmt(outlay)} of budget {_fmt(instance.budget)}"
          f" ({'feasible' if is_feasible(instance, decision) else 'INFEASIBLE'})", file=out)
    try:
        expanded = total_cost_by_expansion(instance, decision)
    except EnumerationTooLargeError as exc:
        print(f"expansion check skipped: {exc}", file=out)
    else:
        print(f"expansion total            {_fmt(expanded)}   |diff| {abs(expanded - b.total):.3e}",
              file=out)
    return EXIT_OK


def cmd_simulate(args, out) -> int:
    instance = load_instance(args.file)
    decision = _load_decision(args.decision, instance)
    if not is_feasible(instance, decision):
        print(f"infeasible decision: spend {_fmt(spend(instance, decision))} exceeds budget "
              f"{_fmt(instance.budget)}", file=sys.stderr)
        return EXIT_INFEASIBLE
    summary = simulate(instance, decision, args.runs, args.seed)
    closed = total_cost(instance, decision).total
    diff = abs(summary.mean_cost - closed)
    if diff == 0.0:
        ratio = "0"
    elif summary.std_error > 0:
        ratio = f"{diff / summary.std_error:.3f}"
    else:
        ratio = "inf"
    print(f"runs {summary.runs}   seed {summary.seed}   generator {summary.generator}", file=out)
    print(f"simulated mean     {_fmt(summary.mean_cost)}", file=out)
    print(f"standard error     {_fmt(summary.std_error)}"
          + ("   (degenerate: single run)" if summary.degenerate else ""), file=out)
    print("stage means        " + "  ".join(_fmt(x) for x in summary.stage_means), file=out)
    print(f"closed-form total  {_fmt(closed)}", file=out)
    print(f"|difference|       {_fmt(diff)}", file=out)
    print(f"|difference|/se    {ratio}", file=out)
    return EXIT_OK


def _parse_fix(text: str) -> tuple[ParamPath, float]:
    path, sep, value = text.rpartition("=")
    if not sep:
        raise SweepConfigError(f"--fix needs <path>=<value>, got {text!r}")
    try:
        return ParamPath.parse(path), float(value)
    except ValueError:
        raise SweepConfigError(f"bad --fix value {value!r}") from None


def cmd_sweep(args, out) -> int:
    instance = load_instance(args.file)
    spec = SweepSpec(
        base=instance,
        parameter=ParamPath.parse(args.param),
        grid=parse_grid(args.grid),
        fixed=tuple(_parse_fix(f) for f in args.fix),
        baseline_repairs=not args.no_baseline_repairs,
    )
    rows = run_sweep(spec)
    os.makedirs(args.out, exist_ok=True)

    names = [a.name for a in instance.attacks]
    header = ["value"]
    for k, name in enumerate(names):
        header.append(f"{name}_policy")
        header += [f"{name}_d{g + 1}" for g in range(instance.attacks[k].n_direct)]
    policy_rows = []
    for row in rows:
        line = [_fmt(row.value)]
        for label, repairs in row.policy:
            line.append(label)
            line.extend(repairs)
        policy_rows.append(line)
    write_atomic(os.path.join(args.out, "policies.csv"), _csv_text(header, policy_rows))

    modes = list(spec.modes)
    cost_rows = [[_fmt(r.value)] + [_fmt(r.objectives[m]) for m in modes] for r in rows]
    write_atomic(os.path.join(args.out, "costs.csv"),
                 _csv_text(["value"] + [m.value for m in modes], cost_rows))

    comp_rows = []
    for r in rows:
        for name, c in zip(names, r.components):
            comp_rows.append([_fmt(r.value), name, _fmt(c.direct), _fmt(c.indirect),
                              _fmt(c.claims), _fmt(c.fees), _fmt(c.total)])
    write_atomic(os.path.join(args.out, "components.csv"),
                 _csv_text(["value", "attack", "direct", "indirect", "claims", "fees", "total"],
                           comp_rows))
    print(f"{len(rows)} sweep points written to {args.out}", file=out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cloudrisk", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check an instance file")
    p.add_argument("file")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("solve", help="find the cost-minimising decision")
    p.add_argument("file")
    p.add_argument("--mode", choices=list(MODES), default="full")
    p.add_argument("--solver", choices=["bnb", "bruteforce"], default="bnb")
    p.add_argument("--csv", help="write the policy table as CSV")
    p.add_argument("--decision-out", help="write the optimal decision as a JSON decision file")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("evaluate", help="cost a given decision (with expansion cross-check)")
    p.add_argument("file")
    p.add_argument("--decision", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("simulate", help="Monte Carlo estimate of a decision's cost")
    p.add_argument("file")
    p.add_argument("--decision", required=True)
    p.add_argument("--runs", type=int, default=100_000)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="solve across a parameter grid and write CSV tables")
    p.add_argument("file")
    p.add_argument("--param", required=True,
                   help="attack-prob:<name> or direct-loss-prob:<attack>/<outcome>")
    p.add_argument("--grid", required=True, help="start:stop:step, or a single value")
    p.add_argument("--fix", action="append", default=[],
                   help="pin another parameter first, e.g. attack-prob:a1=0.4")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--no-baseline-repairs", action="store_true",
                   help="forbid repair packages in the restricted baselines")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    args = build_parser().parse_args(argv)
    if getattr(args, "runs", 1) < 1:
        print("error: --runs must be >= 1", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args, out)
    except InstanceParseError as exc:
        print(f"error: {args.file}:", file=sys.stderr)
        for problem in exc.problems:
            print(f"  {problem}", file=sys.stderr)
        return EXIT_INPUT
    except (MalformedDecisionError, SweepConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except EnumerationTooLargeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except UnsupportedSweepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED


if __name__ == "__main__":
    sys.exit(main())
