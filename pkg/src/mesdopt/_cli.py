# SPDX-License-Identifier: Apache-2.0

"""The ``mesdopt`` command line."""

from __future__ import annotations

import argparse
import json
import logging
from pathlib import Path
import sys
from typing import Any
from typing import Dict
from typing import List
from typing import Optional
from typing import Sequence

from ._about import __version__
from ._enums import SolveStatus
from ._enums import Strategy
from ._lpformat import export_model
from ._options import SolverOptions
from ._plots import write_report
from ._scenario import SHIPPED_SCENARIOS
from ._scenario import Scenario
from ._scenario import load_scenario
from ._scenario import shipped_scenario
from ._schedule import Schedule
from ._schedule import comparison_table
from ._schedule import read_schedule
from ._schedule import write_schedule
from ._scheduler import SWEEP_PARAMETERS
from ._scheduler import Precomputed
from ._scheduler import assemble
from ._scheduler import prepare
from ._scheduler import solve_all
from ._scheduler import solve_strategy
from ._scheduler import sweep
from ._transit import dump_transit
from ._validator import ValidationReport
from ._validator import replay
from .exceptions import Error

LOGGER = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_GAP_LIMIT = 2

CASES = {
    "1": Strategy.CO_OPTIMIZED,
    "2": Strategy.STATIONARY,
    "3": Strategy.FIXED_PATH,
    "none": Strategy.NO_STORAGE,
}
_LABELS = {strategy.label: strategy for strategy in Strategy}


def _scenario_path(value: str) -> Path:
    if value in SHIPPED_SCENARIOS and not Path(value).exists():
        return shipped_scenario(value)
    return Path(value)


def _pin_start(
    values: Optional[Sequence[str]], scenario: Scenario
) -> Optional[Dict[str, Any]]:
    if not values:
        return None
    by_text = {str(sid): sid for sid in scenario.stations.ids}
    pins = dict(scenario.options.pin_start or {})
    devices = {spec.name for spec in scenario.fleet + (scenario.case3_fleet or ())}
    for value in values:
        device, sep, station = value.partition(":")
        if not sep or station not in by_text:
            raise ValueError(
                f"--pin-start wants DEVICE:STATION with a known station, got {value!r}"
            )
        if device not in devices:
            raise ValueError(f"--pin-start names unknown device {device!r}")
        pins[device] = by_text[station]
    return pins


def _load(args: argparse.Namespace) -> Scenario:
    return load_scenario(_scenario_path(args.scenario), nk_override=args.nk_override)


def _options(args: argparse.Namespace, scenario: Scenario) -> SolverOptions:
    """Scenario options with every flag given on the command line applied."""
    return scenario.options.updated(
        gap=args.gap,
        time_limit=args.time_limit,
        node_limit=args.node_limit,
        solver=args.solver,
        lp_method=args.lp_method,
        max_transits=args.max_transits,
        pin_start=_pin_start(args.pin_start, scenario),
    )


def _status_code(status: SolveStatus) -> int:
    if status is SolveStatus.OPTIMAL:
        return EXIT_OK
    if status is SolveStatus.GAP_LIMIT:
        return EXIT_GAP_LIMIT
    return EXIT_ERROR


def _write_json(path: Path, document: Any) -> None:
    text = json.dumps(document, indent=2, sort_keys=True)
    path.write_text(text + "\n", encoding="utf-8")


def _maybe_dump_transit(args: argparse.Namespace, pre: Precomputed, out: Path) -> None:
    if args.dump_transit:
        dump_transit(pre.paths, pre.transit, out)


def cmd_solve(args: argparse.Namespace) -> int:
    scenario = _load(args)
    options = _options(args, scenario)
    strategy = CASES[args.case]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    pre = prepare(scenario, options)
    _maybe_dump_transit(args, pre, out)
    if args.export_only:
        return _export(scenario, pre, strategy, options, out / "model.lp")
    schedule = solve_strategy(scenario, strategy, options=options, precomputed=pre)
    write_schedule(schedule, out)
    print(
        f"{strategy.label}: {schedule.status.value}, J = {schedule.objective:.6g},"
        f" J_total = {schedule.j_total:.6g}"
    )
    return _status_code(schedule.status)


def _export(
    scenario: Scenario,
    pre: Precomputed,
    strategy: Strategy,
    options: SolverOptions,
    path: Path,
) -> int:
    if strategy is Strategy.NO_STORAGE:
        raise ValueError("the no-storage case has no model to export")
    assembled = assemble(scenario, pre, strategy=strategy, options=options)
    export_model(assembled.model, path)
    print(f"wrote {path}")
    return EXIT_OK


def cmd_export(args: argparse.Namespace) -> int:
    scenario = _load(args)
    options = _options(args, scenario)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    pre = prepare(scenario, options)
    _maybe_dump_transit(args, pre, out)
    return _export(scenario, pre, CASES[args.case], options, out / "model.lp")


def cmd_compare(args: argparse.Namespace) -> int:
    scenario = _load(args)
    options = _options(args, scenario)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    pre = prepare(scenario, options)
    _maybe_dump_transit(args, pre, out)
    schedules = solve_all(scenario, options=options, precomputed=pre)
    reports: Dict[Strategy, ValidationReport] = {}
    for schedule in schedules:
        write_schedule(schedule, out / schedule.strategy.label)
        reports[schedule.strategy] = replay(
            schedule, scenario, strict=args.strict, paths=pre.paths
        )
    table = comparison_table(schedules, reports)
    table.to_csv(out / "comparison.csv", index=False, lineterminator="\n")
    _write_json(out / "comparison.json", table.to_dict(orient="records"))
    print(table.to_string(index=False))
    return max(_status_code(s.status) for s in schedules)


def _run_schedule(args: argparse.Namespace, scenario: Scenario) -> Schedule:
    run = Path(args.run)
    strategy = Strategy.CO_OPTIMIZED
    summary = run / "summary.json"
    if summary.exists():
        label = json.loads(summary.read_text(encoding="utf-8")).get("case")
        strategy = _LABELS.get(label, strategy)
    return read_schedule(run / "schedule.csv", scenario, strategy=strategy)


def cmd_validate(args: argparse.Namespace) -> int:
    scenario = _load(args)
    schedule = _run_schedule(args, scenario)
    report = replay(schedule, scenario, strict=args.strict)
    path = Path(args.run) / "validation.json"
    _write_json(path, report.to_dict())
    for violation in report.violations:
        print(
            f"violation: {violation.constraint} at step {violation.step}"
            f" {violation.element} by {violation.magnitude:.6g}"
        )
    for warning in report.warnings:
        print(f"warning: {warning}")
    verdict = "passed" if report.passed else "FAILED"
    print(
        f"{verdict}: E_loss_tot = {report.e_loss_tot_kwh:.6g} kWh,"
        f" J_total = {report.j_total:.6g}, V_rms = {report.v_rms:.6g}"
    )
    return EXIT_OK if report.passed else EXIT_ERROR


def cmd_report(args: argparse.Namespace) -> int:
    scenario = _load(args)
    schedule = _run_schedule(args, scenario)
    baseline = None
    if args.with_baseline:
        baseline = prepare(scenario).baseline.per_step_kw
    written = write_report(schedule, Path(args.out or args.run), baseline)
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    scenario = _load(args)
    options = _options(args, scenario)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    strategies = [CASES[c] for c in args.cases]
    table = sweep(scenario, args.parameter, args.factors, strategies, options=options)
    table.to_csv(out / f"sweep_{args.parameter}.csv", index=False, lineterminator="\n")
    print(table.to_string(index=False))
    return EXIT_OK


def _add_scenario(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--scenario",
        required=True,
        help="scenario JSON file, or one of the shipped names "
        + ", ".join(SHIPPED_SCENARIOS),
    )
    parser.add_argument(
        "--nk-override", type=int, default=None, help="number of steps to resample to"
    )


def _add_solver(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--gap", type=float, default=None)
    parser.add_argument(
        "--time-limit", type=float, default=None, help="seconds per MILP"
    )
    parser.add_argument("--node-limit", type=int, default=None)
    parser.add_argument("--solver", choices=("bnb", "highs"), default=None)
    parser.add_argument("--lp-method", choices=("simplex", "highs"), default=None)
    parser.add_argument("--max-transits", type=int, default=None)
    parser.add_argument(
        "--pin-start",
        action="append",
        metavar="DEVICE:STATION",
        help="station a device must start at; repeatable",
    )
    parser.add_argument(
        "--dump-transit",
        action="store_true",
        help="also write the path table and transit matrix as CSV",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mesdopt",
        description="Day-ahead scheduling of mobile energy storage"
        " on a distribution grid.",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    parser.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        help="INFO logging; twice for DEBUG",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    solve = commands.add_parser("solve", help="solve one case and write its schedule")
    _add_scenario(solve)
    _add_solver(solve)
    solve.add_argument("--case", choices=tuple(CASES), default="1")
    solve.add_argument(
        "--export-only", action="store_true", help="write model.lp without solving"
    )
    solve.set_defaults(handler=cmd_solve)

    export = commands.add_parser(
        "export", help="write the MILP of one case as model.lp"
    )
    _add_scenario(export)
    _add_solver(export)
    export.add_argument("--case", choices=("1", "2", "3"), default="1")
    export.set_defaults(handler=cmd_export)

    compare = commands.add_parser("compare", help="solve every case and tabulate them")
    _add_scenario(compare)
    _add_solver(compare)
    compare.add_argument(
        "--strict", action="store_true", help="count loss discrepancies as violations"
    )
    compare.set_defaults(handler=cmd_compare)

    validate = commands.add_parser(
        "validate", help="replay a schedule with AC power flow"
    )
    _add_scenario(validate)
    validate.add_argument("--run", required=True, help="directory holding schedule.csv")
    validate.add_argument(
        "--strict", action="store_true", help="count loss discrepancies as violations"
    )
    validate.set_defaults(handler=cmd_validate)

    report = commands.add_parser("report", help="draw SVG charts of a schedule")
    _add_scenario(report)
    report.add_argument("--run", required=True, help="directory holding schedule.csv")
    report.add_argument(
        "--out", default=None, help="chart directory, the run by default"
    )
    report.add_argument(
        "--with-baseline",
        action="store_true",
        help="run baseline power flows to draw absolute losses",
    )
    report.set_defaults(handler=cmd_report)

    sweep_cmd = commands.add_parser("sweep", help="scale one parameter and re-solve")
    _add_scenario(sweep_cmd)
    _add_solver(sweep_cmd)
    sweep_cmd.add_argument("--parameter", choices=SWEEP_PARAMETERS, required=True)
    sweep_cmd.add_argument(
        "--factors", type=float, nargs="+", default=[0.5, 0.75, 1.0, 1.25, 1.5]
    )
    sweep_cmd.add_argument("--cases", nargs="+", choices=tuple(CASES), default=["1"])
    sweep_cmd.set_defaults(handler=cmd_sweep)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING
    if args.verbose == 1:
        level = logging.INFO
    elif args.verbose > 1:
        level = logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return int(args.handler(args))
    except (Error, OSError, ValueError) as error:
        print(f"mesdopt: error: {error}", file=sys.stderr)
        return EXIT_ERROR
