# SPDX-License-Identifier: Apache-2.0

"""Assembly, solution and decoding of the storage scheduling problem."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
import logging
import math
from typing import Dict
from typing import Iterable
from typing import List
from typing import Optional
from typing import Sequence
from typing import Tuple

import numpy as np
import pandas as pd

from ._bnb import solve
from ._enums import RowSense
from ._enums import Strategy
from ._enums import VarKind
from ._grid import BaselineLosses
from ._grid import SensitivityBundle
from ._grid import compute_sensitivities
from ._grid import incremental_limits
from ._milp import LinearRow
from ._milp import MilpModel
from ._milp import MilpSolution
from ._milp import VarKey
from ._milp import VariableDecl
from ._milp import key_name
from ._options import SolverOptions
from ._options import resolve_solver_options
from ._plans import TransitPlan
from ._plans import check_transit_feasibility
from ._plans import random_transit_plan
from ._scenario import MesdSpec
from ._scenario import Scenario
from ._schedule import Schedule
from ._schedule import zero_schedule
from ._transit import PathTable
from ._transit import TransitMatrix
from ._transit import TravelTimeTable
from ._transit import edge_travel_times
from ._transit import fastest_paths
from ._transit import transit_constraints
from ._transit import transit_model
from .exceptions import AssemblyError
from .exceptions import ConsistencyError
from .exceptions import InfeasiblePathError
from .exceptions import SolverError

LOGGER = logging.getLogger(__name__)

ROUNDING_TOL = 1e-6
_CHECK_TOL = 1e-6
SWEEP_PARAMETERS = ("p_max", "e_cap", "dv_max", "dl_max")


@dataclass(frozen=True)
class Precomputed:
    """Everything a strategy solve needs that does not depend on the fleet."""

    times: TravelTimeTable
    paths: PathTable
    transit: TransitMatrix
    bundle: SensitivityBundle
    baseline: BaselineLosses


@dataclass(frozen=True)
class AssembledModel:
    model: MilpModel
    index: Dict[VarKey, int]
    fleet: Tuple[MesdSpec, ...]
    strategy: Strategy
    scenario: Scenario
    precomputed: Precomputed


def prepare(scenario: Scenario, options: Optional[SolverOptions] = None) -> Precomputed:
    """Paths, transit matrix, sensitivities and baseline losses of ``scenario``."""
    resolved = resolve_solver_options(options or scenario.options)
    times = edge_travel_times(scenario.road)
    threads = resolved.threads
    paths = fastest_paths(
        scenario.road, times, scenario.stations, scenario.t_unit, threads=threads
    )
    bundle = compute_sensitivities(scenario.grid, scenario.limits, threads=threads)
    per_step = bundle.baseline_losses_kw
    cost = float(np.sum(scenario.price_array() * per_step) * scenario.t_unit)
    baseline = BaselineLosses(per_step, cost)
    return Precomputed(times, paths, transit_model(paths), bundle, baseline)


def _check_dimensions(scenario: Scenario, pre: Precomputed) -> None:
    n_v, n_k = scenario.n_buses, scenario.n_steps
    if pre.bundle.n_steps != n_k or pre.paths.n_steps != n_k:
        raise AssemblyError(
            f"precomputed data covers {pre.bundle.n_steps} grid and"
            f" {pre.paths.n_steps} road steps, scenario has {n_k}"
        )
    if pre.paths.n_stations != scenario.n_stations:
        raise AssemblyError(
            f"path table has {pre.paths.n_stations} stations,"
            f" scenario has {scenario.n_stations}"
        )
    for step in pre.bundle.steps:
        if step.s_v.shape != (n_v, 2 * n_v) or step.s_l.shape[1] != 2 * n_v:
            raise AssemblyError(
                f"sensitivities have shape {step.s_v.shape}, expected {(n_v, 2 * n_v)}"
            )
    if len(scenario.price) != n_k:
        raise AssemblyError(f"price has {len(scenario.price)} steps, expected {n_k}")


def _scaled(
    name: str, coefficients: Sequence[Tuple[VarKey, float]], sense: RowSense, rhs: float
) -> Optional[LinearRow]:
    terms = [(key, coef) for key, coef in coefficients if coef != 0.0]
    if not terms:
        return None
    rhs = float(rhs)
    scale = max(abs(coef) for _, coef in terms)
    scaled = tuple((key, coef / scale) for key, coef in terms)
    return LinearRow(name, scaled, sense, rhs / scale)


def _dispatch(
    scenario: Scenario, fleet: Sequence[MesdSpec], pre: Precomputed
) -> Tuple[List[VariableDecl], List[LinearRow]]:
    """Power, mode, state-of-charge and linearized grid rows."""
    n_i, n_k = scenario.n_stations, scenario.n_steps
    t = scenario.t_unit
    decls: List[VariableDecl] = []
    rows: List[LinearRow] = []
    bus_of = [scenario.grid.bus_index(b) for b in scenario.stations.buses]

    for s, spec in enumerate(fleet):
        sq = math.sqrt(max(0.0, 1.0 - spec.pf_min**2))
        for k in range(n_k):
            decls.append(VariableDecl(("w", s, k), 0.0, 1.0, VarKind.BINARY))
            decls.append(VariableDecl(("E", s, k), spec.e_min, spec.e_max))
            for i in range(n_i):
                decls.append(VariableDecl(("P", s, i, k), spec.p_min, spec.p_max))
                decls.append(VariableDecl(("Q", s, i, k), -math.inf, math.inf))
                decls.append(VariableDecl(("Pc", s, i, k), spec.p_min, 0.0))
                decls.append(VariableDecl(("Pd", s, i, k), 0.0, spec.p_max))

        for k in range(n_k):
            for i in range(n_i):
                p, q = ("P", s, i, k), ("Q", s, i, k)
                pc, pd = ("Pc", s, i, k), ("Pd", s, i, k)
                m, w = ("m", s, i, k), ("w", s, k)
                tag = f"s{s}_i{i}_k{k}"
                rows += [
                    LinearRow(
                        f"pmax_{tag}", ((p, 1.0), (m, -spec.p_max)), RowSense.LE, 0.0
                    ),
                    LinearRow(
                        f"pmin_{tag}", ((p, 1.0), (m, -spec.p_min)), RowSense.GE, 0.0
                    ),
                    LinearRow(
                        f"split_{tag}",
                        ((p, 1.0), (pc, -1.0), (pd, -1.0)),
                        RowSense.EQ,
                        0.0,
                    ),
                    LinearRow(
                        f"chg_{tag}",
                        ((pc, 1.0), (w, spec.p_min)),
                        RowSense.GE,
                        spec.p_min,
                    ),
                    LinearRow(
                        f"dis_{tag}", ((pd, 1.0), (w, -spec.p_max)), RowSense.LE, 0.0
                    ),
                    LinearRow(
                        f"pf_hi_{tag}",
                        ((q, spec.pf_min), (pd, -sq), (pc, sq)),
                        RowSense.LE,
                        0.0,
                    ),
                    LinearRow(
                        f"pf_lo_{tag}",
                        ((q, spec.pf_min), (pd, sq), (pc, -sq)),
                        RowSense.GE,
                        0.0,
                    ),
                ]
            soc: List[Tuple[VarKey, float]] = [(("E", s, k), 1.0)]
            if k > 0:
                soc.append((("E", s, k - 1), -1.0))
            for i in range(n_i):
                soc.append((("Pc", s, i, k), t * spec.eta_c / spec.e_cap))
                soc.append((("Pd", s, i, k), t * spec.eta_d / spec.e_cap))
            soc.append((("z", s, k), spec.eta_transit / spec.e_cap))
            start = spec.e_0 if k == 0 else 0.0
            rows.append(LinearRow(f"soc_s{s}_k{k}", tuple(soc), RowSense.EQ, start))
        last = (("E", s, n_k - 1), 1.0)
        high, low = spec.e_0 + spec.de_max, spec.e_0 - spec.de_max
        rows.append(LinearRow(f"soc_end_hi_s{s}", (last,), RowSense.LE, high))
        rows.append(LinearRow(f"soc_end_lo_s{s}", (last,), RowSense.GE, low))

    bundle = pre.bundle
    for k in range(n_k):
        decls.append(VariableDecl(("dPloss", k), -math.inf, math.inf))
        entry = bundle[k]

        def injection(weights: np.ndarray) -> List[Tuple[VarKey, float]]:
            terms = []
            for s in range(len(fleet)):
                for i, b in enumerate(bus_of):
                    terms.append((("P", s, i, k), float(weights[2 * b])))
                    terms.append((("Q", s, i, k), float(weights[2 * b + 1])))
            return terms

        loss = [(("dPloss", k), 1.0)]
        loss += [(key, -c) for key, c in injection(entry.s_ploss) if c]
        rows.append(LinearRow(f"dploss_k{k}", tuple(loss), RowSense.EQ, 0.0))
        for b in range(scenario.n_buses):
            terms = injection(entry.s_v[b])
            for row in (
                _scaled(f"dv_hi_k{k}_b{b}", terms, RowSense.LE, bundle.dv_max[b]),
                _scaled(f"dv_lo_k{k}_b{b}", terms, RowSense.GE, bundle.dv_min[b]),
            ):
                if row is not None:
                    rows.append(row)
        for line in range(entry.s_l.shape[0]):
            terms = injection(entry.s_l[line])
            for row in (
                _scaled(f"dl_hi_k{k}_l{line}", terms, RowSense.LE, bundle.dl_max[line]),
                _scaled(f"dl_lo_k{k}_l{line}", terms, RowSense.GE, bundle.dl_min[line]),
            ):
                if row is not None:
                    rows.append(row)
    return decls, rows


def assemble(
    scenario: Scenario,
    precomputed: Optional[Precomputed] = None,
    *,
    strategy: Strategy = Strategy.CO_OPTIMIZED,
    fleet: Optional[Sequence[MesdSpec]] = None,
    options: Optional[SolverOptions] = None,
    plans: Optional[Sequence[TransitPlan]] = None,
) -> AssembledModel:
    """Build the scheduling MILP of one strategy.

    The objective is the priced change in grid losses plus the priced
    energy drawn for driving.  `Strategy.STATIONARY` builds the placement
    stage (one station per device for the whole day, no driving);
    `Strategy.FIXED_PATH` fixes connection and departure flags to
    ``plans``.

    Raises:
        AssemblyError: if precomputed data does not match the scenario.
    """
    pre = precomputed or prepare(scenario, options)
    _check_dimensions(scenario, pre)
    resolved = resolve_solver_options(options or scenario.options)
    if fleet is None:
        fixed_path = strategy is Strategy.FIXED_PATH
        fleet = scenario.pev_fleet if fixed_path else scenario.fleet
    fleet = tuple(fleet)
    n_s, n_i, n_k = len(fleet), scenario.n_stations, scenario.n_steps

    start: Dict[int, int] = {}
    if strategy is not Strategy.FIXED_PATH:
        for s, spec in enumerate(fleet):
            if spec.name in resolved.pin_start:
                start[s] = scenario.stations.index_of(resolved.pin_start[spec.name])

    road = transit_constraints(
        pre.paths, pre.transit, n_s, max_transits=resolved.max_transits, start=start
    )
    decls, rows = _dispatch(scenario, fleet, pre)

    model = MilpModel(f"{scenario.name}_{strategy.label}")
    index = model.add_declarations(road.variables + decls)
    model.add_rows(road.rows)
    model.add_rows(rows)

    if strategy is Strategy.STATIONARY:
        for s in range(n_s):
            for i in range(n_i):
                for k in range(1, n_k):
                    model.add_constraint(
                        {key_name(("m", s, i, k)): 1.0, key_name(("m", s, i, 0)): -1.0},
                        RowSense.EQ,
                        0.0,
                        f"stay_s{s}_i{i}_k{k}",
                    )
        for key in index:
            if key[0] == "e":
                model.set_bounds(index[key], 0.0, 0.0)
    elif strategy is Strategy.FIXED_PATH:
        if plans is None or len(plans) != n_s:
            raise AssemblyError(f"fixed-path strategy needs {n_s} plans")
        for s, plan in enumerate(plans):
            for i in range(n_i):
                for k in range(n_k):
                    value = float(plan.m[i, k])
                    model.set_bounds(index[("m", s, i, k)], value, value)
                    for j in range(n_i):
                        if i != j:
                            value = float(plan.e[i, j, k])
                            model.set_bounds(index[("e", s, i, j, k)], value, value)

    price = scenario.price_array()
    objective: Dict[int, float] = {}
    for k in range(n_k):
        objective[index[("dPloss", k)]] = price[k] * scenario.t_unit
    if strategy is not Strategy.STATIONARY:
        for (kind, *rest), column in index.items():
            if kind == "e":
                s, i, j, k = rest
                cost = fleet[s].eta_transit * price[k] * pre.paths.distance_km[k, i, j]
                if cost:
                    objective[column] = cost
    model.set_objective(objective)
    model.freeze()
    LOGGER.info("Assembled %r", model)
    return AssembledModel(model, index, fleet, strategy, scenario, pre)


def _binary(value: float, key: VarKey) -> int:
    rounded = round(value)
    if abs(value - rounded) > ROUNDING_TOL or rounded not in (0, 1):
        raise ConsistencyError(f"{key_name(key)} = {value!r} is not binary")
    return int(rounded)


def decode(solution: MilpSolution, assembled: AssembledModel) -> Schedule:
    """Turn a solver point into a `Schedule` and re-check its invariants.

    Raises:
        SolverError: if the solution carries no point.
        ConsistencyError: if a binary is not integral or a schedule
            invariant fails.
    """
    if solution.x is None:
        raise SolverError(f"solve ended {solution.status.value} without a solution")
    scenario, pre, fleet = assembled.scenario, assembled.precomputed, assembled.fleet
    x = solution.x
    index = assembled.index
    n_s, n_i, n_k = len(fleet), scenario.n_stations, scenario.n_steps

    def value(key: VarKey) -> float:
        return float(x[index[key]])

    m = np.zeros((n_s, n_i, n_k), dtype=int)
    e = np.zeros((n_s, n_i, n_i, n_k), dtype=int)
    y = np.zeros((n_s, n_k), dtype=int)
    w = np.zeros((n_s, n_k), dtype=int)
    z = np.zeros((n_s, n_k))
    soc = np.zeros((n_s, n_k))
    powers = {name: np.zeros((n_s, n_i, n_k)) for name in ("P", "Q", "Pc", "Pd")}
    for s in range(n_s):
        for k in range(n_k):
            y[s, k] = _binary(value(("y", s, k)), ("y", s, k))
            w[s, k] = _binary(value(("w", s, k)), ("w", s, k))
            z[s, k] = value(("z", s, k))
            soc[s, k] = value(("E", s, k))
            for i in range(n_i):
                m[s, i, k] = _binary(value(("m", s, i, k)), ("m", s, i, k))
                for name, array in powers.items():
                    array[s, i, k] = value((name, s, i, k))
                for j in range(n_i):
                    if i != j:
                        key = ("e", s, i, j, k)
                        e[s, i, j, k] = _binary(value(key), key)

    positions = np.full((n_s, n_k), -1, dtype=int)
    for s, i, k in zip(*np.nonzero(m)):
        positions[s, k] = i
    dploss = np.array([value(("dPloss", k)) for k in range(n_k)])

    bus_of = np.array(
        [scenario.grid.bus_index(b) for b in scenario.stations.buses], dtype=int
    )
    dv = np.zeros((n_k, scenario.n_buses))
    dl = np.zeros((n_k, scenario.grid.n_lines))
    for k in range(n_k):
        vector = np.zeros(2 * scenario.n_buses)
        np.add.at(vector, 2 * bus_of, powers["P"][:, :, k].sum(axis=0))
        np.add.at(vector, 2 * bus_of + 1, powers["Q"][:, :, k].sum(axis=0))
        dv[k] = pre.bundle[k].s_v @ vector
        dl[k] = pre.bundle[k].s_l @ vector

    price = scenario.price_array()
    eta = np.array([spec.eta_transit for spec in fleet])
    transit_cost = 0.0
    for s, i, j, k in zip(*np.nonzero(e)):
        transit_cost += eta[s] * price[k] * pre.paths.distance_km[k, i, j]
    grid_cost = float(np.sum(price * dploss) * scenario.t_unit)

    schedule = Schedule(
        scenario_name=scenario.name,
        strategy=assembled.strategy,
        device_names=tuple(spec.name for spec in fleet),
        station_ids=scenario.stations.ids,
        t_unit=scenario.t_unit,
        positions=positions,
        m=m,
        e=e,
        y=y,
        w=w,
        z=z,
        p=powers["P"],
        q=powers["Q"],
        pc=powers["Pc"],
        pd=powers["Pd"],
        soc=soc,
        dploss=dploss,
        baseline_loss_kw=pre.baseline.per_step_kw,
        price=price,
        transit_energy_kwh=eta[:, None] * z if n_s else np.zeros((0, n_k)),
        objective=float(solution.objective),
        grid_cost=grid_cost,
        transit_cost=float(transit_cost),
        status=solution.status,
        node_count=solution.node_count,
        gap=solution.gap,
        dv=dv,
        dl=dl,
    )
    verify_schedule(schedule, fleet, pre)
    return schedule


def verify_schedule(
    schedule: Schedule, fleet: Sequence[MesdSpec], pre: Precomputed
) -> None:
    """Re-check the invariants a decoded schedule must satisfy.

    Raises:
        ConsistencyError: naming the first violated invariant.
    """
    for s, spec in enumerate(fleet):
        name = spec.name
        if np.any(schedule.m[s].sum(axis=0) + schedule.y[s] != 1):
            raise ConsistencyError(f"{name}: connection and transit flags disagree")
        idle = schedule.m[s] == 0
        if np.any(np.abs(schedule.p[s][idle]) > _CHECK_TOL) or np.any(
            np.abs(schedule.q[s][idle]) > _CHECK_TOL
        ):
            raise ConsistencyError(
                f"{name}: output at a station it is not connected to"
            )
        soc = schedule.soc[s]
        if soc.min() < spec.e_min - _CHECK_TOL or soc.max() > spec.e_max + _CHECK_TOL:
            raise ConsistencyError(f"{name}: state of charge out of bounds")
        if abs(soc[-1] - spec.e_0) > spec.de_max + _CHECK_TOL:
            raise ConsistencyError(f"{name}: final state of charge out of band")
        ratio = math.sqrt(max(0.0, 1.0 - spec.pf_min**2)) / spec.pf_min
        band = ratio * (schedule.pd[s] - schedule.pc[s])
        if np.any(np.abs(schedule.q[s]) > band + _CHECK_TOL * (1 + ratio)):
            raise ConsistencyError(f"{name}: power factor below minimum")
        both = np.minimum(np.abs(schedule.pc[s]), np.abs(schedule.pd[s]))
        if np.any(both > _CHECK_TOL):
            raise ConsistencyError(f"{name}: charging and discharging at once")
        result = check_transit_feasibility(
            schedule.m[s], schedule.e[s], pre.paths, schedule.y[s], f=pre.transit.f
        )
        if not result:
            raise ConsistencyError(f"{name}: {result.reason} at step {result.step}")

    if schedule.dv is not None and schedule.n_devices:
        bundle = pre.bundle
        scale = 1.0 + np.abs(schedule.dv)
        if np.any(schedule.dv > bundle.dv_max + _CHECK_TOL * scale) or np.any(
            schedule.dv < bundle.dv_min - _CHECK_TOL * scale
        ):
            raise ConsistencyError("linearized voltage change out of limits")
    if schedule.dl is not None and schedule.n_devices:
        scale = 1.0 + np.abs(schedule.dl)
        if np.any(np.abs(schedule.dl) > pre.bundle.dl_max + _CHECK_TOL * scale):
            raise ConsistencyError("linearized line flow change out of limits")


def _solve_and_decode(
    assembled: AssembledModel, options: Optional[SolverOptions]
) -> Schedule:
    solution = solve(assembled.model, options or assembled.scenario.options)
    if not solution.status.has_solution:
        raise SolverError(
            f"{assembled.strategy.label} solve ended {solution.status.value}"
        )
    return decode(solution, assembled)


def solve_case1(
    scenario: Scenario,
    *,
    options: Optional[SolverOptions] = None,
    precomputed: Optional[Precomputed] = None,
) -> Schedule:
    """Co-optimize journeys and dispatch of the whole fleet."""
    assembled = assemble(
        scenario, precomputed, strategy=Strategy.CO_OPTIMIZED, options=options
    )
    return _solve_and_decode(assembled, options)


def solve_case2_stationary(
    scenario: Scenario,
    *,
    options: Optional[SolverOptions] = None,
    precomputed: Optional[Precomputed] = None,
) -> Schedule:
    """Place every device at one station for the day, then dispatch it there.

    The placement stage minimizes the priced change in grid losses with
    connection flags held constant over the day; the dispatch stage
    re-solves with the chosen stations fixed.
    """
    pre = precomputed or prepare(scenario, options)
    stage1 = assemble(scenario, pre, strategy=Strategy.STATIONARY, options=options)
    placement = solve(stage1.model, options or scenario.options)
    if placement.x is None:
        raise SolverError(f"placement stage ended {placement.status.value}")
    fixed: Dict[int, Tuple[float, float]] = {}
    for key, column in stage1.index.items():
        if key[0] == "m":
            flag = float(_binary(float(placement.x[column]), key))
            fixed[column] = (flag, flag)
    stations = {
        stage1.fleet[key[1]].name: key[2]
        for key, column in stage1.index.items()
        if key[0] == "m" and key[3] == 0 and fixed[column][0] == 1.0
    }
    LOGGER.info("Placement stage chose station indices %s", stations)
    stage2 = dataclasses.replace(stage1, model=stage1.model.with_bounds(fixed).freeze())
    dispatch = solve(stage2.model, options or scenario.options)
    if dispatch.x is None:
        raise SolverError(f"dispatch stage ended {dispatch.status.value}")
    dispatch = dataclasses.replace(
        dispatch, node_count=dispatch.node_count + placement.node_count
    )
    return decode(dispatch, stage2)


def default_pev_plans(
    scenario: Scenario,
    paths: PathTable,
    options: Optional[SolverOptions] = None,
) -> List[TransitPlan]:
    """Seeded pseudo-random journeys for the fixed-path fleet."""
    resolved = resolve_solver_options(options or scenario.options)
    rng = np.random.default_rng(resolved.case3_seed)
    plans = []
    for spec in scenario.pev_fleet:
        start = None
        if spec.name in resolved.pin_start:
            start = scenario.stations.index_of(resolved.pin_start[spec.name])
        plans.append(
            random_transit_plan(
                paths, rng, start=start, max_transits=resolved.max_transits
            )
        )
    return plans


def solve_case3_pev(
    scenario: Scenario,
    plans: Optional[Sequence[TransitPlan]] = None,
    *,
    options: Optional[SolverOptions] = None,
    precomputed: Optional[Precomputed] = None,
) -> Schedule:
    """Dispatch devices whose journeys are fixed in advance.

    Raises:
        InfeasiblePathError: if a supplied plan is not realizable.
    """
    pre = precomputed or prepare(scenario, options)
    fleet = scenario.pev_fleet
    if plans is None:
        plans = default_pev_plans(scenario, pre.paths, options)
    if len(plans) != len(fleet):
        raise AssemblyError(f"{len(plans)} plans for {len(fleet)} devices")
    for spec, plan in zip(fleet, plans):
        result = check_transit_feasibility(plan.m, plan.e, pre.paths, f=pre.transit.f)
        if not result:
            raise InfeasiblePathError(spec.name, result.step, result.reason)
    assembled = assemble(
        scenario,
        pre,
        strategy=Strategy.FIXED_PATH,
        fleet=fleet,
        options=options,
        plans=plans,
    )
    return _solve_and_decode(assembled, options)


def solve_no_storage(
    scenario: Scenario, *, precomputed: Optional[Precomputed] = None
) -> Schedule:
    pre = precomputed or prepare(scenario)
    return zero_schedule(scenario, pre.baseline.per_step_kw)


def solve_strategy(
    scenario: Scenario,
    strategy: Strategy,
    *,
    options: Optional[SolverOptions] = None,
    precomputed: Optional[Precomputed] = None,
) -> Schedule:
    if strategy is Strategy.CO_OPTIMIZED:
        return solve_case1(scenario, options=options, precomputed=precomputed)
    if strategy is Strategy.STATIONARY:
        return solve_case2_stationary(
            scenario, options=options, precomputed=precomputed
        )
    if strategy is Strategy.FIXED_PATH:
        return solve_case3_pev(scenario, options=options, precomputed=precomputed)
    return solve_no_storage(scenario, precomputed=precomputed)


def solve_all(
    scenario: Scenario,
    strategies: Iterable[Strategy] = (
        Strategy.CO_OPTIMIZED,
        Strategy.STATIONARY,
        Strategy.FIXED_PATH,
        Strategy.NO_STORAGE,
    ),
    *,
    options: Optional[SolverOptions] = None,
    precomputed: Optional[Precomputed] = None,
) -> List[Schedule]:
    """Solve several strategies on shared precomputed data."""
    pre = precomputed or prepare(scenario, options)
    return [
        solve_strategy(scenario, strategy, options=options, precomputed=pre)
        for strategy in strategies
    ]


def _scaled_fleet(fleet: Sequence[MesdSpec], **factors: float) -> Tuple[MesdSpec, ...]:
    out = []
    for spec in fleet:
        changes = {}
        if "p_max" in factors:
            changes["p_max"] = spec.p_max * factors["p_max"]
            changes["p_min"] = spec.p_min * factors["p_max"]
        if "e_cap" in factors:
            changes["e_cap"] = spec.e_cap * factors["e_cap"]
        out.append(dataclasses.replace(spec, **changes))
    return tuple(out)


def scaled_scenario(
    scenario: Scenario,
    precomputed: Precomputed,
    parameter: str,
    factor: float,
) -> Tuple[Scenario, Precomputed]:
    """Scenario and precomputed data with one sweep parameter scaled."""
    if parameter not in SWEEP_PARAMETERS:
        raise ValueError(
            f"parameter must be one of {SWEEP_PARAMETERS}, not {parameter!r}"
        )
    if parameter in ("p_max", "e_cap"):
        factors = {parameter: factor}
        changes = {"fleet": _scaled_fleet(scenario.fleet, **factors)}
        if scenario.case3_fleet is not None:
            changes["case3_fleet"] = _scaled_fleet(scenario.case3_fleet, **factors)
        return scenario.replace(**changes), precomputed
    limits = scenario.limits
    if parameter == "dv_max":
        limits = limits.updated(
            dv_max_pu=limits.effective_dv_max * factor,
            dv_min_pu=limits.effective_dv_min * factor,
        )
    else:
        limits = limits.updated(dl_max_frac=limits.effective_dl_max_frac * factor)
    dv_max, dv_min, dl_max = incremental_limits(scenario.grid, limits)
    bundle = dataclasses.replace(
        precomputed.bundle, dv_max=dv_max, dv_min=dv_min, dl_max=dl_max
    )
    return (
        scenario.replace(limits=limits),
        dataclasses.replace(precomputed, bundle=bundle),
    )


def sweep(
    scenario: Scenario,
    parameter: str,
    factors: Sequence[float],
    strategies: Sequence[Strategy] = (Strategy.CO_OPTIMIZED,),
    *,
    options: Optional[SolverOptions] = None,
    precomputed: Optional[Precomputed] = None,
) -> pd.DataFrame:
    """Objective and distance driven while one parameter is scaled.

    ``parameter`` is ``"p_max"`` (both power limits), ``"e_cap"``,
    ``"dv_max"`` (both voltage change limits) or ``"dl_max"``.
    """
    pre = precomputed or prepare(scenario, options)
    records = []
    for factor in factors:
        scaled, scaled_pre = scaled_scenario(scenario, pre, parameter, factor)
        for strategy in strategies:
            schedule = solve_strategy(
                scaled, strategy, options=options, precomputed=scaled_pre
            )
            records.append(
                {
                    "parameter": parameter,
                    "factor": float(factor),
                    "case": strategy.label,
                    "status": schedule.status.value,
                    "J": schedule.objective,
                    "J_total": schedule.j_total,
                    "distance_km": schedule.total_distance_km,
                }
            )
    return pd.DataFrame.from_records(records)


def fixed_flags(schedule: Schedule) -> List[TransitPlan]:
    """The journeys of a schedule, reusable as fixed-path plans."""
    return [
        TransitPlan(schedule.m[s], schedule.e[s]) for s in range(schedule.n_devices)
    ]

