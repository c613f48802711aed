# SPDX-License-Identifier: Apache-2.0

"""The `mesdopt.testing` module provides reference oracles.

Everything here is exhaustive and slow on purpose.  Nothing in this module
should ever be used outside of tests that cross-check the solver,
the transit encoding or the path search on small instances.
"""

from __future__ import annotations

import itertools
import math
from typing import Any
from typing import Dict
from typing import FrozenSet
from typing import Iterator
from typing import List
from typing import Optional
from typing import Tuple

import networkx as nx
import numpy as np
from scipy.optimize import linprog

from ._bnb import solve
from ._enums import RowSense
from ._enums import Strategy
from ._enums import VarKind
from ._milp import LinearRow
from ._milp import MilpModel
from ._milp import ModelArrays
from ._milp import VarKey
from ._options import SolverOptions
from ._options import resolve_solver_options
from ._plans import TransitPlan
from ._plans import iter_transit_plans
from ._scenario import RoadNetwork
from ._scenario import Scenario
from ._scenario import StationMap
from ._scheduler import Precomputed
from ._scheduler import assemble
from ._scheduler import prepare
from ._transit import PathTable
from ._transit import TransitMatrix
from ._transit import TravelTimeTable
from ._transit import transit_constraints

PlanKey = Tuple[bytes, bytes]
"""``(m.tobytes(), e.tobytes())`` of int8 flag arrays"""

_ROW_TOL = 1e-9

__all__ = [
    "PlanKey",
    "brute_force_case1",
    "brute_force_milp",
    "fastest_by_enumeration",
    "plan_key",
    "random_milp",
    "random_scenario_document",
    "row_feasible_plans",
    "state_machine_plans",
]


def plan_key(m: np.ndarray, e: np.ndarray) -> PlanKey:
    return (
        np.asarray(m, dtype=np.int8).tobytes(),
        np.asarray(e, dtype=np.int8).tobytes(),
    )


def fastest_by_enumeration(
    road: RoadNetwork, times: TravelTimeTable, stations: StationMap, step: int
) -> Dict[Tuple[int, int], Tuple[float, float, Tuple[Any, ...]]]:
    """Best ``(hours, km, route)`` per station pair from every simple path.

    Paths are ranked like the label-setting search: time, then distance,
    then the sequence of intersection positions.
    """
    graph = road.graph()
    position = {node: n for n, node in enumerate(road.intersections)}
    best: Dict[Tuple[int, int], Tuple[float, float, Tuple[Any, ...]]] = {}
    for i, origin in enumerate(stations.intersections):
        for j, target in enumerate(stations.intersections):
            if i == j:
                continue
            ranked = []
            for route in nx.all_simple_paths(graph, origin, target):
                hours = 0.0
                km = 0.0
                for a, b in zip(route, route[1:]):
                    edge = graph.edges[a, b]
                    hours += times.hours[edge["index"], step]
                    km += edge["length_km"]
                sequence = tuple(position[n] for n in route)
                ranked.append((hours, km, sequence, tuple(route)))
            if ranked:
                hours, km, _, route = min(ranked)
                best[(i, j)] = (hours, km, route)
    return best


def state_machine_plans(
    paths: PathTable,
    transit: Optional[TransitMatrix] = None,
    *,
    max_transits: Optional[int] = None,
    start: Optional[int] = None,
) -> FrozenSet[PlanKey]:
    return frozenset(
        plan_key(plan.m, plan.e)
        for plan in iter_transit_plans(
            paths, transit, max_transits=max_transits, start=start
        )
    )


def _row_step(row: LinearRow) -> int:
    steps = [int(key[-1]) for key, _ in row.coefficients if key[0] in ("m", "e", "y")]
    return max(steps) if steps else -1


def row_feasible_plans(
    paths: PathTable,
    transit: TransitMatrix,
    *,
    max_transits: Optional[int] = None,
    start: Optional[int] = None,
) -> FrozenSet[PlanKey]:
    """Every 0/1 flag assignment of one device that satisfies the linear rows.

    Steps are assigned in order; each row is checked as soon as the last
    connection, departure or transit flag it mentions is fixed.  ``y`` is
    taken from the parking row, ``z`` and the journey count from their
    defining equalities.
    """
    n_i, n_k = paths.n_stations, paths.n_steps
    built = transit_constraints(
        paths,
        transit,
        1,
        max_transits=None,
        start=None if start is None else {0: start},
    )
    bounds = {decl.key: (decl.lower, decl.upper) for decl in built.variables}
    by_step: List[List[LinearRow]] = [[] for _ in range(n_k)]
    for row in built.rows:
        if row.name.startswith(("dist_", "count_", "cap_")):
            continue
        by_step[max(_row_step(row), 0)].append(row)

    pairs = [(i, j) for i in range(n_i) for j in range(n_i) if i != j]
    values: Dict[VarKey, float] = {
        key: 0.0 for key in bounds if key[0] in ("m", "e", "y")
    }
    found = set()

    def allowed(key: VarKey, value: float) -> bool:
        lower, upper = bounds[key]
        return lower - _ROW_TOL <= value <= upper + _ROW_TOL

    def walk(step: int, journeys: int) -> Iterator[None]:
        if step == n_k:
            yield None
            return
        for here in [None, *range(n_i)]:
            ms = {("m", 0, i, step): float(here == i) for i in range(n_i)}
            if not all(allowed(key, value) for key, value in ms.items()):
                continue
            capped = max_transits is not None and journeys >= max_transits
            for leaving in [None, *pairs]:
                if leaving is not None and capped:
                    continue
                es = {("e", 0, i, j, step): float(leaving == (i, j)) for i, j in pairs}
                if not all(allowed(key, value) for key, value in es.items()):
                    continue
                values.update(ms)
                values.update(es)
                values[("y", 0, step)] = 0.0 if here is not None else 1.0
                if all(row.is_satisfied(values, _ROW_TOL) for row in by_step[step]):
                    yield from walk(step + 1, journeys + (leaving is not None))
        for key in ms:
            values[key] = 0.0
        for i, j in pairs:
            values[("e", 0, i, j, step)] = 0.0
        values[("y", 0, step)] = 0.0

    for _ in walk(0, 0):
        m = np.zeros((n_i, n_k), dtype=np.int8)
        e = np.zeros((n_i, n_i, n_k), dtype=np.int8)
        for key, value in values.items():
            if value and key[0] == "m":
                m[key[2], key[3]] = 1
            elif value and key[0] == "e":
                e[key[2], key[3], key[4]] = 1
        found.add(plan_key(m, e))
    return frozenset(found)


def brute_force_milp(model: MilpModel) -> Optional[float]:
    """Optimum over every binary assignment, with an LP on the continuous rest.

    Assignments whose rows cannot be met by any continuous values are
    discarded by interval arithmetic; the rest are visited in order of the
    binary part of the objective plus the least the continuous part can
    contribute, and the walk stops once that bound reaches the best value
    found.  Returns `None` when no assignment is feasible.
    """
    arrays = model.arrays()
    a = arrays.a.toarray()
    binaries = np.flatnonzero(arrays.binary)
    continuous = np.flatnonzero(~arrays.binary)
    points = np.array(
        list(itertools.product((0.0, 1.0), repeat=len(binaries))), dtype=float
    ).reshape(2 ** len(binaries), len(binaries))
    possible = np.all(
        (points >= arrays.lower[binaries]) & (points <= arrays.upper[binaries]),
        axis=1,
    )
    activity = points @ a[:, binaries].T

    lo_c = arrays.lower[continuous]
    hi_c = arrays.upper[continuous]
    a_c = a[:, continuous]
    with np.errstate(invalid="ignore"):
        least = np.where(a_c > 0, a_c * lo_c, np.where(a_c < 0, a_c * hi_c, 0.0))
        most = np.where(a_c > 0, a_c * hi_c, np.where(a_c < 0, a_c * lo_c, 0.0))
    possible &= np.all(activity + least.sum(axis=1) <= arrays.row_upper + _ROW_TOL, 1)
    possible &= np.all(activity + most.sum(axis=1) >= arrays.row_lower - _ROW_TOL, 1)

    c_c = arrays.c[continuous]
    with np.errstate(invalid="ignore"):
        floor = np.where(c_c > 0, c_c * lo_c, np.where(c_c < 0, c_c * hi_c, 0.0))
    floor = float(floor.sum())
    binary_part = points @ arrays.c[binaries] + arrays.objective_constant
    candidates = np.flatnonzero(possible)
    candidates = candidates[np.argsort(binary_part[candidates], kind="stable")]

    best: Optional[float] = None
    for index in candidates:
        if best is not None and binary_part[index] + floor >= best:
            break
        if continuous.size:
            rest = _continuous_optimum(arrays, a_c, activity[index], lo_c, hi_c)
            if rest is None:
                continue
            value = binary_part[index] + rest
        else:
            value = float(binary_part[index])
        if best is None or value < best:
            best = float(value)
    return best


def _continuous_optimum(
    arrays: ModelArrays,
    a_c: np.ndarray,
    activity: np.ndarray,
    lo_c: np.ndarray,
    hi_c: np.ndarray,
) -> Optional[float]:
    finite_hi = np.isfinite(arrays.row_upper)
    finite_lo = np.isfinite(arrays.row_lower)
    a_ub = np.vstack([a_c[finite_hi], -a_c[finite_lo]])
    b_ub = np.concatenate(
        [
            arrays.row_upper[finite_hi] - activity[finite_hi],
            activity[finite_lo] - arrays.row_lower[finite_lo],
        ]
    )
    result = linprog(
        arrays.c[~arrays.binary],
        A_ub=a_ub if a_ub.size else None,
        b_ub=b_ub if a_ub.size else None,
        bounds=[
            (None if math.isinf(lo) else lo, None if math.isinf(hi) else hi)
            for lo, hi in zip(lo_c, hi_c)
        ],
        method="highs",
    )
    if result.status != 0:
        return None
    return float(result.fun)


def random_milp(
    rng: np.random.Generator, n_binary: int, n_continuous: int, n_rows: int
) -> MilpModel:
    """A bounded random instance; feasibility is not guaranteed."""
    model = MilpModel("random")
    names = []
    for b in range(n_binary):
        model.add_variable(f"b{b}", 0.0, 1.0, VarKind.BINARY)
        names.append(f"b{b}")
    for c in range(n_continuous):
        model.add_variable(f"x{c}", 0.0, float(rng.integers(1, 10)))
        names.append(f"x{c}")
    for r in range(n_rows):
        picked = rng.choice(len(names), size=min(len(names), 3), replace=False)
        coefficients = {names[p]: float(rng.integers(-5, 6)) for p in picked}
        senses = (RowSense.LE, RowSense.GE, RowSense.EQ)
        sense = senses[int(rng.integers(0, 3))] if r else RowSense.LE
        if sense is RowSense.EQ and len(coefficients) < 2:
            sense = RowSense.LE
        model.add_constraint(coefficients, sense, float(rng.integers(-3, 8)), f"r{r}")
    model.set_objective({name: float(rng.integers(-9, 10)) for name in names})
    return model.freeze()


def brute_force_case1(
    scenario: Scenario,
    precomputed: Optional[Precomputed] = None,
    *,
    options: Optional[SolverOptions] = None,
) -> Tuple[float, List[TransitPlan]]:
    """Best co-optimized objective over every combination of feasible plans.

    Each combination is dispatched as a fixed-path model with the fleet of
    the co-optimized strategy and solved by HiGHS.

    Raises:
        ValueError: if no combination admits a dispatch.
    """
    options = (options or scenario.options).updated(solver="highs", lp_method="highs")
    pre = precomputed or prepare(scenario, options)
    resolved = resolve_solver_options(options)
    per_device = []
    for spec in scenario.fleet:
        start = None
        if spec.name in resolved.pin_start:
            start = scenario.stations.index_of(resolved.pin_start[spec.name])
        per_device.append(
            list(
                iter_transit_plans(
                    pre.paths,
                    pre.transit,
                    max_transits=resolved.max_transits,
                    start=start,
                )
            )
        )
    best_value = math.inf
    best_plans: List[TransitPlan] = []
    for combination in itertools.product(*per_device):
        assembled = assemble(
            scenario,
            pre,
            strategy=Strategy.FIXED_PATH,
            fleet=scenario.fleet,
            options=options,
            plans=list(combination),
        )
        solution = solve(assembled.model, options)
        if solution.status.has_solution and solution.objective < best_value:
            best_value = solution.objective
            best_plans = list(combination)
    if not math.isfinite(best_value):
        raise ValueError("no journey combination admits a feasible dispatch")
    return best_value, best_plans


def _ring_road(
    rng: np.random.Generator,
    n_nodes: int,
    n_steps: int,
    length_km: Tuple[float, float],
    speed_kmh: Tuple[float, float],
) -> Tuple[Dict[str, Any], Dict[str, Any]]:
    edges = []
    for a in range(n_nodes):
        b = (a + 1) % n_nodes
        edges.append(
            {
                "a": a,
                "b": b,
                "length_km": float(rng.uniform(*length_km)),
                "speed_profile_id": f"speed_{a}",
                "reverse_speed_profile_id": f"speed_{a}",
            }
        )
    profiles = {
        f"speed_{a}": [float(v) for v in rng.uniform(*speed_kmh, size=n_steps)]
        for a in range(n_nodes)
    }
    return {"intersections": list(range(n_nodes)), "edges": edges}, profiles


def random_scenario_document(
    rng: np.random.Generator,
    *,
    n_stations: int = 3,
    n_steps: int = 8,
    n_devices: int = 1,
    n_buses: int = 6,
    t_unit_h: float = 1.0,
    length_km: Tuple[float, float] = (1.0, 4.0),
    speed_kmh: Tuple[float, float] = (15.0, 45.0),
) -> Dict[str, Any]:
    """A small radial feeder and ring road with random profiles.

    Stations sit on a ring of ``max(n_stations, 3)`` intersections; up to
    five stations, each is at most two edges from any other.  With 2-4 km
    edges, 11-30 km/h and ``t_unit_h=0.25`` journeys take one to three
    steps.  The document loads with `mesdopt.scenario_from_dict`.
    """
    if not 1 <= n_stations < n_buses:
        raise ValueError("need 1 <= n_stations < n_buses")
    road, profiles = _ring_road(
        rng, max(n_stations, 3), n_steps, length_km, speed_kmh
    )
    buses = [{"id": 0, "base_kV": 12.66, "slack": True}]
    lines = []
    for b in range(1, n_buses):
        parent = int(rng.integers(0, b))
        lines.append(
            {
                "from": parent,
                "to": b,
                "r_pu": float(rng.uniform(0.01, 0.05)),
                "x_pu": float(rng.uniform(0.01, 0.04)),
                "rating_kVA": 5000.0,
            }
        )
        profiles[f"load_{b}"] = [float(v) for v in rng.uniform(0.5, 1.0, size=n_steps)]
        buses.append(
            {
                "id": b,
                "base_kV": 12.66,
                "p_profile": f"load_{b}",
                "p_scale_kw": float(rng.uniform(100.0, 400.0)),
                "q_profile": f"load_{b}",
                "q_scale_kvar": float(rng.uniform(30.0, 150.0)),
            }
        )
    profiles["price"] = [float(v) for v in rng.uniform(0.05, 0.3, size=n_steps)]
    station_buses = rng.choice(np.arange(1, n_buses), size=n_stations, replace=False)
    fleet = [
        {
            "name": f"MESD{s + 1}",
            "P_max": float(rng.uniform(100.0, 400.0)),
            "P_min": -float(rng.uniform(100.0, 400.0)),
            "E_cap": float(rng.uniform(200.0, 800.0)),
            "E_min": 0.1,
            "E_max": 0.9,
            "E_0": 0.5,
            "dE_max": 0.1,
            "eta_transit": 0.5,
        }
        for s in range(n_devices)
    ]
    return {
        "meta": {
            "name": "random",
            "horizon_h": n_steps * t_unit_h,
            "t_unit_h": t_unit_h,
            "n_steps": n_steps,
        },
        "road": road,
        "grid": {"buses": buses, "lines": lines},
        "stations": [
            {"id": f"S{i + 1}", "intersection": i, "bus": int(bus)}
            for i, bus in enumerate(station_buses)
        ],
        "fleet": fleet,
        "price_profile_id": "price",
        "limits": {"dv_max_pu": 0.05, "dv_min_pu": -0.05, "dl_max_frac": 0.5},
        "options": {"solver": "highs", "lp_method": "highs"},
        "profiles": profiles,
    }

