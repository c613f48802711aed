# SPDX-License-Identifier: Apache-2.0

"""Independent AC replay of schedules.

Nothing here reads the sensitivity matrices the optimizer used: realized
losses and voltages come from full power flows, journeys from the state
machine, state of charge from forward integration.
"""

from __future__ import annotations

from dataclasses import dataclass
from dataclasses import field
import logging
import math
from typing import Any
from typing import Dict
from typing import List
from typing import Optional
from typing import Sequence
from typing import Tuple

import numpy as np

from ._grid import forecast_injections
from ._grid import run_power_flow
from ._grid import station_injection_vector
from ._plans import FeasibilityResult
from ._plans import check_transit_feasibility
from ._scenario import MesdSpec
from ._scenario import Scenario
from ._schedule import Schedule
from ._transit import PathTable
from ._transit import edge_travel_times
from ._transit import fastest_paths
from .exceptions import PowerFlowError

LOGGER = logging.getLogger(__name__)

DISCREPANCY_FLOOR_KW = 0.1
THERMAL_TOL_KVA = 1e-6
SOC_TOL = 1e-6

__all__ = [
    "check_transit_feasibility",
    "replay",
    "soc_replay",
]


@dataclass(frozen=True)
class Violation:
    constraint: str
    step: Optional[int]
    magnitude: float
    element: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            "constraint": self.constraint,
            "step": self.step,
            "magnitude": _json_float(self.magnitude),
            "element": self.element,
        }


@dataclass(frozen=True)
class SocReplay:
    soc: np.ndarray
    max_deviation: float
    violations: Tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


@dataclass
class ValidationReport:
    """Realized metrics of a schedule.

    Losses are in kW per step, energies in kWh, costs in the price unit.
    ``discrepancy_kw`` is the AC loss change minus the linearized one.
    """

    t_unit: float
    ac_loss_kw: np.ndarray
    baseline_loss_kw: np.ndarray
    linearized_dploss_kw: np.ndarray
    vm: np.ndarray
    transit_energy_kwh: float
    transit_cost: float
    price: np.ndarray
    v_rms: float
    soc: SocReplay
    violations: List[Violation] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)
    failed_steps: List[int] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    @property
    def discrepancy_kw(self) -> np.ndarray:
        return (self.ac_loss_kw - self.baseline_loss_kw) - self.linearized_dploss_kw

    @property
    def grid_loss_kwh(self) -> float:
        return float(np.nansum(self.ac_loss_kw) * self.t_unit)

    @property
    def e_loss_tot_kwh(self) -> float:
        return self.grid_loss_kwh + self.transit_energy_kwh

    @property
    def j_realized(self) -> float:
        """Priced change in losses against the no-storage day, plus driving."""
        change = np.nan_to_num(self.ac_loss_kw - self.baseline_loss_kw)
        return float(np.sum(self.price * change) * self.t_unit) + self.transit_cost

    @property
    def j_total(self) -> float:
        priced = np.nansum(self.price * self.ac_loss_kw) * self.t_unit
        return float(priced) + self.transit_cost

    def to_dict(self) -> Dict[str, Any]:
        return {
            "passed": self.passed,
            "E_loss_tot_kwh": _json_float(self.e_loss_tot_kwh),
            "grid_loss_kwh": _json_float(self.grid_loss_kwh),
            "transit_energy_kwh": self.transit_energy_kwh,
            "J_realized": _json_float(self.j_realized),
            "J_total": _json_float(self.j_total),
            "V_rms": _json_float(self.v_rms),
            "soc_max_deviation": _json_float(self.soc.max_deviation),
            "ac_loss_kw": [_json_float(v) for v in self.ac_loss_kw],
            "baseline_loss_kw": [_json_float(v) for v in self.baseline_loss_kw],
            "discrepancy_kw": [_json_float(v) for v in self.discrepancy_kw],
            "failed_steps": list(self.failed_steps),
            "violations": [v.to_dict() for v in self.violations],
            "warnings": list(self.warnings),
        }


def _json_float(value: float) -> Optional[float]:
    value = float(value)
    return value if math.isfinite(value) else None


def _fleet_of(schedule: Schedule, scenario: Scenario) -> List[MesdSpec]:
    specs = {spec.name: spec for spec in scenario.fleet}
    for spec in scenario.case3_fleet or ():
        specs.setdefault(spec.name, spec)
    try:
        return [specs[name] for name in schedule.device_names]
    except KeyError as error:
        raise ValueError(
            f"schedule device {error.args[0]!r} is not in the scenario"
        ) from None


def soc_replay(schedule: Schedule, fleet: Sequence[MesdSpec]) -> SocReplay:
    """Integrate state of charge forward from ``E_0`` and check its limits."""
    n_k = schedule.n_steps
    t = schedule.t_unit
    soc = np.zeros((schedule.n_devices, n_k))
    violations = []
    for s, spec in enumerate(fleet):
        level = spec.e_0
        charged = spec.eta_c * schedule.pc[s].sum(axis=0)
        discharged = spec.eta_d * schedule.pd[s].sum(axis=0)
        drained = t * (charged + discharged) + spec.eta_transit * schedule.z[s]
        for k in range(n_k):
            level = level - drained[k] / spec.e_cap
            soc[s, k] = level
            if level < spec.e_min - SOC_TOL:
                low = spec.e_min - level
                violations.append(Violation("soc-min", k, low, spec.name))
            elif level > spec.e_max + SOC_TOL:
                high = level - spec.e_max
                violations.append(Violation("soc-max", k, high, spec.name))
        if n_k:
            drift = abs(soc[s, -1] - spec.e_0) - spec.de_max
            if drift > SOC_TOL:
                violations.append(Violation("soc-terminal", n_k - 1, drift, spec.name))
    deviation = float(np.max(np.abs(soc - schedule.soc))) if soc.size else 0.0
    return SocReplay(soc, deviation, tuple(violations))


def _transit_checks(
    schedule: Schedule, paths: PathTable
) -> List[Tuple[str, FeasibilityResult]]:
    return [
        (
            name,
            check_transit_feasibility(
                schedule.m[s], schedule.e[s], paths, schedule.y[s]
            ),
        )
        for s, name in enumerate(schedule.device_names)
    ]


def replay(
    schedule: Schedule,
    scenario: Scenario,
    *,
    strict: bool = False,
    paths: Optional[PathTable] = None,
) -> ValidationReport:
    """Run full power flows with the schedule's station outputs applied.

    Args:
        schedule: The plan to check.
        scenario: Its scenario.
        strict: Count linearized-versus-AC loss discrepancies as failures.
        paths: Path table of ``scenario`` when already computed.

    Returns:
        A report whose ``passed`` is false when any violation was found.
    """
    grid = scenario.grid
    limits = scenario.limits
    n_k = scenario.n_steps
    fleet = _fleet_of(schedule, scenario)
    if paths is None:
        paths = fastest_paths(
            scenario.road,
            edge_travel_times(scenario.road),
            scenario.stations,
            scenario.t_unit,
        )
    price = scenario.price_array()

    ac_loss = np.full(n_k, np.nan)
    base_loss = np.full(n_k, np.nan)
    vm = np.full((n_k, grid.n_buses), np.nan)
    violations: List[Violation] = []
    warnings: List[str] = []
    failed: List[int] = []
    dv_max = np.full(grid.n_buses, limits.effective_dv_max)
    dv_min = np.full(grid.n_buses, limits.effective_dv_min)
    ratings = np.array([line.rating_kva for line in grid.lines])
    dl_max = limits.effective_dl_max_frac * ratings
    slack = limits.effective_loss_discrepancy_frac
    bus_ids = grid.bus_ids
    line_ids = [f"{ln.from_bus}-{ln.to_bus}" for ln in grid.lines]

    for k in range(n_k):
        p_base, q_base = forecast_injections(grid, k)
        p_st, q_st = schedule.station_output(k)
        extra = station_injection_vector(scenario.stations, grid, p_st, q_st)
        try:
            base = run_power_flow(grid, p_base, q_base)
            flow = run_power_flow(grid, p_base + extra[0::2], q_base + extra[1::2])
        except PowerFlowError as error:
            LOGGER.warning("Power flow failed at step %d: %s", k, error)
            failed.append(k)
            violations.append(Violation("power-flow", k, math.nan))
            continue
        ac_loss[k] = flow.p_loss_kw
        base_loss[k] = base.p_loss_kw
        vm[k] = flow.vm

        dv = flow.vm - base.vm
        for b in np.flatnonzero(dv > dv_max + slack * np.abs(dv_max) + 1e-9):
            excess = float(dv[b] - dv_max[b])
            violations.append(Violation("dv-max", k, excess, str(bus_ids[b])))
        for b in np.flatnonzero(dv < dv_min - slack * np.abs(dv_min) - 1e-9):
            excess = float(dv_min[b] - dv[b])
            violations.append(Violation("dv-min", k, excess, str(bus_ids[b])))
        dl = flow.line_loading_kva - base.line_loading_kva
        for ln in np.flatnonzero(np.abs(dl) > dl_max + slack * dl_max + 1e-6):
            violations.append(
                Violation("dl-max", k, float(abs(dl[ln]) - dl_max[ln]), line_ids[ln])
            )
        loading = np.maximum(np.abs(flow.s_from_kva), np.abs(flow.s_to_kva))
        for ln in np.flatnonzero(loading > ratings + THERMAL_TOL_KVA):
            excess = float(loading[ln] - ratings[ln])
            violations.append(Violation("thermal", k, excess, line_ids[ln]))
        if limits.v_min_pu is not None:
            for b in np.flatnonzero(flow.vm < limits.v_min_pu):
                excess = float(limits.v_min_pu - flow.vm[b])
                violations.append(Violation("v-min", k, excess, str(bus_ids[b])))
        if limits.v_max_pu is not None:
            for b in np.flatnonzero(flow.vm > limits.v_max_pu):
                excess = float(flow.vm[b] - limits.v_max_pu)
                violations.append(Violation("v-max", k, excess, str(bus_ids[b])))

        change = flow.p_loss_kw - base.p_loss_kw
        error = abs(change - schedule.dploss[k])
        if error > slack * abs(change) + DISCREPANCY_FLOOR_KW:
            message = (
                f"step {k}: linearized loss change {schedule.dploss[k]:.4f} kW"
                f" differs from AC {change:.4f} kW"
            )
            warnings.append(message)
            if strict:
                violations.append(Violation("loss-discrepancy", k, error))

    for name, result in _transit_checks(schedule, paths):
        if not result:
            element = f"{name}: {result.reason}"
            violations.append(Violation("transit", result.step, 1.0, element))

    eta = np.array([spec.eta_transit for spec in fleet])
    transit_energy = 0.0
    transit_cost = 0.0
    for s, i, j, k in zip(*np.nonzero(schedule.e)):
        drained = eta[s] * paths.distance_km[k, i, j]
        transit_energy += drained
        transit_cost += price[k] * drained

    soc = soc_replay(schedule, fleet)
    violations.extend(soc.violations)

    station_buses = [grid.bus_index(b) for b in scenario.stations.buses]
    if station_buses and np.isfinite(vm).all():
        v_rms = float(np.mean(np.sqrt(np.mean(vm[:, station_buses] ** 2, axis=0))))
    else:
        v_rms = math.nan

    report = ValidationReport(
        t_unit=scenario.t_unit,
        ac_loss_kw=ac_loss,
        baseline_loss_kw=base_loss,
        linearized_dploss_kw=np.asarray(schedule.dploss, dtype=float),
        vm=vm,
        transit_energy_kwh=float(transit_energy),
        transit_cost=float(transit_cost),
        price=price,
        v_rms=v_rms,
        soc=soc,
        violations=violations,
        warnings=warnings,
        failed_steps=failed,
    )
    LOGGER.info(
        "Replay of %s: %s, E_loss_tot %.3f kWh, %d warnings",
        schedule.strategy.label,
        "passed" if report.passed else f"{len(violations)} violations",
        report.e_loss_tot_kwh,
        len(warnings),
    )
    return report
