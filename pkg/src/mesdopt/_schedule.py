# SPDX-License-Identifier: Apache-2.0

"""Decoded schedules, their CSV/JSON artifacts and strategy comparison."""

from __future__ import annotations

from dataclasses import dataclass
import json
import logging
import math
from pathlib import Path
import re
from typing import Any
from typing import Dict
from typing import List
from typing import Mapping
from typing import Optional
from typing import Sequence
from typing import Tuple
from typing import Union

import numpy as np
import pandas as pd

from ._enums import SolveStatus
from ._enums import Strategy
from ._scenario import NodeId
from ._scenario import Scenario
from ._transit import edge_travel_times
from ._transit import fastest_paths
from .exceptions import ScheduleParseError

LOGGER = logging.getLogger(__name__)

TRANSIT = "transit"
SCHEDULE_COLUMNS = [
    "device",
    "step",
    "station",
    "y",
    "w",
    "departure",
    "P_kw",
    "Q_kvar",
    "Pc_kw",
    "Pd_kw",
    "soc",
    "z_km",
    "dploss_kw",
]
_POWER_COLUMNS = ("P_kw", "Q_kvar", "Pc_kw", "Pd_kw")


@dataclass(frozen=True)
class Schedule:
    """Day-ahead plan of every device of a strategy.

    Device arrays lead with the device axis: ``m[s, i, k]``,
    ``e[s, i, j, k]``, ``p[s, i, k]``, ``soc[s, k]``.  ``positions[s, k]`` is
    a station index or -1 while travelling.  ``dploss`` and the optional
    ``dv``/``dl`` arrays are the linearized grid changes per step.
    """

    scenario_name: str
    strategy: Strategy
    device_names: Tuple[str, ...]
    station_ids: Tuple[NodeId, ...]
    t_unit: float
    positions: np.ndarray
    m: np.ndarray
    e: np.ndarray
    y: np.ndarray
    w: np.ndarray
    z: np.ndarray
    p: np.ndarray
    q: np.ndarray
    pc: np.ndarray
    pd: np.ndarray
    soc: np.ndarray
    dploss: np.ndarray
    baseline_loss_kw: np.ndarray
    price: np.ndarray
    transit_energy_kwh: np.ndarray
    objective: float
    grid_cost: float
    transit_cost: float
    status: SolveStatus = SolveStatus.OPTIMAL
    node_count: int = 0
    gap: float = 0.0
    dv: Optional[np.ndarray] = None
    dl: Optional[np.ndarray] = None

    @property
    def n_devices(self) -> int:
        return len(self.device_names)

    @property
    def n_steps(self) -> int:
        return int(self.dploss.shape[0])

    @property
    def transits(self) -> np.ndarray:
        """Number of journeys per device."""
        return self.e.sum(axis=(1, 2, 3)).astype(int)

    @property
    def total_distance_km(self) -> float:
        return float(self.z.sum())

    @property
    def baseline_cost(self) -> float:
        return float(np.sum(self.price * self.baseline_loss_kw) * self.t_unit)

    @property
    def j_total(self) -> float:
        """Cost of all losses: baseline grid loss plus the optimized change."""
        return self.baseline_cost + self.objective

    @property
    def e_loss_tot_kwh(self) -> float:
        """Energy lost in the grid (linearized) and on the road."""
        grid = float(np.sum(self.baseline_loss_kw + self.dploss) * self.t_unit)
        return grid + float(np.sum(self.transit_energy_kwh))

    def station_output(self, step: int) -> Tuple[np.ndarray, np.ndarray]:
        """Per-station ``(P, Q)`` summed over devices at ``step``."""
        return self.p[:, :, step].sum(axis=0), self.q[:, :, step].sum(axis=0)

    def device_power(self) -> Tuple[np.ndarray, np.ndarray]:
        """``(N_S, N_K)`` active and reactive output of each device."""
        return self.p.sum(axis=1), self.q.sum(axis=1)

    def to_frame(self) -> pd.DataFrame:
        """One row per ``(device, step)`` in the CSV layout."""
        records = []
        p_dev, q_dev = self.device_power()
        pc_dev, pd_dev = self.pc.sum(axis=1), self.pd.sum(axis=1)
        for s, name in enumerate(self.device_names):
            for k in range(self.n_steps):
                position = int(self.positions[s, k])
                departure = ""
                leaving = np.argwhere(self.e[s, :, :, k])
                if leaving.size:
                    departure = str(self.station_ids[int(leaving[0][1])])
                station = TRANSIT
                if position >= 0:
                    station = str(self.station_ids[position])
                records.append(
                    {
                        "device": name,
                        "step": k,
                        "station": station,
                        "y": int(self.y[s, k]),
                        "w": int(self.w[s, k]),
                        "departure": departure,
                        "P_kw": float(p_dev[s, k]),
                        "Q_kvar": float(q_dev[s, k]),
                        "Pc_kw": float(pc_dev[s, k]),
                        "Pd_kw": float(pd_dev[s, k]),
                        "soc": float(self.soc[s, k]),
                        "z_km": float(self.z[s, k]),
                        "dploss_kw": float(self.dploss[k]),
                    }
                )
        return pd.DataFrame.from_records(records, columns=SCHEDULE_COLUMNS)

    def summary(self) -> Dict[str, Any]:
        """JSON-ready totals; wall time is left out so reruns compare equal."""
        return {
            "scenario": self.scenario_name,
            "case": self.strategy.label,
            "status": self.status.value,
            "J": self.objective,
            "J_grid": self.grid_cost,
            "J_transit": self.transit_cost,
            "J_total": self.j_total,
            "baseline_cost": self.baseline_cost,
            "E_loss_tot_kwh": self.e_loss_tot_kwh,
            "transits": {
                name: int(n) for name, n in zip(self.device_names, self.transits)
            },
            "distance_km": self.total_distance_km,
            "node_count": self.node_count,
            "gap": None if not math.isfinite(self.gap) else self.gap,
        }


def write_schedule(
    schedule: Schedule, directory: Union[str, Path]
) -> Tuple[Path, Path]:
    """Write ``schedule.csv`` and ``summary.json`` into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    csv_path = directory / "schedule.csv"
    json_path = directory / "summary.json"
    schedule.to_frame().to_csv(csv_path, index=False, lineterminator="\n")
    summary = json.dumps(schedule.summary(), indent=2, sort_keys=True)
    json_path.write_text(summary + "\n", encoding="utf-8")
    LOGGER.info("Wrote %s and %s", csv_path, json_path)
    return csv_path, json_path


def _cell(frame: pd.DataFrame, index: int, column: str, kind: type) -> Any:
    value = frame.at[index, column]
    try:
        if kind is float:
            result = float(value)
            if not math.isfinite(result):
                raise ValueError(value)
            return result
        if kind is int:
            return int(float(value))
        return "" if pd.isna(value) else str(value)
    except (TypeError, ValueError):
        raise ScheduleParseError(index + 2, f"bad {column} value {value!r}") from None


def read_schedule(
    path: Union[str, Path],
    scenario: Scenario,
    *,
    strategy: Strategy = Strategy.CO_OPTIMIZED,
) -> Schedule:
    """Load a schedule CSV written by `write_schedule`.

    Per-station powers are rebuilt from each device's connected station.

    Raises:
        ScheduleParseError: naming the first malformed row.
    """
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError:
        raise ScheduleParseError(1, "empty file") from None
    except (pd.errors.ParserError, UnicodeDecodeError) as error:
        found = re.search(r"line (\d+)", str(error))
        row = int(found.group(1)) if found else 1
        raise ScheduleParseError(row, f"unreadable CSV: {error}") from None
    missing = [c for c in SCHEDULE_COLUMNS if c not in frame.columns]
    if missing:
        raise ScheduleParseError(1, f"missing columns {missing}")

    station_ids = scenario.stations.ids
    id_index = {str(sid): i for i, sid in enumerate(station_ids)}
    names: List[str] = []
    for name in frame["device"]:
        if name not in names:
            names.append(name)
    n_s, n_i, n_k = len(names), len(station_ids), scenario.n_steps

    arrays = _empty_arrays(n_s, n_i, n_k)
    seen = np.zeros((n_s, n_k), dtype=bool)
    dploss = np.zeros(n_k)
    for index in range(len(frame)):
        s = names.index(frame.at[index, "device"])
        k = _cell(frame, index, "step", int)
        if not 0 <= k < n_k or seen[s, k]:
            raise ScheduleParseError(index + 2, f"step {k} out of range or repeated")
        seen[s, k] = True
        station = _cell(frame, index, "station", str)
        if station == TRANSIT:
            i = -1
        elif station in id_index:
            i = id_index[station]
        else:
            raise ScheduleParseError(index + 2, f"unknown station {station!r}")
        arrays["positions"][s, k] = i
        arrays["y"][s, k] = _cell(frame, index, "y", int)
        arrays["w"][s, k] = _cell(frame, index, "w", int)
        arrays["z"][s, k] = _cell(frame, index, "z_km", float)
        arrays["soc"][s, k] = _cell(frame, index, "soc", float)
        dploss[k] = _cell(frame, index, "dploss_kw", float)
        values = {c: _cell(frame, index, c, float) for c in _POWER_COLUMNS}
        if i >= 0:
            arrays["m"][s, i, k] = 1
            arrays["p"][s, i, k] = values["P_kw"]
            arrays["q"][s, i, k] = values["Q_kvar"]
            arrays["pc"][s, i, k] = values["Pc_kw"]
            arrays["pd"][s, i, k] = values["Pd_kw"]
        elif any(values.values()):
            raise ScheduleParseError(index + 2, "power output while travelling")
        departure = _cell(frame, index, "departure", str)
        if departure:
            if i < 0 or departure not in id_index:
                raise ScheduleParseError(index + 2, f"bad departure {departure!r}")
            arrays["e"][s, i, id_index[departure], k] = 1
    if not seen.all():
        raise ScheduleParseError(len(frame) + 1, "schedule does not cover every step")

    fleet = {spec.name: spec for spec in scenario.fleet + (scenario.case3_fleet or ())}
    eta = np.array([fleet[n].eta_transit if n in fleet else 0.0 for n in names])
    price = scenario.price_array()
    travel = eta[:, None] * arrays["z"] if n_s else np.zeros((0, n_k))
    return _finish(
        scenario,
        strategy,
        tuple(names),
        arrays,
        dploss,
        np.zeros(n_k),
        _transit_cost_from_flags(scenario, arrays["e"], eta, price),
        travel,
    )


def _empty_arrays(n_s: int, n_i: int, n_k: int) -> Dict[str, np.ndarray]:
    return {
        "positions": np.full((n_s, n_k), -1, dtype=int),
        "m": np.zeros((n_s, n_i, n_k), dtype=int),
        "e": np.zeros((n_s, n_i, n_i, n_k), dtype=int),
        "y": np.zeros((n_s, n_k), dtype=int),
        "w": np.zeros((n_s, n_k), dtype=int),
        "z": np.zeros((n_s, n_k)),
        "p": np.zeros((n_s, n_i, n_k)),
        "q": np.zeros((n_s, n_i, n_k)),
        "pc": np.zeros((n_s, n_i, n_k)),
        "pd": np.zeros((n_s, n_i, n_k)),
        "soc": np.zeros((n_s, n_k)),
    }


def _transit_cost_from_flags(
    scenario: Scenario, e: np.ndarray, eta: np.ndarray, price: np.ndarray
) -> float:
    """Cost of driving, using departure-step distances along the fastest roads."""
    if not e.any():
        return 0.0
    paths = fastest_paths(
        scenario.road,
        edge_travel_times(scenario.road),
        scenario.stations,
        scenario.t_unit,
    )
    cost = 0.0
    for s, i, j, k in zip(*np.nonzero(e)):
        cost += eta[s] * price[k] * paths.distance_km[k, i, j]
    return float(cost)


def _finish(
    scenario: Scenario,
    strategy: Strategy,
    names: Tuple[str, ...],
    arrays: Mapping[str, np.ndarray],
    dploss: np.ndarray,
    baseline: np.ndarray,
    transit_cost: float,
    travel: np.ndarray,
) -> Schedule:
    price = scenario.price_array()
    grid_cost = float(np.sum(price * dploss) * scenario.t_unit)
    return Schedule(
        scenario_name=scenario.name,
        strategy=strategy,
        device_names=names,
        station_ids=scenario.stations.ids,
        t_unit=scenario.t_unit,
        dploss=dploss,
        baseline_loss_kw=baseline,
        price=price,
        transit_energy_kwh=travel,
        objective=grid_cost + transit_cost,
        grid_cost=grid_cost,
        transit_cost=transit_cost,
        **arrays,
    )


def zero_schedule(
    scenario: Scenario, baseline_loss_kw: Optional[np.ndarray] = None
) -> Schedule:
    """The no-storage reference: no devices, no change in losses."""
    n_k = scenario.n_steps
    arrays = _empty_arrays(0, scenario.n_stations, n_k)
    baseline = np.zeros(n_k)
    if baseline_loss_kw is not None:
        baseline = np.asarray(baseline_loss_kw, dtype=float)
    return _finish(
        scenario,
        Strategy.NO_STORAGE,
        (),
        arrays,
        np.zeros(n_k),
        baseline,
        0.0,
        np.zeros((0, n_k)),
    )


def reduction_rate(value: float, reference: float) -> float:
    """Percent by which ``reference`` improves on ``value``: ``(x - ref) / x``."""
    if value == 0:
        return 0.0
    return (value - reference) / value * 100.0


def comparison_table(
    schedules: Sequence[Schedule],
    reports: Optional[Mapping[Strategy, Any]] = None,
) -> pd.DataFrame:
    """One row per strategy with totals and reduction rates against case 1.

    ``reports`` maps strategies to validation reports; when given, the
    realized AC totals are added next to the linearized ones.
    """
    rows = []
    reference = next(
        (s for s in schedules if s.strategy is Strategy.CO_OPTIMIZED), None
    )
    for schedule in schedules:
        row: Dict[str, Any] = {
            "case": schedule.strategy.label,
            "J": schedule.objective,
            "J_total": schedule.j_total,
            "E_loss_tot_kwh": schedule.e_loss_tot_kwh,
            "transits": int(schedule.transits.sum()),
            "distance_km": schedule.total_distance_km,
        }
        if reference is not None:
            row["reduction_pct"] = reduction_rate(schedule.j_total, reference.j_total)
            row["loss_reduction_pct"] = reduction_rate(
                schedule.e_loss_tot_kwh, reference.e_loss_tot_kwh
            )
        if reports is not None and schedule.strategy in reports:
            report = reports[schedule.strategy]
            row["J_total_ac"] = report.j_total
            row["E_loss_tot_ac_kwh"] = report.e_loss_tot_kwh
            row["V_rms"] = report.v_rms
        rows.append(row)
    frame = pd.DataFrame.from_records(rows)
    if reports is not None and reference is not None and "J_total_ac" in frame:
        ref_ac = frame.loc[frame["case"] == reference.strategy.label, "J_total_ac"]
        if not ref_ac.empty:
            frame["reduction_ac_pct"] = [
                reduction_rate(v, float(ref_ac.iloc[0])) for v in frame["J_total_ac"]
            ]
    return frame
