# SPDX-License-Identifier: Apache-2.0

"""Road-side artifacts: travel times, fastest paths, transit matrix and rows.

Steps are numbered from 0.  A device leaving station ``i`` at step ``k``
for station ``j`` is unconnected for ``gamma[k, i, j]`` steps and is parked
at ``j`` again at step ``k + gamma + 1``, which must lie inside the horizon.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import heapq
import logging
import math
from pathlib import Path
from typing import Dict
from typing import List
from typing import Mapping
from typing import NamedTuple
from typing import Optional
from typing import Tuple
from typing import Union

import numpy as np
import pandas as pd
import scipy.sparse as sp

from ._enums import RowSense
from ._enums import VarKind
from ._milp import LinearRow
from ._milp import VarKey
from ._milp import VariableDecl
from ._scenario import NodeId
from ._scenario import RoadNetwork
from ._scenario import StationMap
from .exceptions import ScenarioValidationError
from .exceptions import UnreachableStationError

LOGGER = logging.getLogger(__name__)

Route = Tuple[NodeId, ...]
RouteMap = Dict[Tuple[int, int], Route]


@dataclass(frozen=True)
class TravelTimeTable:
    """Hours needed to drive each road edge, per departure step.

    ``hours[e, k]`` belongs to ``road.edges[e]``.
    """

    hours: np.ndarray

    @property
    def n_steps(self) -> int:
        return int(self.hours.shape[1])


@dataclass(frozen=True)
class PathTable:
    """Fastest station-to-station journeys for every departure step.

    Arrays are indexed ``[k, i, j]`` with station indices in `StationMap`
    order.  ``routes[k][(i, j)]`` lists the intersections visited.
    """

    station_ids: Tuple[NodeId, ...]
    routes: Tuple[RouteMap, ...]
    distance_km: np.ndarray
    hours: np.ndarray
    gamma: np.ndarray
    t_unit: float

    @property
    def n_stations(self) -> int:
        return len(self.station_ids)

    @property
    def n_steps(self) -> int:
        return int(self.gamma.shape[0])

    @property
    def gamma_max(self) -> int:
        return gamma_max(self)

    def route(self, origin: int, destination: int, step: int) -> Route:
        return self.routes[step][(origin, destination)]

    def distance_matrix(self, step: int) -> np.ndarray:
        return self.distance_km[step]

    def fits(self, origin: int, destination: int, step: int) -> bool:
        """Whether a journey leaving at ``step`` ends inside the horizon."""
        if origin == destination:
            return False
        arrival = step + int(self.gamma[step, origin, destination]) + 1
        return arrival <= self.n_steps - 1

    def arrival_step(self, origin: int, destination: int, step: int) -> int:
        return step + int(self.gamma[step, origin, destination]) + 1


@dataclass(frozen=True)
class TransitMatrix:
    """Arrival coefficients and the block matrix built from them.

    ``f[tau - 1, i, j, k]`` is 1 when a device leaving ``i`` at ``k`` for
    ``j`` is still travelling ``tau`` steps later.  ``matrix`` has one row
    per ``(k, i)`` for ``k < N_K - 1`` (row ``k * N_I + i``) and one column
    per ``(k, j)`` (column ``k * N_I + j``).
    """

    f: np.ndarray
    matrix: sp.csr_matrix
    gamma_max: int
    n_stations: int
    n_steps: int

    @property
    def scale(self) -> float:
        if self.gamma_max == 0:
            return 0.0
        return 1.0 / (self.n_stations * self.gamma_max)


class TransitConstraints(NamedTuple):
    variables: List[VariableDecl]
    rows: List[LinearRow]


def normalized_steps(hours: float, t_unit: float) -> int:
    """Number of whole steps a journey of ``hours`` occupies (at least 1)."""
    return max(1, int(math.ceil(hours / t_unit - 1e-9)))


def edge_travel_times(road: RoadNetwork) -> TravelTimeTable:
    """Hours per edge and step, ``length / speed``.

    Raises:
        ScenarioValidationError: if a speed is not positive.
    """
    n_steps = len(road.edges[0].speed_kmh) if road.edges else 0
    hours = np.zeros((len(road.edges), n_steps))
    for index, edge in enumerate(road.edges):
        speed = np.asarray(edge.speed_kmh, dtype=float)
        bad = np.flatnonzero(~(speed > 0))
        if bad.size:
            raise ScenarioValidationError(
                f"road.edges[{index}]",
                f"speed of {edge.a}->{edge.b} is {speed[bad[0]]} at step {bad[0]}",
            )
        hours[index] = edge.length_km / speed
    return TravelTimeTable(hours)


class _Dijkstra:
    """Label-setting search with (time, distance, sequence) ordering."""

    def __init__(self, road: RoadNetwork) -> None:
        self.road = road
        self.node_index = {node: n for n, node in enumerate(road.intersections)}
        self.adjacency: List[List[Tuple[int, int]]] = [[] for _ in road.intersections]
        for edge_index, edge in enumerate(road.edges):
            self.adjacency[self.node_index[edge.a]].append(
                (self.node_index[edge.b], edge_index)
            )

    def run(
        self, source: int, hours: np.ndarray
    ) -> Dict[int, Tuple[float, float, Tuple[int, ...]]]:
        settled: Dict[int, Tuple[float, float, Tuple[int, ...]]] = {}
        heap = [(0.0, 0.0, (source,), source)]
        while heap:
            time_h, dist, seq, node = heapq.heappop(heap)
            if node in settled:
                continue
            settled[node] = (time_h, dist, seq)
            for neighbor, edge_index in self.adjacency[node]:
                if neighbor in settled:
                    continue
                heapq.heappush(
                    heap,
                    (
                        time_h + hours[edge_index],
                        dist + self.road.edges[edge_index].length_km,
                        seq + (neighbor,),
                        neighbor,
                    ),
                )
        return settled


def fastest_paths(
    road: RoadNetwork,
    times: TravelTimeTable,
    stations: StationMap,
    t_unit: float,
    *,
    threads: int = 1,
) -> PathTable:
    """Fastest journey between every ordered station pair at every step.

    Edge times stay frozen at the departure step for the whole journey.
    Ties on time go to the shorter distance, then to the lexicographically
    smallest sequence of intersection indices.

    Raises:
        UnreachableStationError: if a station pair has no path.
    """
    search = _Dijkstra(road)
    sources = [search.node_index[node] for node in stations.intersections]
    n_i = len(stations)
    n_k = times.n_steps

    def one_step(step: int) -> Tuple[np.ndarray, np.ndarray, RouteMap]:
        distance = np.zeros((n_i, n_i))
        hours = np.zeros((n_i, n_i))
        routes: RouteMap = {}
        step_hours = times.hours[:, step]
        for i, source in enumerate(sources):
            labels = search.run(source, step_hours)
            for j, target in enumerate(sources):
                if i == j:
                    routes[(i, j)] = (road.intersections[source],)
                    continue
                if target not in labels:
                    raise UnreachableStationError(
                        stations.ids[i], stations.ids[j], step
                    )
                time_h, dist, seq = labels[target]
                hours[i, j] = time_h
                distance[i, j] = dist
                routes[(i, j)] = tuple(road.intersections[n] for n in seq)
        return distance, hours, routes

    if threads > 1 and n_k > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one_step, range(n_k)))
    else:
        results = [one_step(k) for k in range(n_k)]

    if results:
        distance_km = np.stack([r[0] for r in results])
        hours = np.stack([r[1] for r in results])
    else:
        distance_km = np.zeros((0, n_i, n_i))
        hours = np.zeros((0, n_i, n_i))
    gamma = np.zeros(hours.shape, dtype=int)
    off_diagonal = ~np.eye(n_i, dtype=bool)
    for k in range(n_k):
        for i, j in zip(*np.nonzero(off_diagonal)):
            gamma[k, i, j] = normalized_steps(hours[k, i, j], t_unit)
    table = PathTable(
        station_ids=stations.ids,
        routes=tuple(r[2] for r in results),
        distance_km=distance_km,
        hours=hours,
        gamma=gamma,
        t_unit=t_unit,
    )
    LOGGER.info(
        "Fastest paths for %d stations over %d steps, gamma max %d",
        n_i,
        n_k,
        table.gamma_max,
    )
    return table


def gamma_max(paths: PathTable) -> int:
    if paths.gamma.size == 0:
        return 0
    return int(paths.gamma.max())


def arrival_coefficients(paths: PathTable) -> np.ndarray:
    """The ``(Gamma, N_I, N_I, N_K)`` 0/1 tensor of in-transit steps.

    Journeys that would end beyond the horizon get no coefficients.
    """
    n_i, n_k, big_gamma = paths.n_stations, paths.n_steps, paths.gamma_max
    f = np.zeros((big_gamma, n_i, n_i, n_k), dtype=np.uint8)
    for k in range(n_k):
        for i in range(n_i):
            for j in range(n_i):
                if paths.fits(i, j, k):
                    f[: paths.gamma[k, i, j], i, j, k] = 1
    return f


def build_transit_matrix(
    f: np.ndarray, n_stations: int, n_steps: int, big_gamma: int
) -> TransitMatrix:
    """Assemble the sparse block matrix ``T`` from arrival coefficients."""
    scale = 1.0 / (n_stations * big_gamma) if big_gamma else 0.0
    rows: List[int] = []
    cols: List[int] = []
    data: List[float] = []
    for k in range(n_steps - 1):
        for i in range(n_stations):
            rows.append(k * n_stations + i)
            cols.append(k * n_stations + i)
            data.append(1.0)
        for tau in range(1, big_gamma + 1):
            if k + tau > n_steps - 1:
                break
            for i, j in zip(*np.nonzero(f[tau - 1, :, :, k])):
                rows.append(k * n_stations + int(i))
                cols.append((k + tau) * n_stations + int(j))
                data.append(scale)
    shape = (n_stations * max(n_steps - 1, 0), n_stations * n_steps)
    matrix = sp.csr_matrix((data, (rows, cols)), shape=shape)
    return TransitMatrix(f, matrix, big_gamma, n_stations, n_steps)


def transit_model(paths: PathTable) -> TransitMatrix:
    return build_transit_matrix(
        arrival_coefficients(paths), paths.n_stations, paths.n_steps, paths.gamma_max
    )


def position_variables(
    n_stations: int,
    n_steps: int,
    n_devices: int,
    start: Optional[Mapping[int, int]] = None,
) -> List[VariableDecl]:
    """Binary connection flags ``m``; ``start`` pins devices to a station at step 0."""
    start = start or {}
    decls = []
    for s in range(n_devices):
        for i in range(n_stations):
            for k in range(n_steps):
                lower, upper = 0.0, 1.0
                if k == 0 and s in start:
                    lower = upper = 1.0 if start[s] == i else 0.0
                decls.append(VariableDecl(("m", s, i, k), lower, upper, VarKind.BINARY))
    return decls


def emit_connection_constraints(
    transit: TransitMatrix, n_devices: int
) -> List[LinearRow]:
    """``T m_s <= 1`` for every device, one row per ``(s, k, i)``."""
    n_i = transit.n_stations
    matrix = transit.matrix
    rows = []
    for s in range(n_devices):
        for r in range(matrix.shape[0]):
            k, i = divmod(r, n_i)
            start, end = matrix.indptr[r], matrix.indptr[r + 1]
            coefficients = tuple(
                (("m", s, int(c) % n_i, int(c) // n_i), float(v))
                for c, v in zip(matrix.indices[start:end], matrix.data[start:end])
            )
            name = f"conn_s{s}_k{k}_i{i}"
            rows.append(LinearRow(name, coefficients, RowSense.LE, 1.0))
    return rows


def emit_flag_constraints(
    paths: PathTable,
    f: np.ndarray,
    n_devices: int,
    *,
    max_transits: Optional[int] = None,
) -> TransitConstraints:
    """Departure, transit and travelled-distance flags with their rows.

    Declares ``e`` (departures), ``y`` (in transit), ``z`` (km driven per
    step) and ``es`` (journeys per device) and links them to ``m``.
    """
    n_i, n_k = paths.n_stations, paths.n_steps
    big_gamma = f.shape[0]
    gamma = paths.gamma
    pairs = [(i, j) for i in range(n_i) for j in range(n_i) if i != j]
    variables: List[VariableDecl] = []
    rows: List[LinearRow] = []

    for s in range(n_devices):
        for i, j in pairs:
            for k in range(n_k):
                upper = 1.0 if paths.fits(i, j, k) else 0.0
                key = ("e", s, i, j, k)
                variables.append(VariableDecl(key, 0.0, upper, VarKind.BINARY))
        for k in range(n_k):
            variables.append(VariableDecl(("y", s, k), 0.0, 1.0, VarKind.BINARY))
            variables.append(VariableDecl(("z", s, k)))
        variables.append(VariableDecl(("es", s)))

        def e(i: int, j: int, k: int) -> VarKey:
            return ("e", s, i, j, k)

        def m(i: int, k: int) -> VarKey:
            return ("m", s, i, k)

        for k in range(n_k):
            rows.append(
                LinearRow(
                    f"one_dep_s{s}_k{k}",
                    tuple((e(i, j, k), 1.0) for i, j in pairs),
                    RowSense.LE,
                    1.0,
                )
            )
        rows.append(
            LinearRow(
                f"count_s{s}",
                ((("es", s), 1.0),)
                + tuple((e(i, j, k), -1.0) for i, j in pairs for k in range(n_k)),
                RowSense.EQ,
                0.0,
            )
        )
        if max_transits is not None:
            rows.append(
                LinearRow(
                    f"cap_s{s}",
                    ((("es", s), 1.0),),
                    RowSense.LE,
                    float(max_transits),
                )
            )

        for i, j in pairs:
            for k in range(n_k):
                if not paths.fits(i, j, k):
                    continue
                g = int(gamma[k, i, j])
                others = tuple((e(i, h, k), 1.0) for h in range(n_i) if h not in (i, j))
                rows.append(
                    LinearRow(
                        f"link_s{s}_i{i}_j{j}_k{k}",
                        ((e(i, j, k), 1.0),)
                        + others
                        + (
                            (m(i, k), -1.0),
                            (m(i, k + 1), 1.0),
                            (m(j, k + g), 1.0),
                            (m(j, k + g + 1), -1.0),
                        ),
                        RowSense.GE,
                        -1.0,
                    )
                )
                rows.append(
                    LinearRow(
                        f"arr_s{s}_i{i}_j{j}_k{k}",
                        ((e(i, j, k), 2.0), (m(i, k), -1.0), (m(j, k + g + 1), -1.0)),
                        RowSense.LE,
                        0.0,
                    )
                )

        for i in range(n_i):
            for k in range(n_k - 1):
                rows.append(
                    LinearRow(
                        f"dep_s{s}_i{i}_k{k}",
                        tuple((e(i, j, k), 1.0) for j in range(n_i) if j != i)
                        + ((m(i, k), -1.0), (m(i, k + 1), 1.0)),
                        RowSense.GE,
                        0.0,
                    )
                )

        for k in range(n_k):
            rows.append(
                LinearRow(
                    f"park_s{s}_k{k}",
                    ((("y", s, k), 1.0),) + tuple((m(i, k), 1.0) for i in range(n_i)),
                    RowSense.EQ,
                    1.0,
                )
            )
            in_transit: List[Tuple[VarKey, float]] = [(("y", s, k), 1.0)]
            travelled: List[Tuple[VarKey, float]] = [(("z", s, k), 1.0)]
            for tau in range(max(0, k - big_gamma), k):
                for i, j in pairs:
                    if f[k - tau - 1, i, j, tau]:
                        in_transit.append((e(i, j, tau), -1.0))
                        per_step = paths.distance_km[tau, i, j] / gamma[tau, i, j]
                        travelled.append((e(i, j, tau), -float(per_step)))
            rows.append(
                LinearRow(f"transit_s{s}_k{k}", tuple(in_transit), RowSense.EQ, 0.0)
            )
            rows.append(
                LinearRow(f"dist_s{s}_k{k}", tuple(travelled), RowSense.EQ, 0.0)
            )

    return TransitConstraints(variables, rows)


def transit_constraints(
    paths: PathTable,
    transit: TransitMatrix,
    n_devices: int,
    *,
    max_transits: Optional[int] = None,
    start: Optional[Mapping[int, int]] = None,
) -> TransitConstraints:
    """Every road-side variable and row for ``n_devices`` devices."""
    variables = position_variables(paths.n_stations, paths.n_steps, n_devices, start)
    rows = emit_connection_constraints(transit, n_devices)
    flags = emit_flag_constraints(
        paths, transit.f, n_devices, max_transits=max_transits
    )
    variables.extend(flags.variables)
    rows.extend(flags.rows)
    LOGGER.debug("Transit model: %d variables, %d rows", len(variables), len(rows))
    return TransitConstraints(variables, rows)


def path_table_frame(paths: PathTable) -> pd.DataFrame:
    records = []
    for k in range(paths.n_steps):
        for i, origin in enumerate(paths.station_ids):
            for j, destination in enumerate(paths.station_ids):
                records.append(
                    {
                        "step": k,
                        "origin": origin,
                        "destination": destination,
                        "distance_km": paths.distance_km[k, i, j],
                        "hours": paths.hours[k, i, j],
                        "gamma": int(paths.gamma[k, i, j]),
                        "route": "-".join(str(n) for n in paths.routes[k][(i, j)]),
                    }
                )
    return pd.DataFrame.from_records(records)


def transit_matrix_frame(transit: TransitMatrix) -> pd.DataFrame:
    coo = transit.matrix.tocoo()
    order = np.lexsort((coo.col, coo.row))
    return pd.DataFrame(
        {"row": coo.row[order], "col": coo.col[order], "value": coo.data[order]}
    )


def dump_transit(
    paths: PathTable, transit: TransitMatrix, directory: Union[str, Path]
) -> Tuple[Path, Path]:
    """Write ``paths.csv`` and ``transit_matrix.csv`` for auditing."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths_csv = directory / "paths.csv"
    matrix_csv = directory / "transit_matrix.csv"
    path_table_frame(paths).to_csv(paths_csv, index=False)
    transit_matrix_frame(transit).to_csv(matrix_csv, index=False, float_format="%.17g")
    LOGGER.info("Dumped path table and transit matrix to %s", directory)
    return paths_csv, matrix_csv
