# SPDX-License-Identifier: Apache-2.0

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
import importlib.resources
import json
import logging
import math
from pathlib import Path
from typing import Any
from typing import Dict
from typing import Iterator
from typing import List
from typing import Mapping
from typing import Optional
from typing import Sequence
from typing import Set
from typing import Tuple
from typing import Union

import networkx as nx
import numpy as np

from ._options import GridLimits
from ._options import SolverOptions
from ._profiles import expand_inline
from ._profiles import read_profile_csv
from ._profiles import resample_profile
from ._profiles import step_starts
from .exceptions import ScenarioParseError
from .exceptions import ScenarioValidationError

LOGGER = logging.getLogger(__name__)

SCHEMA_VERSION = 1
SHIPPED_SCENARIOS = ("default", "desk", "feeder123")

NodeId = Union[int, str]
Series = Tuple[float, ...]


@dataclass(frozen=True)
class MesdSpec:
    """Specification of one mobile energy storage device.

    Powers are in kW with discharge into the grid positive, energies in kWh,
    state of charge as a fraction of ``e_cap``.
    """

    name: str
    p_max: float
    p_min: float
    e_cap: float
    e_min: float
    e_max: float
    e_0: float
    de_max: float
    eta_transit: float
    """Energy drawn from the battery per km driven (kWh/km)"""
    eta_c: float = 0.95
    """Stored energy per unit of energy drawn from the grid when charging"""
    eta_d: float = 1.0 / 0.95
    """Battery energy spent per unit of energy delivered when discharging"""
    pf_min: float = 0.95

    @property
    def q_ratio(self) -> float:
        """Largest |Q| per kW of active power allowed by ``pf_min``."""
        return math.sqrt(1.0 - self.pf_min**2) / self.pf_min


@dataclass(frozen=True)
class Station:
    id: NodeId
    intersection: NodeId
    bus: NodeId


@dataclass(frozen=True)
class StationMap:
    """Charging stations with their road intersection and grid bus."""

    stations: Tuple[Station, ...]

    def __len__(self) -> int:
        return len(self.stations)

    def __iter__(self) -> Iterator[Station]:
        return iter(self.stations)

    def __getitem__(self, index: int) -> Station:
        return self.stations[index]

    @property
    def ids(self) -> Tuple[NodeId, ...]:
        return tuple(s.id for s in self.stations)

    @property
    def intersections(self) -> Tuple[NodeId, ...]:
        return tuple(s.intersection for s in self.stations)

    @property
    def buses(self) -> Tuple[NodeId, ...]:
        return tuple(s.bus for s in self.stations)

    def index_of(self, station_id: NodeId) -> int:
        for index, station in enumerate(self.stations):
            if station.id == station_id or str(station.id) == str(station_id):
                return index
        raise KeyError(f"no station {station_id!r}")


@dataclass(frozen=True)
class RoadEdge:
    a: NodeId
    b: NodeId
    length_km: float
    speed_kmh: Series
    """Predicted average speed for every scheduling step"""


@dataclass(frozen=True)
class RoadNetwork:
    intersections: Tuple[NodeId, ...]
    edges: Tuple[RoadEdge, ...]

    def graph(self) -> nx.DiGraph:
        graph = nx.DiGraph()
        graph.add_nodes_from(self.intersections)
        for index, edge in enumerate(self.edges):
            graph.add_edge(edge.a, edge.b, index=index, length_km=edge.length_km)
        return graph


@dataclass(frozen=True)
class Bus:
    id: NodeId
    base_kv: float


@dataclass(frozen=True)
class Line:
    from_bus: NodeId
    to_bus: NodeId
    r_pu: float
    x_pu: float
    rating_kva: float


@dataclass(frozen=True)
class GridNetwork:
    """Balanced positive-sequence feeder with its net load forecast.

    ``p_load_kw[b][k]`` and ``q_load_kvar[b][k]`` are the forecast net
    consumption of bus ``b`` at step ``k`` (renewable generation already
    subtracted).
    """

    buses: Tuple[Bus, ...]
    slack_bus: NodeId
    lines: Tuple[Line, ...]
    s_base_kva: float
    p_load_kw: Tuple[Series, ...]
    q_load_kvar: Tuple[Series, ...]

    @property
    def n_buses(self) -> int:
        return len(self.buses)

    @property
    def n_lines(self) -> int:
        return len(self.lines)

    @property
    def n_steps(self) -> int:
        return len(self.p_load_kw[0]) if self.p_load_kw else 0

    @property
    def bus_ids(self) -> Tuple[NodeId, ...]:
        return tuple(b.id for b in self.buses)

    @property
    def slack_index(self) -> int:
        return self.bus_index(self.slack_bus)

    def bus_index(self, bus_id: NodeId) -> int:
        for index, bus in enumerate(self.buses):
            if bus.id == bus_id:
                return index
        raise KeyError(f"no bus {bus_id!r}")

    def load_arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        """Forecast loads as ``(N_V, N_K)`` arrays in kW and kvar."""
        return (
            np.array(self.p_load_kw, dtype=float).reshape(self.n_buses, -1),
            np.array(self.q_load_kvar, dtype=float).reshape(self.n_buses, -1),
        )

    def with_loads(self, p_load_kw: np.ndarray, q_load_kvar: np.ndarray) -> GridNetwork:
        return dataclasses.replace(
            self,
            p_load_kw=_as_table(p_load_kw),
            q_load_kvar=_as_table(q_load_kvar),
        )


@dataclass(frozen=True)
class Scenario:
    """A complete, validated problem instance.

    Immutable after construction; share it freely between threads.
    """

    name: str
    t_unit: float
    n_steps: int
    horizon_h: float
    road: RoadNetwork
    grid: GridNetwork
    stations: StationMap
    fleet: Tuple[MesdSpec, ...]
    price: Series
    limits: GridLimits
    options: SolverOptions
    case3_fleet: Optional[Tuple[MesdSpec, ...]] = None

    @property
    def n_stations(self) -> int:
        return len(self.stations)

    @property
    def n_devices(self) -> int:
        return len(self.fleet)

    @property
    def n_buses(self) -> int:
        return self.grid.n_buses

    @property
    def pev_fleet(self) -> Tuple[MesdSpec, ...]:
        """Devices driven along fixed paths by the fixed-path strategy."""
        return self.fleet if self.case3_fleet is None else self.case3_fleet

    def price_array(self) -> np.ndarray:
        return np.asarray(self.price, dtype=float)

    def replace(self, **changes: Any) -> Scenario:
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> Dict[str, Any]:
        """Canonical document form, every profile inline on the step grid."""
        return _canonical_document(self)


def _as_table(array: np.ndarray) -> Tuple[Series, ...]:
    return tuple(tuple(float(x) for x in row) for row in np.asarray(array))


def _as_series(array: np.ndarray) -> Series:
    return tuple(float(x) for x in np.asarray(array))


def shipped_scenario(name: str) -> Path:
    """Path of a scenario file shipped inside the package."""
    if name not in SHIPPED_SCENARIOS:
        raise ScenarioParseError(
            f"unknown shipped scenario {name!r}; choose one of {SHIPPED_SCENARIOS}"
        )
    root = importlib.resources.files("mesdopt") / "scenarios" / f"{name}.json"
    return Path(str(root))


def load_scenario(
    path: Union[str, Path], *, nk_override: Optional[int] = None
) -> Scenario:
    """Load, validate and normalize a scenario document.

    Args:
        path: scenario JSON file; CSV profile references are resolved
            relative to its directory
        nk_override: number of scheduling steps to use instead of the
            document's; the step length is re-derived from the horizon

    Raises:
        ScenarioParseError: if the file cannot be read or is not JSON.
        ScenarioValidationError: if a field is missing, dangling or violates
            an invariant; the exception names the field.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ScenarioParseError(f"cannot read scenario {path}: {e}")
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioParseError(
            f"{path}: malformed JSON at line {e.lineno} column {e.colno}: {e.msg}"
        )
    if not isinstance(document, dict):
        raise ScenarioParseError(f"{path}: top level must be an object")

    scenario = scenario_from_dict(document, path.parent, nk_override=nk_override)
    LOGGER.info(
        "Loaded scenario %r: %d stations, %d devices, %d buses, %d steps of %g h",
        scenario.name,
        scenario.n_stations,
        scenario.n_devices,
        scenario.n_buses,
        scenario.n_steps,
        scenario.t_unit,
    )
    return scenario


def save_scenario(scenario: Scenario, path: Union[str, Path]) -> None:
    """Write ``scenario`` in canonical form (all profiles inline)."""
    Path(path).write_text(
        json.dumps(scenario.to_dict(), indent=1) + "\n", encoding="utf-8"
    )


class _Reader:
    """Field access that reports missing or mistyped fields by path."""

    def __init__(self, document: Mapping[str, Any], where: str) -> None:
        self._doc = document
        self._where = where

    def _field(self, key: str) -> str:
        return f"{self._where}.{key}" if self._where else key

    def get(self, key: str, default: Any = None) -> Any:
        return self._doc.get(key, default)

    def require(self, key: str) -> Any:
        if key not in self._doc:
            raise ScenarioValidationError(self._field(key), "missing")
        return self._doc[key]

    def number(self, key: str, default: Optional[float] = None) -> float:
        if default is None:
            value = self.require(key)
        else:
            value = self._doc.get(key, default)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ScenarioValidationError(self._field(key), f"not a number: {value!r}")
        if not math.isfinite(value):
            raise ScenarioValidationError(self._field(key), "must be finite")
        return float(value)

    def items(self, key: str) -> List[_Reader]:
        value = self.require(key)
        if not isinstance(value, list):
            raise ScenarioValidationError(self._field(key), "must be a list")
        readers = []
        for index, item in enumerate(value):
            if not isinstance(item, dict):
                raise ScenarioValidationError(
                    f"{self._field(key)}[{index}]", "must be an object"
                )
            readers.append(_Reader(item, f"{self._field(key)}[{index}]"))
        return readers

    def child(self, key: str, optional: bool = False) -> _Reader:
        value = self._doc.get(key) if optional else self.require(key)
        if value is None:
            value = {}
        if not isinstance(value, dict):
            raise ScenarioValidationError(self._field(key), "must be an object")
        return _Reader(value, self._field(key))

    def fail(self, key: str, message: str) -> ScenarioValidationError:
        return ScenarioValidationError(self._field(key), message)


class _ProfileResolver:
    def __init__(
        self, profiles: _Reader, base_dir: Path, t_unit: float, n_steps: int
    ) -> None:
        self._profiles = profiles
        self._base_dir = base_dir
        self._t_unit = t_unit
        self.n_steps = n_steps
        self._cache: Dict[str, np.ndarray] = {}

    def __call__(self, owner: _Reader, key: str) -> np.ndarray:
        profile_id = owner.require(key)
        if not isinstance(profile_id, str):
            raise owner.fail(key, f"profile id must be a string, not {profile_id!r}")
        if profile_id not in self._cache:
            self._cache[profile_id] = self._resolve(owner, key, profile_id)
        return self._cache[profile_id]

    def _resolve(self, owner: _Reader, key: str, profile_id: str) -> np.ndarray:
        field = f"profiles.{profile_id}"
        spec = self._profiles.get(profile_id)
        if spec is None:
            raise owner.fail(key, f"references unknown profile {profile_id!r}")
        if isinstance(spec, list):
            return expand_inline(spec, self.n_steps, field=field)
        if isinstance(spec, dict) and "csv" in spec:
            minutes, values = read_profile_csv(self._base_dir / spec["csv"])
        elif isinstance(spec, dict) and "minutes" in spec and "values" in spec:
            minutes, values = spec["minutes"], spec["values"]
        else:
            raise ScenarioValidationError(
                field, "must be a list, {csv: ...} or {minutes: ..., values: ...}"
            )
        return resample_profile(
            minutes, values, self._t_unit, self.n_steps, field=field
        )


def scenario_from_dict(
    document: Mapping[str, Any],
    base_dir: Union[str, Path] = ".",
    *,
    nk_override: Optional[int] = None,
) -> Scenario:
    """Build a validated `Scenario` from a parsed scenario document."""
    doc = _Reader(document, "")
    meta = doc.child("meta")
    version = meta.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise meta.fail("schema_version", f"unsupported version {version!r}")

    horizon_h = meta.number("horizon_h", 24.0)
    if nk_override is not None:
        if nk_override < 2:
            raise ScenarioValidationError("nk_override", "must be >= 2")
        n_steps = int(nk_override)
        t_unit = horizon_h / n_steps
    else:
        t_unit = meta.number("t_unit_h", 0.25)
        if t_unit <= 0:
            raise meta.fail("t_unit_h", "must be positive")
        n_steps = int(meta.get("n_steps", round(horizon_h / t_unit)))
    if n_steps < 2:
        raise meta.fail("n_steps", "must be at least 2")
    if abs(n_steps * t_unit - horizon_h) > 1e-9:
        raise meta.fail(
            "n_steps", f"{n_steps} steps of {t_unit} h do not span {horizon_h} h"
        )

    profiles = _ProfileResolver(
        doc.child("profiles", optional=True), Path(base_dir), t_unit, n_steps
    )
    road = _read_road(doc.child("road"), profiles)
    grid = _read_grid(doc.child("grid"), profiles, meta.number("s_base_kva", 1000.0))
    stations = _read_stations(doc, road, grid)
    fleet = _read_fleet(doc, "fleet")
    case3_fleet = _read_fleet(doc, "case3_fleet") if "case3_fleet" in document else None

    price = profiles(doc, "price_profile_id")
    limits = _read_limits(doc.child("limits", optional=True))
    options = _read_options(doc.child("options", optional=True), fleet, stations)

    _check_station_reachability(road, stations)

    return Scenario(
        name=str(meta.get("name", "scenario")),
        t_unit=t_unit,
        n_steps=n_steps,
        horizon_h=horizon_h,
        road=road,
        grid=grid,
        stations=stations,
        fleet=fleet,
        price=_as_series(price),
        limits=limits,
        options=options,
        case3_fleet=case3_fleet,
    )


def _node_id(reader: _Reader, key: str) -> NodeId:
    value = reader.require(key)
    if isinstance(value, bool) or not isinstance(value, (int, str)):
        raise reader.fail(key, f"ids must be integers or strings, not {value!r}")
    return value


def _read_road(road: _Reader, profiles: _ProfileResolver) -> RoadNetwork:
    raw = road.require("intersections")
    if not isinstance(raw, list) or not raw:
        raise road.fail("intersections", "must be a non-empty list")
    intersections = tuple(raw)
    if len(set(intersections)) != len(intersections):
        raise road.fail("intersections", "ids must be unique")
    known = set(intersections)

    edges = []
    seen: Set[Tuple[NodeId, NodeId]] = set()
    for edge in road.items("edges"):
        a = _node_id(edge, "a")
        b = _node_id(edge, "b")
        for key, node in (("a", a), ("b", b)):
            if node not in known:
                raise edge.fail(key, f"unknown intersection {node!r}")
        if a == b:
            raise edge.fail("b", "an edge must join two different intersections")
        length = edge.number("length_km")
        if length <= 0:
            raise edge.fail("length_km", "must be positive")
        directions = [("speed_profile_id", a, b)]
        if edge.get("reverse_speed_profile_id") is not None:
            directions.append(("reverse_speed_profile_id", b, a))
        for key, tail, head in directions:
            # the road graph keeps one edge per ordered pair
            if (tail, head) in seen:
                raise edge.fail(key, f"duplicate road edge {tail!r} -> {head!r}")
            seen.add((tail, head))
            speed = profiles(edge, key)
            _check_speeds(edge, key, speed)
            edges.append(RoadEdge(tail, head, length, _as_series(speed)))
    return RoadNetwork(intersections, tuple(edges))


def _check_speeds(edge: _Reader, key: str, speed: np.ndarray) -> None:
    bad = np.flatnonzero(speed <= 0)
    if bad.size:
        raise edge.fail(
            key, f"speed must be positive, got {speed[bad[0]]} at step {bad[0]}"
        )


def _read_grid(grid: _Reader, profiles: _ProfileResolver, s_base: float) -> GridNetwork:
    if s_base <= 0:
        raise ScenarioValidationError("meta.s_base_kva", "must be positive")

    buses = []
    p_rows = []
    q_rows = []
    slack_flags = []
    for bus in grid.items("buses"):
        bus_id = _node_id(bus, "id")
        base_kv = bus.number("base_kV")
        if base_kv <= 0:
            raise bus.fail("base_kV", "must be positive")
        buses.append(Bus(bus_id, base_kv))
        if bus.get("slack", False):
            slack_flags.append(bus_id)

        p = np.zeros(profiles.n_steps)
        q = np.zeros(profiles.n_steps)
        if bus.get("p_profile") is not None:
            p = profiles(bus, "p_profile") * bus.number("p_scale_kw", 1.0)
        if bus.get("q_profile") is not None:
            q = profiles(bus, "q_profile") * bus.number("q_scale_kvar", 1.0)
        if bus.get("gen_profile") is not None:
            p = p - profiles(bus, "gen_profile") * bus.number("gen_scale_kw", 1.0)
        p_rows.append(p)
        q_rows.append(q)

    ids = [b.id for b in buses]
    if len(set(ids)) != len(ids):
        raise grid.fail("buses", "bus ids must be unique")
    if grid.get("slack_bus") is not None:
        slack_flags.append(grid.get("slack_bus"))
    if len(set(slack_flags)) != 1:
        raise grid.fail("slack_bus", "exactly one slack bus is required")
    slack = slack_flags[0]
    if slack not in ids:
        raise grid.fail("slack_bus", f"unknown bus {slack!r}")

    lines = []
    for line in grid.items("lines"):
        ends = (_node_id(line, "from"), _node_id(line, "to"))
        for key, node in zip(("from", "to"), ends):
            if node not in ids:
                raise line.fail(key, f"unknown bus {node!r}")
        if ends[0] == ends[1]:
            raise line.fail("to", "a line must join two different buses")
        r = line.number("r_pu")
        x = line.number("x_pu")
        if r < 0 or (r == 0 and x == 0):
            raise line.fail("r_pu", "impedance must be nonzero with r >= 0")
        rating = line.number("rating_kVA")
        if rating <= 0:
            raise line.fail("rating_kVA", "must be positive")
        lines.append(Line(ends[0], ends[1], r, x, rating))

    topology = nx.Graph()
    topology.add_nodes_from(ids)
    topology.add_edges_from((ln.from_bus, ln.to_bus) for ln in lines)
    if not nx.is_connected(topology):
        raise grid.fail("lines", "the feeder graph must be connected")

    return GridNetwork(
        buses=tuple(buses),
        slack_bus=slack,
        lines=tuple(lines),
        s_base_kva=s_base,
        p_load_kw=_as_table(np.array(p_rows)),
        q_load_kvar=_as_table(np.array(q_rows)),
    )


def _read_stations(doc: _Reader, road: RoadNetwork, grid: GridNetwork) -> StationMap:
    stations = []
    known_intersections = set(road.intersections)
    known_buses = set(grid.bus_ids)
    for item in doc.items("stations"):
        station_id = _node_id(item, "id")
        intersection = _node_id(item, "intersection")
        bus = _node_id(item, "bus")
        if intersection not in known_intersections:
            raise item.fail(
                "intersection",
                f"station {station_id!r} references unknown intersection"
                f" {intersection!r}",
            )
        if bus not in known_buses:
            raise item.fail(
                "bus", f"station {station_id!r} references unknown bus {bus!r}"
            )
        stations.append(Station(station_id, intersection, bus))

    if not stations:
        raise ScenarioValidationError("stations", "at least one station is required")
    for attr, label in (
        ("id", "ids"),
        ("intersection", "intersections"),
        ("bus", "buses"),
    ):
        values = [getattr(s, attr) for s in stations]
        if len(set(values)) != len(values):
            raise ScenarioValidationError(
                "stations", f"station {label} must be distinct"
            )
    return StationMap(tuple(stations))


def _read_fleet(doc: _Reader, key: str) -> Tuple[MesdSpec, ...]:
    fleet = []
    for index, item in enumerate(doc.items(key)):
        spec = MesdSpec(
            name=str(item.get("name", f"MESD{index + 1}")),
            p_max=item.number("P_max"),
            p_min=item.number("P_min"),
            e_cap=item.number("E_cap"),
            e_min=item.number("E_min"),
            e_max=item.number("E_max"),
            e_0=item.number("E_0"),
            de_max=item.number("dE_max"),
            eta_transit=item.number("eta_transit"),
            eta_c=item.number("eta_c", 0.95),
            eta_d=item.number("eta_d", 1.0 / 0.95),
            pf_min=item.number("pf_min", 0.95),
        )
        validate_mesd(spec, f"{key}[{index}]")
        fleet.append(spec)
    names = [spec.name for spec in fleet]
    if len(set(names)) != len(names):
        raise ScenarioValidationError(key, "device names must be unique")
    return tuple(fleet)


def validate_mesd(spec: MesdSpec, field: str = "fleet") -> None:
    """Check the physical invariants of a device specification."""
    checks = (
        ("P_min", spec.p_min <= 0 <= spec.p_max, "need P_min <= 0 <= P_max"),
        ("E_cap", spec.e_cap > 0, "must be positive"),
        (
            "E_0",
            0 <= spec.e_min < spec.e_0 < spec.e_max <= 1,
            "need 0 <= E_min < E_0 < E_max <= 1",
        ),
        ("dE_max", spec.de_max >= 0, "must be non-negative"),
        ("pf_min", 0 < spec.pf_min <= 1, "need 0 < pf_min <= 1"),
        ("eta_transit", spec.eta_transit > 0, "must be positive"),
        ("eta_c", spec.eta_c > 0, "must be positive"),
        ("eta_d", spec.eta_d > 0, "must be positive"),
    )
    for key, ok, message in checks:
        if not ok:
            raise ScenarioValidationError(f"{field}.{key}", message)


def _read_limits(limits: _Reader) -> GridLimits:
    values = {}
    for key in GridLimits._ATTRS:
        if limits.get(key) is not None:
            values[key] = limits.number(key)
    result = GridLimits(**values)
    if result.effective_dv_min > result.effective_dv_max:
        raise limits.fail("dv_min_pu", "must not exceed dv_max_pu")
    if result.effective_dl_max_frac < 0:
        raise limits.fail("dl_max_frac", "must be non-negative")
    return result


def _read_options(
    options: _Reader, fleet: Sequence[MesdSpec], stations: StationMap
) -> SolverOptions:
    known = set(SolverOptions._ATTRS)
    for key in options._doc:
        if key not in known:
            raise options.fail(key, "unknown solver option")
    result = SolverOptions(**dict(options._doc))
    names = {spec.name for spec in fleet}
    for device, station in (result.pin_start or {}).items():
        if device not in names:
            raise options.fail("pin_start", f"unknown device {device!r}")
        try:
            stations.index_of(station)
        except KeyError:
            raise options.fail("pin_start", f"unknown station {station!r}")
    return result


def _check_station_reachability(road: RoadNetwork, stations: StationMap) -> None:
    graph = road.graph()
    for origin in stations:
        reachable = nx.descendants(graph, origin.intersection)
        for destination in stations:
            if destination is origin:
                continue
            if destination.intersection not in reachable:
                raise ScenarioValidationError(
                    "road.edges",
                    f"station {destination.id!r} cannot be reached from"
                    f" station {origin.id!r}",
                )


def _spec_to_dict(spec: MesdSpec) -> Dict[str, Any]:
    return {
        "name": spec.name,
        "P_max": spec.p_max,
        "P_min": spec.p_min,
        "E_cap": spec.e_cap,
        "E_min": spec.e_min,
        "E_max": spec.e_max,
        "E_0": spec.e_0,
        "dE_max": spec.de_max,
        "eta_transit": spec.eta_transit,
        "eta_c": spec.eta_c,
        "eta_d": spec.eta_d,
        "pf_min": spec.pf_min,
    }


def _canonical_document(scenario: Scenario) -> Dict[str, Any]:
    minutes = [float(m) for m in step_starts(scenario.t_unit, scenario.n_steps)]
    profiles: Dict[str, Any] = {}

    def inline(profile_id: str, values: Sequence[float]) -> str:
        profiles[profile_id] = {"minutes": minutes, "values": list(values)}
        return profile_id

    edges = [
        {
            "a": edge.a,
            "b": edge.b,
            "length_km": edge.length_km,
            "speed_profile_id": inline(f"speed_{index}", edge.speed_kmh),
        }
        for index, edge in enumerate(scenario.road.edges)
    ]
    grid = scenario.grid
    buses = [
        {
            "id": bus.id,
            "base_kV": bus.base_kv,
            "p_profile": inline(f"p_{index}", grid.p_load_kw[index]),
            "q_profile": inline(f"q_{index}", grid.q_load_kvar[index]),
        }
        for index, bus in enumerate(grid.buses)
    ]
    document: Dict[str, Any] = {
        "meta": {
            "name": scenario.name,
            "schema_version": SCHEMA_VERSION,
            "horizon_h": scenario.horizon_h,
            "t_unit_h": scenario.t_unit,
            "n_steps": scenario.n_steps,
            "s_base_kva": grid.s_base_kva,
        },
        "road": {"intersections": list(scenario.road.intersections), "edges": edges},
        "grid": {
            "slack_bus": grid.slack_bus,
            "buses": buses,
            "lines": [
                {
                    "from": line.from_bus,
                    "to": line.to_bus,
                    "r_pu": line.r_pu,
                    "x_pu": line.x_pu,
                    "rating_kVA": line.rating_kva,
                }
                for line in grid.lines
            ],
        },
        "stations": [
            {"id": s.id, "intersection": s.intersection, "bus": s.bus}
            for s in scenario.stations
        ],
        "fleet": [_spec_to_dict(spec) for spec in scenario.fleet],
        "price_profile_id": inline("price", scenario.price),
        "limits": scenario.limits.to_dict(),
        "options": scenario.options.to_dict(),
        "profiles": profiles,
    }
    if scenario.case3_fleet is not None:
        document["case3_fleet"] = [_spec_to_dict(s) for s in scenario.case3_fleet]
    return document
