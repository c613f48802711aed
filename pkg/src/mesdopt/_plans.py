# SPDX-License-Identifier: Apache-2.0

"""Explicit journey state machine for one device.

`check_transit_feasibility` replays connection and departure flags step by
step; it is the reference the linear transit rows are tested against and
the gate every fixed plan passes before it is scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass
import logging
from typing import Dict
from typing import Iterator
from typing import List
from typing import Optional
from typing import Sequence
from typing import Tuple

import numpy as np

from ._milp import VarKey
from ._transit import PathTable
from ._transit import TransitMatrix
from ._transit import arrival_coefficients

LOGGER = logging.getLogger(__name__)

_BINARY_TOL = 1e-6
_RANDOM_ATTEMPTS = 100

Departure = Tuple[int, int, int]
"""``(step, origin, destination)`` station indices"""


@dataclass(frozen=True)
class TransitPlan:
    """Connection flags ``m[i, k]`` and departure flags ``e[i, j, k]``."""

    m: np.ndarray
    e: np.ndarray

    @property
    def n_stations(self) -> int:
        return int(self.m.shape[0])

    @property
    def n_steps(self) -> int:
        return int(self.m.shape[1])

    @property
    def y(self) -> np.ndarray:
        return 1 - self.m.sum(axis=0)

    def positions(self) -> np.ndarray:
        """Station index per step, -1 while travelling."""
        out = np.full(self.n_steps, -1, dtype=int)
        for i, k in zip(*np.nonzero(self.m)):
            out[k] = i
        return out

    def departures(self) -> List[Departure]:
        return sorted((int(k), int(i), int(j)) for i, j, k in zip(*np.nonzero(self.e)))

    @classmethod
    def stationary(cls, n_stations: int, n_steps: int, station: int) -> TransitPlan:
        m = np.zeros((n_stations, n_steps), dtype=int)
        m[station, :] = 1
        return cls(m, np.zeros((n_stations, n_stations, n_steps), dtype=int))

    @classmethod
    def from_departures(
        cls, paths: PathTable, start: int, departures: Sequence[Departure]
    ) -> TransitPlan:
        """Build flags for a device starting at ``start`` and making ``departures``.

        The result is not checked; pass it to `check_transit_feasibility`.
        """
        n_i, n_k = paths.n_stations, paths.n_steps
        m = np.zeros((n_i, n_k), dtype=int)
        e = np.zeros((n_i, n_i, n_k), dtype=int)
        station = start
        step = 0
        for k, i, j in sorted(departures):
            m[station, step : k + 1] = 1
            e[i, j, k] = 1
            station = j
            step = min(paths.arrival_step(i, j, k), n_k)
        m[station, step:] = 1
        return cls(m, e)


@dataclass(frozen=True)
class FeasibilityResult:
    ok: bool
    step: Optional[int] = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


def _fail(step: Optional[int], reason: str) -> FeasibilityResult:
    return FeasibilityResult(False, step, reason)


def _as_binary(values: np.ndarray) -> Optional[np.ndarray]:
    values = np.asarray(values, dtype=float)
    rounded = np.round(values)
    if np.any(np.abs(values - rounded) > _BINARY_TOL) or np.any(
        (rounded != 0) & (rounded != 1)
    ):
        return None
    return rounded.astype(int)


def check_transit_feasibility(
    m: np.ndarray,
    e: np.ndarray,
    paths: PathTable,
    y: Optional[np.ndarray] = None,
    *,
    f: Optional[np.ndarray] = None,
) -> FeasibilityResult:
    """Replay one device's flags against the journey rules.

    Args:
        m: ``(N_I, N_K)`` connection flags.
        e: ``(N_I, N_I, N_K)`` departure flags.
        paths: Journey durations.
        y: Optional in-transit flags, checked against ``1 - sum(m)``.
        f: Arrival coefficients of ``paths`` when already computed.

    Returns:
        A result that is truthy when the flags describe a realizable day.
    """
    n_i, n_k = paths.n_stations, paths.n_steps
    m_bin = _as_binary(m)
    e_bin = _as_binary(e)
    if m_bin is None or e_bin is None:
        return _fail(None, "flags are not binary")
    if m_bin.shape != (n_i, n_k) or e_bin.shape != (n_i, n_i, n_k):
        return _fail(None, "flag shapes do not match the path table")
    if np.any(np.einsum("iik->k", e_bin)):
        step = int(np.flatnonzero(np.einsum("iik->k", e_bin))[0])
        return _fail(step, "departure to the same station")
    if f is None:
        f = arrival_coefficients(paths)

    connected = m_bin.sum(axis=0)
    if y is not None:
        y_bin = _as_binary(y)
        if y_bin is None:
            return _fail(None, "transit flags are not binary")
        wrong = np.flatnonzero(y_bin != 1 - connected)
        if wrong.size:
            return _fail(int(wrong[0]), "transit flag disagrees with connection flags")

    station = -1
    destination = -1
    arrival = -1
    for k in range(n_k):
        if connected[k] > 1:
            return _fail(k, "connected to more than one station")
        here = int(np.argmax(m_bin[:, k])) if connected[k] else -1
        if k == 0:
            if here < 0:
                return _fail(0, "not connected at the first step")
            station = here
        elif arrival > k:
            if here >= 0:
                return _fail(k, "connected while travelling")
        elif arrival == k:
            if here != destination:
                return _fail(k, f"did not arrive at station index {destination}")
            station = here
            arrival = -1
        elif here != station:
            return _fail(k, "changed station without travelling")

        leaving = list(zip(*np.nonzero(e_bin[:, :, k])))
        if not leaving:
            continue
        if len(leaving) > 1:
            return _fail(k, "more than one departure in one step")
        if arrival > k:
            return _fail(k, "departure while travelling")
        i, j = int(leaving[0][0]), int(leaving[0][1])
        if i != station:
            return _fail(
                k, f"departure from station index {i} while parked at {station}"
            )
        if not paths.fits(i, j, k):
            return _fail(k, "journey ends beyond the horizon")
        destination = j
        arrival = paths.arrival_step(i, j, k)

    if arrival >= 0:
        return _fail(n_k - 1, "journey unfinished at the end of the horizon")

    # parked at i at k rules out parking at j inside the i -> j journey time
    for tau in range(1, f.shape[0] + 1):
        for i, j, k in zip(*np.nonzero(f[tau - 1])):
            if k + tau < n_k and m_bin[i, k] and m_bin[j, k + tau]:
                return _fail(
                    int(k + tau), "reached a station faster than its journey time"
                )
    return FeasibilityResult(True)


def plan_assignment(
    plan: TransitPlan, paths: PathTable, device: int = 0
) -> Dict[VarKey, float]:
    """Values of every road-side variable key of ``device`` for ``plan``."""
    n_i, n_k = plan.n_stations, plan.n_steps
    values: Dict[VarKey, float] = {}
    for i in range(n_i):
        for k in range(n_k):
            values[("m", device, i, k)] = float(plan.m[i, k])
            for j in range(n_i):
                if i != j:
                    values[("e", device, i, j, k)] = float(plan.e[i, j, k])
    z = np.zeros(n_k)
    for k, i, j in plan.departures():
        g = int(paths.gamma[k, i, j])
        z[k + 1 : k + 1 + g] += paths.distance_km[k, i, j] / g
    y = plan.y
    for k in range(n_k):
        values[("y", device, k)] = float(y[k])
        values[("z", device, k)] = float(z[k])
    values[("es", device)] = float(len(plan.departures()))
    return values


def iter_transit_plans(
    paths: PathTable,
    transit: Optional[TransitMatrix] = None,
    *,
    max_transits: Optional[int] = None,
    start: Optional[int] = None,
) -> Iterator[TransitPlan]:
    """Every feasible plan of one device, depth first.

    Plans are yielded in a fixed order: by start station, then staying
    before departing, then by destination index.
    """
    n_i, n_k = paths.n_stations, paths.n_steps
    f = arrival_coefficients(paths) if transit is None else transit.f
    starts = range(n_i) if start is None else (start,)

    def walk(
        step: int, station: int, departures: List[Departure]
    ) -> Iterator[List[Departure]]:
        if step >= n_k:
            yield list(departures)
            return
        yield from walk(step + 1, station, departures)
        if max_transits is not None and len(departures) >= max_transits:
            return
        for j in range(n_i):
            if j == station or not paths.fits(station, j, step):
                continue
            departures.append((step, station, j))
            yield from walk(paths.arrival_step(station, j, step), j, departures)
            departures.pop()

    for origin in starts:
        for departures in walk(0, origin, []):
            plan = TransitPlan.from_departures(paths, origin, departures)
            if check_transit_feasibility(plan.m, plan.e, paths, f=f):
                yield plan


def random_transit_plan(
    paths: PathTable,
    rng: np.random.Generator,
    *,
    start: Optional[int] = None,
    departure_probability: float = 0.1,
    max_transits: Optional[int] = None,
) -> TransitPlan:
    """A feasible plan drawn from ``rng``.

    Each parked step departs with ``departure_probability`` towards a
    uniformly drawn reachable station.  Falls back to staying at the start
    station when no draw passes the state machine.
    """
    n_i, n_k = paths.n_stations, paths.n_steps
    f = arrival_coefficients(paths)
    origin = int(rng.integers(n_i)) if start is None else start
    for _ in range(_RANDOM_ATTEMPTS):
        departures: List[Departure] = []
        station = origin
        k = 0
        while k < n_k:
            can_leave = max_transits is None or len(departures) < max_transits
            targets = [
                j for j in range(n_i) if j != station and paths.fits(station, j, k)
            ]
            if can_leave and targets and rng.random() < departure_probability:
                j = int(targets[int(rng.integers(len(targets)))])
                departures.append((k, station, j))
                k = paths.arrival_step(station, j, k)
                station = j
            else:
                k += 1
        plan = TransitPlan.from_departures(paths, origin, departures)
        if check_transit_feasibility(plan.m, plan.e, paths, f=f):
            return plan
    LOGGER.warning("No random journey passed the checks; keeping the device parked")
    return TransitPlan.stationary(n_i, n_k, origin)
