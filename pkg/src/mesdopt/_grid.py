# SPDX-License-Identifier: Apache-2.0

"""Balanced power flow, losses and linear sensitivities of the feeder.

Injections cross this module's interface in kW and kvar with generation
positive; everything inside runs per unit on ``grid.s_base_kva``.
Sensitivity matrices have ``2 * N_V`` columns ordered ``(P_b, Q_b)`` per bus
in grid order.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import logging
from pathlib import Path
from typing import Callable
from typing import List
from typing import NamedTuple
from typing import Optional
from typing import Sequence
from typing import Tuple
from typing import TypeVar
from typing import Union

import numpy as np
import pandas as pd

from ._options import GridLimits
from ._scenario import GridNetwork
from ._scenario import StationMap
from .exceptions import NonConvergenceError
from .exceptions import SingularJacobianError

LOGGER = logging.getLogger(__name__)

T = TypeVar("T")

MISMATCH_TOL = 1e-8
MAX_ITERATIONS = 20
_ZERO_FLOW_KVA = 1e-9


@dataclass(frozen=True)
class PowerFlowSolution:
    """A converged operating point.

    ``p_loss_kw`` is the slack balance against the specified injections;
    ``p_loss_lines_kw`` sums ``|I|^2 r`` over lines.  The two agree to the
    mismatch tolerance.
    """

    vm: np.ndarray
    va: np.ndarray
    s_from_kva: np.ndarray
    s_to_kva: np.ndarray
    p_loss_kw: float
    p_loss_lines_kw: float
    iterations: int
    mismatch: float

    @property
    def voltage(self) -> np.ndarray:
        return self.vm * np.exp(1j * self.va)

    @property
    def line_loading_kva(self) -> np.ndarray:
        return np.abs(self.s_from_kva)


@dataclass(frozen=True)
class StepSensitivity:
    """Linearization of one step around the no-storage forecast."""

    s_ploss: np.ndarray
    s_v: np.ndarray
    s_l: np.ndarray
    base: PowerFlowSolution

    @property
    def base_loss_kw(self) -> float:
        return self.base.p_loss_kw


@dataclass(frozen=True)
class SensitivityBundle:
    steps: Tuple[StepSensitivity, ...]
    dv_max: np.ndarray
    dv_min: np.ndarray
    dl_max: np.ndarray

    def __getitem__(self, step: int) -> StepSensitivity:
        return self.steps[step]

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def n_steps(self) -> int:
        return len(self.steps)

    @property
    def dl_min(self) -> np.ndarray:
        return -self.dl_max

    @property
    def baseline_losses_kw(self) -> np.ndarray:
        return np.array([s.base_loss_kw for s in self.steps])


class BaselineLosses(NamedTuple):
    per_step_kw: np.ndarray
    cost: float


def admittance_matrix(grid: GridNetwork) -> np.ndarray:
    n = grid.n_buses
    ybus = np.zeros((n, n), dtype=complex)
    for line in grid.lines:
        f, t = grid.bus_index(line.from_bus), grid.bus_index(line.to_bus)
        y = 1.0 / complex(line.r_pu, line.x_pu)
        ybus[f, f] += y
        ybus[t, t] += y
        ybus[f, t] -= y
        ybus[t, f] -= y
    return ybus


def _line_ends(grid: GridNetwork) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    f = np.array([grid.bus_index(line.from_bus) for line in grid.lines], dtype=int)
    t = np.array([grid.bus_index(line.to_bus) for line in grid.lines], dtype=int)
    y = np.array([1.0 / complex(line.r_pu, line.x_pu) for line in grid.lines])
    return f, t, y


def _ds_dv(ybus: np.ndarray, v: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Partials of bus power injections w.r.t. angle and magnitude."""
    current = ybus @ v
    v_norm = v / np.abs(v)
    ds_dvm = np.diag(v) @ np.conj(ybus @ np.diag(v_norm))
    ds_dvm = ds_dvm + np.diag(np.conj(current) * v_norm)
    ds_dva = 1j * np.diag(v) @ np.conj(np.diag(current) - ybus @ np.diag(v))
    return ds_dva, ds_dvm


def _jacobian(ds_dva: np.ndarray, ds_dvm: np.ndarray, pq: np.ndarray) -> np.ndarray:
    block = np.ix_(pq, pq)
    return np.block(
        [
            [ds_dva[block].real, ds_dvm[block].real],
            [ds_dva[block].imag, ds_dvm[block].imag],
        ]
    )


def run_power_flow(
    grid: GridNetwork,
    p_inj_kw: Sequence[float],
    q_inj_kvar: Sequence[float],
    *,
    tol: float = MISMATCH_TOL,
    max_iterations: int = MAX_ITERATIONS,
) -> PowerFlowSolution:
    """Newton-Raphson in polar form from a flat start.

    Args:
        grid: The feeder; the slack bus is held at 1.0 pu, angle 0.
        p_inj_kw: Active injection per bus, generation positive.  The slack
            entry is ignored.
        q_inj_kvar: Reactive injection per bus.

    Raises:
        NonConvergenceError: if the mismatch does not fall below ``tol``
            within ``max_iterations`` or the iteration diverges.
    """
    base = grid.s_base_kva
    p_pu = np.asarray(p_inj_kw, dtype=float) / base
    q_pu = np.asarray(q_inj_kvar, dtype=float) / base
    s_spec = p_pu + 1j * q_pu
    ybus = admittance_matrix(grid)
    slack = grid.slack_index
    pq = np.array([b for b in range(grid.n_buses) if b != slack], dtype=int)
    n_pq = pq.size
    vm = np.ones(grid.n_buses)
    va = np.zeros(grid.n_buses)

    def mismatch_of(v: np.ndarray) -> np.ndarray:
        s_calc = v * np.conj(ybus @ v)
        delta = s_spec[pq] - s_calc[pq]
        return np.concatenate([delta.real, delta.imag])

    v = vm * np.exp(1j * va)
    residual = mismatch_of(v)
    worst = float(np.max(np.abs(residual))) if n_pq else 0.0
    iterations = 0
    while worst > tol:
        if iterations >= max_iterations:
            raise NonConvergenceError(worst, iterations)
        ds_dva, ds_dvm = _ds_dv(ybus, v)
        try:
            step = np.linalg.solve(_jacobian(ds_dva, ds_dvm, pq), residual)
        except np.linalg.LinAlgError:
            raise NonConvergenceError(worst, iterations) from None
        va[pq] += step[:n_pq]
        vm[pq] += step[n_pq:]
        iterations += 1
        if not (np.all(np.isfinite(vm)) and np.all(vm > 0)):
            raise NonConvergenceError(float("nan"), iterations)
        v = vm * np.exp(1j * va)
        residual = mismatch_of(v)
        worst = float(np.max(np.abs(residual)))
        if not np.isfinite(worst):
            raise NonConvergenceError(worst, iterations)

    f, t, y = _line_ends(grid)
    current = y * (v[f] - v[t])
    s_from = v[f] * np.conj(current) * base
    s_to = -v[t] * np.conj(current) * base
    r = np.array([line.r_pu for line in grid.lines])
    s_slack = v[slack] * np.conj(ybus[slack] @ v)
    p_total = float(s_slack.real) + float(np.sum(s_spec[pq].real))
    solution = PowerFlowSolution(
        vm=vm,
        va=va,
        s_from_kva=s_from,
        s_to_kva=s_to,
        p_loss_kw=p_total * base,
        p_loss_lines_kw=float(np.sum(np.abs(current) ** 2 * r)) * base,
        iterations=iterations,
        mismatch=worst,
    )
    LOGGER.debug(
        "Power flow converged in %d iterations, loss %.6f kW",
        iterations,
        solution.p_loss_kw,
    )
    return solution


def forecast_injections(grid: GridNetwork, step: int) -> Tuple[np.ndarray, np.ndarray]:
    """Injections at ``step`` without any storage: minus the net load."""
    p_load, q_load = grid.load_arrays()
    return -p_load[:, step], -q_load[:, step]


def station_injection_vector(
    stations: StationMap,
    grid: GridNetwork,
    p_kw: np.ndarray,
    q_kvar: np.ndarray,
) -> np.ndarray:
    """Interleaved ``(P, Q)`` bus vector of station outputs.

    ``p_kw`` and ``q_kvar`` are per station, or per device and station, in
    which case devices are summed.
    """
    p = np.asarray(p_kw, dtype=float)
    q = np.asarray(q_kvar, dtype=float)
    if p.ndim == 2:
        p = p.sum(axis=0)
        q = q.sum(axis=0)
    vector = np.zeros(2 * grid.n_buses)
    buses = np.array([grid.bus_index(b) for b in stations.buses], dtype=int)
    np.add.at(vector, 2 * buses, p)
    np.add.at(vector, 2 * buses + 1, q)
    return vector


def _line_flow_partials(
    grid: GridNetwork, v: np.ndarray, s_from_kva: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """Partials of the from-end ``|S|`` (pu) w.r.t. angle and magnitude."""
    n = grid.n_buses
    f, t, y = _line_ends(grid)
    n_lines = f.size
    dl_dva = np.zeros((n_lines, n))
    dl_dvm = np.zeros((n_lines, n))
    s_pu = s_from_kva / grid.s_base_kva
    for line in range(n_lines):
        a, b, yc = f[line], t[line], np.conj(y[line])
        cross = yc * v[a] * np.conj(v[b])
        ds = {
            ("va", a): -1j * cross,
            ("va", b): 1j * cross,
            ("vm", a): 2 * yc * abs(v[a]) - cross / abs(v[a]),
            ("vm", b): -cross / abs(v[b]),
        }
        magnitude = abs(s_pu[line])
        for (kind, bus), d in ds.items():
            if abs(s_from_kva[line]) < _ZERO_FLOW_KVA:
                value = d.real
            else:
                s = s_pu[line]
                value = (s.real * d.real + s.imag * d.imag) / magnitude
            target = dl_dva if kind == "va" else dl_dvm
            target[line, bus] += value
    return dl_dva, dl_dvm


def linearize(grid: GridNetwork, base: PowerFlowSolution) -> StepSensitivity:
    """Sensitivities of loss, voltages and line flows at ``base``.

    Raises:
        SingularJacobianError: if the power-flow Jacobian cannot be inverted.
    """
    n = grid.n_buses
    slack = grid.slack_index
    pq = np.array([b for b in range(n) if b != slack], dtype=int)
    n_pq = pq.size
    v = base.voltage
    ybus = admittance_matrix(grid)
    ds_dva, ds_dvm = _ds_dv(ybus, v)
    jac = _jacobian(ds_dva, ds_dvm, pq)
    try:
        inverse = np.linalg.inv(jac)
    except np.linalg.LinAlgError:
        raise SingularJacobianError("power-flow Jacobian is singular") from None
    if not np.all(np.isfinite(inverse)):
        raise SingularJacobianError("power-flow Jacobian is singular")

    # state = [va_pq, vm_pq]; injections = [p_pq, q_pq] (pu)
    columns = np.concatenate([2 * pq, 2 * pq + 1])

    def spread(rows: np.ndarray) -> np.ndarray:
        out = np.zeros((rows.shape[0], 2 * n))
        out[:, columns] = rows
        return out

    s_base = grid.s_base_kva
    d_vm = inverse[n_pq:, :]
    s_v = np.zeros((n, 2 * n))
    s_v[pq] = spread(d_vm) / s_base

    slack_partials = np.concatenate([ds_dva[slack, pq].real, ds_dvm[slack, pq].real])
    s_ploss = spread((slack_partials @ inverse)[np.newaxis, :])[0]
    s_ploss[2 * pq] += 1.0

    dl_dva, dl_dvm = _line_flow_partials(grid, v, base.s_from_kva)
    dl_state = np.hstack([dl_dva[:, pq], dl_dvm[:, pq]])
    s_l = spread(dl_state @ inverse)
    return StepSensitivity(s_ploss=s_ploss, s_v=s_v, s_l=s_l, base=base)


def step_sensitivity(grid: GridNetwork, step: int) -> StepSensitivity:
    p, q = forecast_injections(grid, step)
    return linearize(grid, run_power_flow(grid, p, q))


def incremental_limits(
    grid: GridNetwork, limits: GridLimits
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-bus voltage change bounds (pu) and per-line flow change bound (kVA)."""
    dv_max = np.full(grid.n_buses, limits.effective_dv_max)
    dv_min = np.full(grid.n_buses, limits.effective_dv_min)
    ratings = np.array([line.rating_kva for line in grid.lines])
    dl_max = limits.effective_dl_max_frac * ratings
    return dv_max, dv_min, dl_max


def _map_steps(function: Callable[[int], T], n_steps: int, threads: int) -> List[T]:
    if threads > 1 and n_steps > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(function, range(n_steps)))
    return [function(k) for k in range(n_steps)]


def compute_sensitivities(
    grid: GridNetwork, limits: GridLimits, *, threads: int = 1
) -> SensitivityBundle:
    """Linearize every step around its no-storage forecast."""
    steps = _map_steps(lambda k: step_sensitivity(grid, k), grid.n_steps, threads)
    dv_max, dv_min, dl_max = incremental_limits(grid, limits)
    LOGGER.info(
        "Sensitivities for %d steps on %d buses and %d lines",
        len(steps),
        grid.n_buses,
        grid.n_lines,
    )
    return SensitivityBundle(tuple(steps), dv_max, dv_min, dl_max)


def baseline_losses(
    grid: GridNetwork,
    price: Sequence[float],
    t_unit: float,
    *,
    threads: int = 1,
) -> BaselineLosses:
    """Per-step losses without storage and their cost over the horizon."""

    def loss_at(step: int) -> float:
        p, q = forecast_injections(grid, step)
        return run_power_flow(grid, p, q).p_loss_kw

    per_step = np.array(_map_steps(loss_at, grid.n_steps, threads))
    cost = float(np.sum(np.asarray(price, dtype=float) * per_step) * t_unit)
    return BaselineLosses(per_step, cost)


def sensitivity_frame(bundle: SensitivityBundle, grid: GridNetwork) -> pd.DataFrame:
    """Long-form table of every nonzero sensitivity entry."""
    columns = [f"{kind}_{bus}" for bus in grid.bus_ids for kind in ("P", "Q")]
    frames = []
    for step, entry in enumerate(bundle.steps):
        for quantity, matrix, labels in (
            ("ploss", entry.s_ploss[np.newaxis, :], ["loss"]),
            ("v", entry.s_v, [str(b) for b in grid.bus_ids]),
            ("l", entry.s_l, [f"{ln.from_bus}-{ln.to_bus}" for ln in grid.lines]),
        ):
            rows, cols = np.nonzero(matrix)
            frames.append(
                pd.DataFrame(
                    {
                        "step": step,
                        "quantity": quantity,
                        "row": [labels[r] for r in rows],
                        "column": [columns[c] for c in cols],
                        "value": matrix[rows, cols],
                    }
                )
            )
    if not frames:
        return pd.DataFrame(columns=["step", "quantity", "row", "column", "value"])
    return pd.concat(frames, ignore_index=True)


def dump_sensitivities(
    bundle: SensitivityBundle, grid: GridNetwork, path: Union[str, Path]
) -> Path:
    path = Path(path)
    sensitivity_frame(bundle, grid).to_csv(path, index=False, float_format="%.17g")
    LOGGER.info("Dumped sensitivities to %s", path)
    return path


def voltage_profile(
    grid: GridNetwork,
    step: int,
    extra_injection: Optional[np.ndarray] = None,
) -> PowerFlowSolution:
    """AC operating point at ``step`` with an interleaved extra injection."""
    p, q = forecast_injections(grid, step)
    if extra_injection is not None:
        p = p + extra_injection[0::2]
        q = q + extra_injection[1::2]
    return run_power_flow(grid, p, q)
