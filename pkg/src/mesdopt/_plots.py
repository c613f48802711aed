# SPDX-License-Identifier: Apache-2.0

"""Charts of a schedule, drawn with matplotlib and saved as SVG."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import List
from typing import Optional
from typing import Sequence
from typing import Tuple
from typing import Union

import matplotlib
from matplotlib.axes import Axes
from matplotlib.figure import Figure
from matplotlib.patches import Patch
import numpy as np

from ._schedule import Schedule

LOGGER = logging.getLogger(__name__)

PALETTE = (
    "#1f77b4",
    "#ff7f0e",
    "#2ca02c",
    "#d62728",
    "#9467bd",
    "#8c564b",
    "#e377c2",
    "#7f7f7f",
    "#bcbd22",
    "#17becf",
)
TRANSIT_COLOR = "#dddddd"

REPORT_FILES = ("positions.svg", "power.svg", "soc.svg", "losses.svg")

FIGSIZE = (8.0, 3.0)


def station_color(station: int) -> str:
    """Fill of a station index; -1 (travelling) is grey."""
    if station < 0:
        return TRANSIT_COLOR
    return PALETTE[station % len(PALETTE)]


def position_segments(row: Sequence[int]) -> List[Tuple[int, int, int]]:
    """Runs of equal position as ``(start step, length, station index)``."""
    segments: List[Tuple[int, int, int]] = []
    for k, station in enumerate(int(value) for value in row):
        if segments and segments[-1][2] == station:
            start, length, _ = segments[-1]
            segments[-1] = (start, length + 1, station)
        else:
            segments.append((k, 1, station))
    return segments


def _step_axes(title: str, ylabel: str, n_steps: int) -> Tuple[Figure, Axes]:
    fig = Figure(figsize=FIGSIZE, layout="constrained")
    ax = fig.subplots()
    ax.set_title(title)
    ax.set_xlabel("step")
    ax.set_ylabel(ylabel)
    ax.set_xlim(0, max(n_steps, 1))
    ax.grid(axis="x", alpha=0.3)
    return fig, ax


def _step_line(
    ax: Axes, values: np.ndarray, label: str, color: str, linestyle: str = "-"
) -> None:
    """Draw each value across its own step interval."""
    values = np.asarray(values, dtype=float)
    if not values.size:
        return
    x = np.arange(values.size + 1)
    y = np.append(values, values[-1])
    ax.step(x, y, where="post", label=label, color=color, linestyle=linestyle)


def _legend(ax: Axes) -> None:
    ax.legend(loc="upper left", bbox_to_anchor=(1.01, 1.0), fontsize="small")


def _finish_lines(ax: Axes) -> None:
    if ax.lines:
        ax.axhline(0.0, color="#999999", linestyle="--", linewidth=0.8)
        _legend(ax)


def position_chart(schedule: Schedule) -> Figure:
    """Station each device is connected to, one band per device."""
    height = 1.0 + 0.5 * max(schedule.n_devices, 1)
    fig = Figure(figsize=(8.0, height), layout="constrained")
    ax = fig.subplots()
    ax.set_title("Connected station")
    ax.set_xlabel("step")
    ax.set_xlim(0, max(schedule.n_steps, 1))
    for s in range(schedule.n_devices):
        segments = position_segments(schedule.positions[s])
        ax.broken_barh(
            [(start, length) for start, length, _ in segments],
            (s - 0.4, 0.8),
            facecolors=[station_color(station) for _, _, station in segments],
        )
    ax.set_yticks(range(schedule.n_devices))
    ax.set_yticklabels(schedule.device_names)
    ax.invert_yaxis()
    handles = [Patch(color=TRANSIT_COLOR, label="transit")] + [
        Patch(color=station_color(i), label=str(sid))
        for i, sid in enumerate(schedule.station_ids)
    ]
    ax.legend(
        handles=handles, loc="upper left", bbox_to_anchor=(1.01, 1.0), fontsize="small"
    )
    return fig


def power_chart(schedule: Schedule) -> Figure:
    p, q = schedule.device_power()
    fig, ax = _step_axes("Output power", "kW / kvar", schedule.n_steps)
    for s, name in enumerate(schedule.device_names):
        color = PALETTE[s % len(PALETTE)]
        _step_line(ax, p[s], f"{name} P", color)
        _step_line(ax, q[s], f"{name} Q", color, linestyle=":")
    _finish_lines(ax)
    return fig


def soc_chart(schedule: Schedule) -> Figure:
    fig, ax = _step_axes("State of charge", "p.u.", schedule.n_steps)
    for s, name in enumerate(schedule.device_names):
        _step_line(ax, schedule.soc[s], name, PALETTE[s % len(PALETTE)])
    ax.set_ylim(0.0, 1.0)
    if ax.lines:
        _legend(ax)
    return fig


def loss_chart(schedule: Schedule, baseline_kw: Optional[np.ndarray] = None) -> Figure:
    """Linearized loss change; absolute losses too when a baseline is given."""
    fig, ax = _step_axes("Grid losses", "kW", schedule.n_steps)
    dploss = np.asarray(schedule.dploss, dtype=float)
    _step_line(ax, dploss, "loss change", PALETTE[0])
    if baseline_kw is not None:
        baseline_kw = np.asarray(baseline_kw, dtype=float)
        _step_line(ax, baseline_kw, "baseline", PALETTE[1])
        _step_line(ax, baseline_kw + dploss, "with storage", PALETTE[2])
    _finish_lines(ax)
    return fig


def write_report(
    schedule: Schedule,
    directory: Union[str, Path],
    baseline_kw: Optional[np.ndarray] = None,
) -> List[Path]:
    """Write the four charts of ``schedule`` into ``directory`` as SVG."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    figures = (
        position_chart(schedule),
        power_chart(schedule),
        soc_chart(schedule),
        loss_chart(schedule, baseline_kw),
    )
    written = []
    # fixed id salt and no date: reruns are byte-identical
    with matplotlib.rc_context({"svg.hashsalt": "mesdopt"}):
        for name, fig in zip(REPORT_FILES, figures):
            path = directory / name
            fig.savefig(path, format="svg", metadata={"Date": None})
            written.append(path)
    LOGGER.info("Wrote %d charts to %s", len(written), directory)
    return written
