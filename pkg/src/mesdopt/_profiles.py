# SPDX-License-Identifier: Apache-2.0

"""Time-series profiles: CSV reading and previous-value resampling."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Sequence
from typing import Tuple

import numpy as np
import pandas as pd

from .exceptions import HorizonCoverageError
from .exceptions import ScenarioParseError
from .exceptions import ScenarioValidationError

LOGGER = logging.getLogger(__name__)

CSV_COLUMNS = ["minutes", "value"]

_EPS_MINUTES = 1e-9


def read_profile_csv(path: Path) -> Tuple[np.ndarray, np.ndarray]:
    """Read a ``minutes,value`` CSV file.

    Raises:
        ScenarioParseError: if the file is missing, lacks the header row,
            or holds a non-numeric cell (the message names the data row).
    """
    try:
        frame = pd.read_csv(path, dtype=str, skipinitialspace=True)
    except FileNotFoundError:
        raise ScenarioParseError(f"profile file {path} does not exist")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise ScenarioParseError(f"cannot parse profile file {path}: {e}")

    if [c.strip() for c in frame.columns] != CSV_COLUMNS:
        raise ScenarioParseError(
            f"{path}: header must be {','.join(CSV_COLUMNS)},"
            f" got {','.join(map(str, frame.columns))}"
        )
    frame.columns = CSV_COLUMNS
    numeric = frame.apply(pd.to_numeric, errors="coerce")
    bad = numeric.isna().any(axis=1) | ~np.isfinite(numeric).all(axis=1)
    if bad.any():
        # +2: one for the header, one for 1-based numbering
        row = int(np.flatnonzero(bad.to_numpy())[0]) + 2
        raise ScenarioParseError(f"{path}: row {row} is not a pair of numbers")
    return (
        numeric["minutes"].to_numpy(dtype=float),
        numeric["value"].to_numpy(dtype=float),
    )


def step_starts(t_unit: float, n_steps: int) -> np.ndarray:
    """Start of every scheduling step, in minutes from midnight."""
    return np.arange(n_steps, dtype=float) * (t_unit * 60.0)


def resample_profile(
    minutes: Sequence[float],
    values: Sequence[float],
    t_unit: float,
    n_steps: int,
    *,
    field: str = "profile",
) -> np.ndarray:
    """Resample a timestamped series onto the scheduling steps.

    The value of step ``k`` is the last sample taken at or before the start
    of that step (previous-value hold).  The final sample is taken to last
    as long as the spacing before it.

    Args:
        minutes: sample timestamps, minutes from midnight, strictly increasing
        values: sample values
        t_unit: step length in hours
        n_steps: number of scheduling steps
        field: name used in error messages

    Raises:
        ScenarioValidationError: if the timestamps are not strictly increasing
            or the lengths differ.
        HorizonCoverageError: if the series starts after midnight or ends
            before the last step.
    """
    t = np.asarray(minutes, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.ndim != 1 or t.shape != v.shape or t.size == 0:
        raise ScenarioValidationError(
            field, "minutes and values must be non-empty and of equal length"
        )
    if not (np.isfinite(t).all() and np.isfinite(v).all()):
        raise ScenarioValidationError(field, "samples must be finite")
    if np.any(np.diff(t) <= 0):
        raise ScenarioValidationError(field, "timestamps must be strictly increasing")
    if t[0] > _EPS_MINUTES:
        raise HorizonCoverageError(
            field, f"series starts at minute {t[0]:g}, after the first step"
        )
    if t.size < 2:
        raise HorizonCoverageError(
            field, "a timestamped series needs at least two samples"
        )

    horizon = n_steps * t_unit * 60.0
    covered_until = t[-1] + (t[-1] - t[-2])
    if covered_until < horizon - _EPS_MINUTES:
        raise HorizonCoverageError(
            field,
            f"series covers {covered_until:g} min but the horizon is"
            f" {horizon:g} min",
        )

    idx = np.searchsorted(t, step_starts(t_unit, n_steps) + _EPS_MINUTES, "right")
    return v[idx - 1]


def expand_inline(values: Sequence[float], n_steps: int, *, field: str) -> np.ndarray:
    """Spread a bare list of values evenly over the horizon.

    A list of length ``n`` with ``n_steps`` divisible by ``n`` holds each
    value for ``n_steps / n`` steps; a single value is a constant profile.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ScenarioValidationError(field, "inline profile must be a non-empty list")
    if not np.isfinite(v).all():
        raise ScenarioValidationError(field, "samples must be finite")
    if n_steps % v.size == 0:
        return np.repeat(v, n_steps // v.size)
    if v.size % n_steps == 0:
        # finer than the steps: previous-value hold keeps every n-th sample
        return v[:: v.size // n_steps].copy()
    raise ScenarioValidationError(
        field,
        f"inline profile of length {v.size} does not divide the {n_steps}-step"
        " horizon; give explicit minutes",
    )
