# SPDX-License-Identifier: Apache-2.0

"""Activity-based bound tightening for branch-and-bound nodes."""

from __future__ import annotations

import logging
from typing import Optional
from typing import Tuple

import numpy as np

from ._milp import ModelArrays

LOGGER = logging.getLogger(__name__)

FEASIBILITY_TOL = 1e-9
INTEGRALITY_TOL = 1e-6
MIN_IMPROVEMENT = 1e-6
MAX_ROUNDS = 10

Bounds = Tuple[np.ndarray, np.ndarray]


class BoundPropagator:
    """Tightens variable bounds implied by the rows of one model.

    For a row ``l <= sum a_j x_j <= u`` every variable is bounded by the
    row side minus the extreme activity of the other terms.  Binary bounds
    are rounded, so fixing one binary can fix others through shared rows.
    Continuous bounds are tightened only by more than `MIN_IMPROVEMENT`
    relative to their magnitude, which keeps the rounds finite.
    """

    def __init__(self, arrays: ModelArrays) -> None:
        coo = arrays.a.tocoo()
        self.m, self.n = arrays.a.shape
        nonzero = coo.data != 0
        self.rows = coo.row[nonzero]
        self.cols = coo.col[nonzero]
        self.values = coo.data[nonzero].astype(float)
        self.positive = self.values > 0
        self.row_lower = arrays.row_lower
        self.row_upper = arrays.row_upper
        self.binary = np.asarray(arrays.binary, dtype=bool)

    def tighten(
        self, lower: np.ndarray, upper: np.ndarray, max_rounds: int = MAX_ROUNDS
    ) -> Optional[Bounds]:
        """Tightened copies of ``lower``/``upper``, or None if infeasible."""
        lower = np.array(lower, dtype=float)
        upper = np.array(upper, dtype=float)
        for _ in range(max_rounds):
            if np.any(lower > upper + FEASIBILITY_TOL * _magnitude(upper)):
                return None
            step = self._round(lower, upper)
            if step is None:
                return None
            new_lower, new_upper = step
            changed = (new_lower > lower) | (new_upper < upper)
            if not changed.any():
                break
            lower = np.maximum(lower, new_lower)
            upper = np.minimum(upper, new_upper)
        if np.any(lower > upper + FEASIBILITY_TOL * _magnitude(upper)):
            return None
        # a continuous pair crossed within tolerance collapses to one value
        upper = np.maximum(upper, lower)
        return lower, upper

    def _round(self, lower: np.ndarray, upper: np.ndarray) -> Optional[Bounds]:
        rows, cols, v = self.rows, self.cols, self.values
        lo = lower[cols]
        hi = upper[cols]
        with np.errstate(invalid="ignore"):
            min_c = np.where(self.positive, v * lo, v * hi)
            max_c = np.where(self.positive, v * hi, v * lo)
        min_inf = ~np.isfinite(min_c)
        max_inf = ~np.isfinite(max_c)
        min_fin = np.where(min_inf, 0.0, min_c)
        max_fin = np.where(max_inf, 0.0, max_c)
        row_min = np.bincount(rows, weights=min_fin, minlength=self.m)
        row_max = np.bincount(rows, weights=max_fin, minlength=self.m)
        n_min_inf = np.bincount(rows, weights=min_inf.astype(float), minlength=self.m)
        n_max_inf = np.bincount(rows, weights=max_inf.astype(float), minlength=self.m)
        # magnitude of the terms, for tolerances that follow the row scale
        row_size = np.bincount(
            rows, weights=np.abs(min_fin) + np.abs(max_fin), minlength=self.m
        )
        row_tol = FEASIBILITY_TOL * (1.0 + row_size)

        if np.any(
            (n_min_inf == 0) & (row_min > self.row_upper + row_tol)
        ) or np.any((n_max_inf == 0) & (row_max < self.row_lower - row_tol)):
            return None

        # activity of the other terms of each row, per nonzero
        rest_min = np.where(
            min_inf,
            np.where(n_min_inf[rows] == 1, row_min[rows], -np.inf),
            np.where(n_min_inf[rows] == 0, row_min[rows] - min_fin, -np.inf),
        )
        rest_max = np.where(
            max_inf,
            np.where(n_max_inf[rows] == 1, row_max[rows], np.inf),
            np.where(n_max_inf[rows] == 0, row_max[rows] - max_fin, np.inf),
        )
        slack = row_tol[rows] / np.abs(v)

        new_lower = np.full(self.n, -np.inf)
        new_upper = np.full(self.n, np.inf)
        with np.errstate(invalid="ignore", over="ignore"):
            from_upper = (self.row_upper[rows] - rest_min) / v
            from_lower = (self.row_lower[rows] - rest_max) / v
        ok = np.isfinite(from_upper)
        up = ok & self.positive
        np.minimum.at(new_upper, cols[up], from_upper[up] + slack[up])
        down = ok & ~self.positive
        np.maximum.at(new_lower, cols[down], from_upper[down] - slack[down])
        ok = np.isfinite(from_lower)
        down = ok & self.positive
        np.maximum.at(new_lower, cols[down], from_lower[down] - slack[down])
        up = ok & ~self.positive
        np.minimum.at(new_upper, cols[up], from_lower[up] + slack[up])

        binary = self.binary
        new_lower[binary] = np.ceil(new_lower[binary] - INTEGRALITY_TOL)
        new_upper[binary] = np.floor(new_upper[binary] + INTEGRALITY_TOL)
        continuous = ~binary
        margin = MIN_IMPROVEMENT * _magnitude(lower)
        weak = continuous & (new_lower <= lower + margin)
        new_lower[weak] = lower[weak]
        margin = MIN_IMPROVEMENT * _magnitude(upper)
        weak = continuous & (new_upper >= upper - margin)
        new_upper[weak] = upper[weak]
        return new_lower, new_upper


def _magnitude(bounds: np.ndarray) -> np.ndarray:
    return 1.0 + np.abs(np.where(np.isfinite(bounds), bounds, 0.0))
