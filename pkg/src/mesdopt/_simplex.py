# SPDX-License-Identifier: Apache-2.0

"""Bounded-variable revised simplex for LP relaxations.

Rows ``row_lower <= A x <= row_upper`` are written as ``A x - s = 0`` with
one bounded logical variable ``s`` per row, so every row type is handled by
variable bounds alone.  Phase 1 minimizes the sum of bound violations of the
basic variables (no artificial columns), phase 2 the objective; the solver
switches between them whenever the basis becomes (in)feasible.

Rows and columns are equilibrated by powers of two before solving.  The
basis is held as a sparse LU factorization (`scipy.sparse.linalg.splu`)
followed by product-form eta columns, and refactorized every
`REFACTOR_EVERY` pivots.
"""

from __future__ import annotations

from dataclasses import dataclass
import logging
import math
import time
from typing import List
from typing import Optional
from typing import Tuple

import numpy as np
import scipy.optimize
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator
from scipy.sparse.linalg import SuperLU
from scipy.sparse.linalg import onenormest
from scipy.sparse.linalg import splu

from ._enums import SolveStatus
from ._milp import MilpModel
from ._milp import ModelArrays
from .exceptions import NumericalError
from .exceptions import SolverError

LOGGER = logging.getLogger(__name__)

FEASIBILITY_TOL = 1e-9
OPTIMALITY_TOL = 1e-9
PIVOT_TOL = 1e-7
HARRIS_TOL = 5e-10
REFACTOR_EVERY = 50
BLAND_AFTER_DEGENERATE = 50


@dataclass(frozen=True)
class WarmStart:
    """A simplex basis: basic column indices plus nonbasic bound positions.

    Column indices ``0..n-1`` are structural variables, ``n..n+m-1`` the
    logical variables of the rows.
    """

    basis: Tuple[int, ...]
    at_upper: Tuple[bool, ...]


@dataclass(frozen=True)
class LpSolution:
    status: SolveStatus
    x: Optional[np.ndarray]
    objective: float
    reduced_costs: Optional[np.ndarray] = None
    duals: Optional[np.ndarray] = None
    iterations: int = 0
    basis: Optional[WarmStart] = None


class _Factor:
    """LU factors of a basis matrix and the eta columns of later pivots."""

    def __init__(self, matrix: sp.csc_matrix) -> None:
        self.size = matrix.shape[0]
        self.etas: List[Tuple[int, np.ndarray]] = []
        self.lu: Optional[SuperLU]
        if not self.size:
            self.lu = None
            return
        try:
            self.lu = splu(matrix)
        except RuntimeError:
            raise NumericalError("singular simplex basis", math.inf)

    def ftran(self, column: np.ndarray) -> np.ndarray:
        """``B^-1 column``"""
        if self.lu is None:
            return np.zeros(0)
        y = self.lu.solve(np.asarray(column, dtype=float))
        for r, alpha in self.etas:
            yr = y[r] / alpha[r]
            y -= alpha * yr
            y[r] = yr
        return y

    def btran(self, row: np.ndarray) -> np.ndarray:
        """``row B^-1``"""
        if self.lu is None:
            return np.zeros(0)
        w = np.array(row, dtype=float)
        for r, alpha in reversed(self.etas):
            w[r] = (w[r] - (w @ alpha - w[r] * alpha[r])) / alpha[r]
        return self.lu.solve(w, trans="T")

    def update(self, r: int, alpha: np.ndarray) -> None:
        self.etas.append((r, alpha.copy()))


def _power_of_two(values: np.ndarray) -> np.ndarray:
    scale = np.ones_like(values, dtype=float)
    positive = values > 0
    scale[positive] = np.exp2(-np.round(np.log2(values[positive])))
    return scale


def _equilibrate(a: sp.csc_matrix) -> Tuple[np.ndarray, np.ndarray]:
    """Row then column scale factors bringing every max entry near 1."""
    m, n = a.shape
    if not a.nnz:
        return np.ones(m), np.ones(n)
    magnitude = abs(a)
    row_scale = _power_of_two(magnitude.max(axis=1).toarray().ravel())
    scaled = sp.diags(row_scale) @ magnitude
    col_scale = _power_of_two(scaled.max(axis=0).toarray().ravel())
    return row_scale, col_scale


class _Simplex:
    def __init__(
        self,
        arrays: ModelArrays,
        lower: np.ndarray,
        upper: np.ndarray,
    ) -> None:
        a = sp.csc_matrix(arrays.a, dtype=float)
        self.m, self.n = a.shape
        self.row_scale, self.col_scale = _equilibrate(a)
        if a.nnz:
            a = sp.diags(self.row_scale) @ a @ sp.diags(self.col_scale)
        if self.m:
            self.full = sp.hstack(
                [a, -sp.identity(self.m, format="csc")], format="csc"
            )
        else:
            self.full = sp.csc_matrix((0, self.n))
        self.c = np.concatenate([arrays.c * self.col_scale, np.zeros(self.m)])
        self.lo = np.concatenate(
            [lower / self.col_scale, arrays.row_lower * self.row_scale]
        )
        self.hi = np.concatenate(
            [upper / self.col_scale, arrays.row_upper * self.row_scale]
        )
        self.x = np.zeros(self.n + self.m)
        self.basis = np.arange(self.n, self.n + self.m)
        self.is_basic = np.zeros(self.n + self.m, dtype=bool)
        self.factor = _Factor(sp.identity(self.m, format="csc"))
        self.iterations = 0
        self.duals: Optional[np.ndarray] = None
        self.reduced_costs: Optional[np.ndarray] = None

    # -- basis bookkeeping ------------------------------------------------

    def column(self, j: int) -> np.ndarray:
        return self.full[:, j].toarray().ravel()

    def basis_matrix(self) -> sp.csc_matrix:
        return self.full[:, self.basis].tocsc()

    def _nonbasic_value(self, j: int, prefer_upper: bool) -> float:
        lo, hi = self.lo[j], self.hi[j]
        if prefer_upper and math.isfinite(hi):
            return hi
        if math.isfinite(lo):
            return lo
        if math.isfinite(hi):
            return hi
        return 0.0

    def start(self, warm: Optional[WarmStart]) -> None:
        if warm is not None and len(warm.basis) == self.m and len(
            warm.at_upper
        ) == self.n + self.m:
            self.basis = np.array(warm.basis, dtype=np.int64)
            at_upper = warm.at_upper
        else:
            self.basis = np.arange(self.n, self.n + self.m)
            at_upper = (False,) * (self.n + self.m)
        self.is_basic[:] = False
        self.is_basic[self.basis] = True
        for j in np.flatnonzero(~self.is_basic):
            self.x[j] = self._nonbasic_value(j, at_upper[j])
        try:
            self.refactor()
        except NumericalError:
            if warm is None:
                raise
            LOGGER.debug("Warm start basis is singular; starting cold")
            self.start(None)

    def refactor(self) -> None:
        self.factor = _Factor(self.basis_matrix())
        nonbasic = np.where(self.is_basic, 0.0, self.x)
        xb = -self.factor.ftran(self.full @ nonbasic)
        if not np.isfinite(xb).all():
            raise NumericalError(
                "non-finite basic solution", _condition(self.basis_matrix())
            )
        self.x[self.basis] = xb

    # -- iterations -------------------------------------------------------

    def run(self, max_iterations: int, deadline: Optional[float] = None) -> SolveStatus:
        degenerate = 0
        phase = 0
        while True:
            if self.iterations >= max_iterations:
                raise NumericalError(
                    f"simplex did not terminate in {max_iterations} iterations",
                    _condition(self.basis_matrix()),
                )
            if deadline is not None and time.perf_counter() >= deadline:
                LOGGER.debug("Simplex stopped by the deadline")
                return SolveStatus.TIME_LIMIT
            if len(self.factor.etas) >= REFACTOR_EVERY:
                self.refactor()

            xb = self.x[self.basis]
            lb = self.lo[self.basis]
            ub = self.hi[self.basis]
            below = xb < lb - FEASIBILITY_TOL
            above = xb > ub + FEASIBILITY_TOL
            infeasible = below.any() or above.any()
            if infeasible != (phase == 1):
                phase = 1 if infeasible else 2
                LOGGER.debug("Simplex phase %d at iteration %d", phase, self.iterations)

            if infeasible:
                cb = np.where(below, -1.0, np.where(above, 1.0, 0.0))
                cost = np.zeros(self.n + self.m)
            else:
                cb = self.c[self.basis]
                cost = self.c
            pi = self.factor.btran(cb)
            d = cost - self.full.T @ pi
            d[self.basis] = 0.0

            can_increase = (self.x < self.hi - FEASIBILITY_TOL) & ~self.is_basic
            can_decrease = (self.x > self.lo + FEASIBILITY_TOL) & ~self.is_basic
            attractive = (can_increase & (d < -OPTIMALITY_TOL)) | (
                can_decrease & (d > OPTIMALITY_TOL)
            )
            candidates = np.flatnonzero(attractive)
            if candidates.size == 0:
                if infeasible:
                    return SolveStatus.INFEASIBLE
                self.duals = pi * self.row_scale
                self.reduced_costs = d[: self.n] / self.col_scale
                return SolveStatus.OPTIMAL

            bland = degenerate >= BLAND_AFTER_DEGENERATE
            if bland:
                q = int(candidates[0])
            else:
                q = int(candidates[np.argmax(np.abs(d[candidates]))])
            direction = 1.0 if d[q] < 0 else -1.0

            alpha = self.factor.ftran(self.column(q))
            rate = -direction * alpha
            step_to_bound = (
                self.hi[q] - self.x[q] if direction > 0 else self.x[q] - self.lo[q]
            )

            r = -1
            t_basic = math.inf
            if self.m:
                limits = _ratios(xb, lb, ub, rate, below, above, 0.0)
                if bland:
                    t_basic = float(limits.min())
                    ties = np.flatnonzero(limits <= t_basic + 1e-12)
                    r = int(ties[np.argmin(self.basis[ties])])
                else:
                    # two-pass ratio test: largest pivot within the relaxed step
                    relaxed = _ratios(xb, lb, ub, rate, below, above, HARRIS_TOL)
                    ties = np.flatnonzero(limits <= relaxed.min())
                    r = int(ties[np.argmax(np.abs(rate[ties]))])
                    t_basic = float(limits[r])

            if step_to_bound <= t_basic:
                if not math.isfinite(step_to_bound):
                    if infeasible:
                        raise NumericalError("unbounded ray during phase 1")
                    return SolveStatus.UNBOUNDED
                # bound flip, basis unchanged
                t = step_to_bound
                self.x[q] += direction * t
                self.x[self.basis] = xb + rate * t
            else:
                t = t_basic
                leaving = int(self.basis[r])
                self.x[q] += direction * t
                self.x[self.basis] = xb + rate * t
                # the leaving variable sits exactly on the bound it reached
                if below[r]:
                    self.x[leaving] = lb[r]
                elif above[r]:
                    self.x[leaving] = ub[r]
                else:
                    self.x[leaving] = ub[r] if rate[r] > 0 else lb[r]

                self.factor.update(r, alpha)
                self.basis[r] = q
                self.is_basic[leaving] = False
                self.is_basic[q] = True

            degenerate = degenerate + 1 if t <= 1e-12 else 0
            self.iterations += 1

    def solution(self) -> np.ndarray:
        return self.x[: self.n] * self.col_scale

    def warm_start(self) -> WarmStart:
        at_upper = tuple(
            bool(
                not self.is_basic[j]
                and self.x[j] == self.hi[j]
                and self.x[j] != self.lo[j]
            )
            for j in range(self.n + self.m)
        )
        return WarmStart(tuple(int(j) for j in self.basis), at_upper)


def _ratios(
    xb: np.ndarray,
    lb: np.ndarray,
    ub: np.ndarray,
    rate: np.ndarray,
    below: np.ndarray,
    above: np.ndarray,
    slack: float,
) -> np.ndarray:
    """Step at which each basic variable reaches its blocking bound."""
    limits = np.full(rate.size, np.inf)
    inc = rate > PIVOT_TOL
    dec = rate < -PIVOT_TOL
    inside = ~below & ~above
    # an infeasible basic leaves when it reaches the violated bound
    mask = inc & below
    limits[mask] = (lb[mask] - xb[mask] + slack) / rate[mask]
    mask = inc & inside & np.isfinite(ub)
    limits[mask] = np.maximum(ub[mask] - xb[mask] + slack, 0.0) / rate[mask]
    mask = dec & above
    limits[mask] = (xb[mask] - ub[mask] + slack) / -rate[mask]
    mask = dec & inside & np.isfinite(lb)
    limits[mask] = np.maximum(xb[mask] - lb[mask] + slack, 0.0) / -rate[mask]
    return limits


def _condition(matrix: sp.spmatrix) -> Optional[float]:
    """1-norm condition estimate of a square sparse matrix."""
    if matrix.shape[0] == 0:
        return None
    try:
        lu = splu(sp.csc_matrix(matrix))
    except RuntimeError:
        return math.inf
    inverse = LinearOperator(
        matrix.shape,
        matvec=lu.solve,
        rmatvec=lambda v: lu.solve(v, trans="T"),
        dtype=float,
    )
    return float(onenormest(matrix) * onenormest(inverse))


def solve_lp(
    model: MilpModel,
    *,
    lower: Optional[np.ndarray] = None,
    upper: Optional[np.ndarray] = None,
    warm_start: Optional[WarmStart] = None,
    method: str = "simplex",
    max_iterations: Optional[int] = None,
    time_limit: Optional[float] = None,
) -> LpSolution:
    """Solve the LP relaxation of ``model`` (integrality ignored).

    Args:
        model: the model; binaries are treated as continuous in their bounds
        lower: variable lower bounds overriding the model's
        upper: variable upper bounds overriding the model's
        warm_start: basis to start from, typically the parent node's
        method: ``"simplex"`` (embedded) or ``"highs"`` (`scipy.optimize.linprog`)
        max_iterations: simplex iteration budget
        time_limit: seconds after which the solve returns
            `SolveStatus.TIME_LIMIT` without a point

    Raises:
        NumericalError: if the simplex method breaks down.
    """
    arrays = model.arrays()
    lower = arrays.lower if lower is None else np.asarray(lower, dtype=float)
    upper = arrays.upper if upper is None else np.asarray(upper, dtype=float)

    if np.any(lower > upper):
        return LpSolution(SolveStatus.INFEASIBLE, None, math.inf)
    if method == "highs":
        return _solve_lp_highs(arrays, lower, upper, time_limit)
    if method != "simplex":
        raise ValueError(f"unknown LP method {method!r}")

    deadline = None if time_limit is None else time.perf_counter() + time_limit
    simplex = _Simplex(arrays, lower, upper)
    simplex.start(warm_start)
    if max_iterations is None:
        max_iterations = 50 * (simplex.n + simplex.m) + 1000
    status = simplex.run(max_iterations, deadline)
    LOGGER.debug(
        "Simplex finished %s after %d iterations", status.value, simplex.iterations
    )
    if status is not SolveStatus.OPTIMAL:
        objective = math.inf if status is SolveStatus.INFEASIBLE else -math.inf
        return LpSolution(status, None, objective, iterations=simplex.iterations)

    x = simplex.solution()
    return LpSolution(
        status=status,
        x=x,
        objective=float(arrays.c @ x) + arrays.objective_constant,
        reduced_costs=simplex.reduced_costs,
        duals=simplex.duals,
        iterations=simplex.iterations,
        basis=simplex.warm_start(),
    )


def _solve_lp_highs(
    arrays: ModelArrays,
    lower: np.ndarray,
    upper: np.ndarray,
    time_limit: Optional[float] = None,
) -> LpSolution:
    a = arrays.a
    eq = arrays.row_lower == arrays.row_upper
    has_ub = ~eq & np.isfinite(arrays.row_upper)
    has_lb = ~eq & np.isfinite(arrays.row_lower)
    a_ub = sp.vstack([a[has_ub], -a[has_lb]]).tocsr()
    b_ub = np.concatenate([arrays.row_upper[has_ub], -arrays.row_lower[has_lb]])
    bounds = np.column_stack(
        [
            np.where(np.isfinite(lower), lower, -np.inf),
            np.where(np.isfinite(upper), upper, np.inf),
        ]
    )
    options = {
        "primal_feasibility_tolerance": 1e-10,
        "dual_feasibility_tolerance": 1e-10,
    }
    if time_limit is not None:
        options["time_limit"] = max(time_limit, 0.0)
    result = scipy.optimize.linprog(
        arrays.c,
        A_ub=a_ub if a_ub.shape[0] else None,
        b_ub=b_ub if a_ub.shape[0] else None,
        A_eq=a[eq] if eq.any() else None,
        b_eq=arrays.row_lower[eq] if eq.any() else None,
        bounds=bounds,
        method="highs",
        options=options,
    )
    if result.status == 2:
        return LpSolution(SolveStatus.INFEASIBLE, None, math.inf)
    if result.status == 3:
        return LpSolution(SolveStatus.UNBOUNDED, None, -math.inf)
    if result.status == 1 and time_limit is not None:
        return LpSolution(SolveStatus.TIME_LIMIT, None, -math.inf)
    if result.status != 0:
        raise SolverError(f"HiGHS LP failed: {result.message}")

    duals = np.zeros(a.shape[0])
    if eq.any():
        duals[eq] = result.eqlin.marginals
    n_ub = int(has_ub.sum())
    if a_ub.shape[0]:
        duals[has_ub] += result.ineqlin.marginals[:n_ub]
        duals[has_lb] -= result.ineqlin.marginals[n_ub:]
    x = np.asarray(result.x, dtype=float)
    return LpSolution(
        status=SolveStatus.OPTIMAL,
        x=x,
        objective=float(arrays.c @ x) + arrays.objective_constant,
        reduced_costs=result.lower.marginals + result.upper.marginals,
        duals=duals,
        iterations=int(getattr(result, "nit", 0)),
    )
