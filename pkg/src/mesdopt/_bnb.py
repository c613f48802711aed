# SPDX-License-Identifier: Apache-2.0

"""Best-bound branch-and-bound over binary variables."""

from __future__ import annotations

from dataclasses import dataclass
import heapq
import logging
import math
import time
from typing import List
from typing import Optional
from typing import Tuple

import numpy as np
import scipy.optimize

from ._enums import SolveStatus
from ._milp import MilpModel
from ._milp import MilpSolution
from ._options import ResolvedSolverOptions
from ._options import SolverOptions
from ._options import resolve_solver_options
from ._presolve import BoundPropagator
from ._simplex import LpSolution
from ._simplex import WarmStart
from ._simplex import solve_lp
from .exceptions import SolverError

LOGGER = logging.getLogger(__name__)

INTEGRALITY_TOL = 1e-6
LOG_EVERY_NODES = 500


def relative_gap(upper: float, lower: float) -> float:
    if not math.isfinite(upper):
        return math.inf
    if not math.isfinite(lower):
        return math.inf
    return max(0.0, upper - lower) / max(abs(upper), 1e-10)


@dataclass
class _Node:
    lower: np.ndarray
    upper: np.ndarray
    lp: LpSolution
    depth: int


class _Search:
    def __init__(self, model: MilpModel, options: ResolvedSolverOptions) -> None:
        self.model = model
        self.options = options
        self.arrays = model.arrays()
        self.binaries = np.flatnonzero(self.arrays.binary)
        self.propagator = BoundPropagator(self.arrays)
        self.heap: List[Tuple[float, int, _Node]] = []
        self.sequence = 0
        self.nodes = 0
        self.incumbent: Optional[np.ndarray] = None
        self.incumbent_value = math.inf
        self.history: List[float] = []
        self.started = time.perf_counter()
        self.deadline = (
            None if options.time_limit is None else self.started + options.time_limit
        )
        self.timed_out = False

    def lp(
        self, lower: np.ndarray, upper: np.ndarray, warm: Optional[WarmStart]
    ) -> LpSolution:
        self.nodes += 1
        remaining = None
        if self.deadline is not None:
            remaining = max(self.deadline - time.perf_counter(), 0.0)
        solution = solve_lp(
            self.model,
            lower=lower,
            upper=upper,
            warm_start=warm,
            method=self.options.lp_method,
            time_limit=remaining,
        )
        if solution.status is SolveStatus.TIME_LIMIT:
            self.timed_out = True
        return solution

    def push(self, bound: float, node: _Node) -> None:
        heapq.heappush(self.heap, (bound, self.sequence, node))
        self.sequence += 1

    def prune_threshold(self) -> float:
        if not math.isfinite(self.incumbent_value):
            return math.inf
        return self.incumbent_value - max(
            self.options.gap * abs(self.incumbent_value), 1e-9
        )

    def fractional(self, x: np.ndarray) -> np.ndarray:
        values = x[self.binaries]
        distance = np.abs(values - np.round(values))
        return self.binaries[distance > INTEGRALITY_TOL]

    def try_incumbent(self, node: _Node) -> None:
        """Polish an integral LP point and keep it if it improves."""
        assert node.lp.x is not None
        lower = node.lower.copy()
        upper = node.upper.copy()
        rounded = np.round(node.lp.x[self.binaries])
        lower[self.binaries] = rounded
        upper[self.binaries] = rounded
        if self.binaries.size:
            polished = self.lp(lower, upper, node.lp.basis)
            if polished.status is SolveStatus.TIME_LIMIT:
                # kept open so the reported bound stays valid
                self.push(node.lp.objective, node)
                return
            if polished.status is not SolveStatus.OPTIMAL or polished.x is None:
                LOGGER.warning("Polishing an integral node failed; node dropped")
                return
        else:
            polished = node.lp
        assert polished.x is not None
        if polished.objective < self.incumbent_value:
            x = polished.x.copy()
            x[self.binaries] = rounded
            self.incumbent = x
            self.incumbent_value = polished.objective
            self.history.append(polished.objective)
            LOGGER.debug(
                "New incumbent %.10g after %d nodes", polished.objective, self.nodes
            )

    def consider(self, node: _Node, parent_bound: float) -> None:
        if node.lp.status is SolveStatus.TIME_LIMIT:
            # unsolved; its subtree is bounded by the parent only
            self.push(parent_bound, node)
            return
        if node.lp.status is not SolveStatus.OPTIMAL:
            return
        if node.lp.objective >= self.prune_threshold():
            return
        assert node.lp.x is not None
        if self.fractional(node.lp.x).size == 0:
            self.try_incumbent(node)
            return
        self.push(node.lp.objective, node)

    def limit_hit(self) -> Optional[SolveStatus]:
        node_limit = self.options.node_limit
        if node_limit is not None and self.nodes >= node_limit:
            return SolveStatus.NODE_LIMIT
        if self.timed_out or (
            self.deadline is not None and time.perf_counter() >= self.deadline
        ):
            return SolveStatus.TIME_LIMIT
        return None

    def fix_by_reduced_cost(self, node: _Node) -> Tuple[np.ndarray, np.ndarray]:
        """Bounds of ``node`` with binaries fixed that cannot beat the incumbent.

        A nonbasic binary at 0 with reduced cost ``d`` raises the LP bound by
        at least ``d`` when moved to 1 (and symmetrically at 1), so it is
        fixed whenever that alone reaches the prune threshold.
        """
        lower = node.lower.copy()
        upper = node.upper.copy()
        threshold = self.prune_threshold()
        d = node.lp.reduced_costs
        if not math.isfinite(threshold) or d is None or node.lp.x is None:
            return lower, upper
        room = threshold - node.lp.objective + 1e-9 * max(1.0, abs(threshold))
        j = self.binaries
        x = node.lp.x[j]
        free = lower[j] < upper[j]
        at_zero = free & (x <= INTEGRALITY_TOL) & (d[j] > room)
        at_one = free & (x >= 1.0 - INTEGRALITY_TOL) & (-d[j] > room)
        upper[j[at_zero]] = 0.0
        lower[j[at_one]] = 1.0
        return lower, upper

    def branch(self, node: _Node) -> None:
        assert node.lp.x is not None
        candidates = self.fractional(node.lp.x)
        values = node.lp.x[candidates]
        score = np.minimum(values - np.floor(values), np.ceil(values) - values)
        # argmax keeps the lowest index among equally fractional variables
        j = int(candidates[int(np.argmax(score))])
        base_lower, base_upper = self.fix_by_reduced_cost(node)
        for fixed in (0.0, 1.0):
            lower = base_lower.copy()
            upper = base_upper.copy()
            lower[j] = fixed
            upper[j] = fixed
            tightened = self.propagator.tighten(lower, upper)
            if tightened is None:
                continue
            lp = self.lp(*tightened, node.lp.basis)
            child = _Node(tightened[0], tightened[1], lp, node.depth + 1)
            self.consider(child, node.lp.objective)


def solve(model: MilpModel, options: Optional[SolverOptions] = None) -> MilpSolution:
    """Solve ``model`` to proven optimality within the configured gap.

    The embedded search explores nodes best-bound first, branches on the
    most fractional binary (lowest index on ties) and creates the down
    branch before the up branch, so identical inputs always explore the same
    tree.  Each child's bounds are tightened by row activity propagation
    before its LP is solved, and binaries whose reduced cost alone reaches
    the incumbent are fixed.  ``options.solver == "highs"`` delegates to
    `scipy.optimize.milp`.

    Returns:
        `MilpSolution` whose status tells whether a solution is attached.
    """
    resolved = resolve_solver_options(options)
    model.freeze()
    if resolved.solver == "highs":
        return _solve_highs(model, resolved)

    search = _Search(model, resolved)
    arrays = search.arrays
    LOGGER.info(
        "Branch-and-bound on %d variables (%d binary), %d rows",
        model.n_variables,
        search.binaries.size,
        model.n_constraints,
    )
    root = search.propagator.tighten(arrays.lower, arrays.upper)
    if root is None:
        LOGGER.info("Bound propagation proved the model infeasible")
        return _finish(model, search, SolveStatus.INFEASIBLE, math.inf)
    root_lower, root_upper = root
    fixed = int(np.sum(root_lower[search.binaries] == root_upper[search.binaries]))
    LOGGER.debug("Bound propagation fixed %d binaries at the root", fixed)
    root_lp = search.lp(root_lower, root_upper, None)
    if root_lp.status is SolveStatus.UNBOUNDED:
        return _finish(model, search, SolveStatus.UNBOUNDED, -math.inf)
    search.consider(_Node(root_lower, root_upper, root_lp, 0), -math.inf)

    status = SolveStatus.OPTIMAL
    pruned_bound = math.inf
    while search.heap:
        bound = search.heap[0][0]
        if bound >= search.prune_threshold():
            pruned_bound = bound
            search.heap.clear()
            break
        limit = search.limit_hit()
        if limit is not None:
            status = limit
            break
        _, _, node = heapq.heappop(search.heap)
        search.branch(node)
        if search.nodes % LOG_EVERY_NODES < 2:
            LOGGER.debug(
                "%d nodes, %d open, incumbent %.10g, bound %.10g",
                search.nodes,
                len(search.heap),
                search.incumbent_value,
                bound,
            )

    if search.heap:
        lower_bound = min(search.incumbent_value, search.heap[0][0])
    else:
        lower_bound = min(search.incumbent_value, pruned_bound)

    if search.incumbent is None:
        if status is SolveStatus.OPTIMAL:
            status = SolveStatus.INFEASIBLE
        return _finish(model, search, status, lower_bound)
    if status is not SolveStatus.OPTIMAL:
        LOGGER.warning(
            "Search stopped by %s with gap %.3g",
            status.value,
            relative_gap(search.incumbent_value, lower_bound),
        )
        status = SolveStatus.GAP_LIMIT
    return _finish(model, search, status, lower_bound)


def _finish(
    model: MilpModel, search: _Search, status: SolveStatus, bound: float
) -> MilpSolution:
    wall = time.perf_counter() - search.started
    has_x = status.has_solution and search.incumbent is not None
    objective = search.incumbent_value if has_x else math.inf
    if status is SolveStatus.UNBOUNDED:
        objective = -math.inf
    solution = MilpSolution(
        status=status,
        x=search.incumbent if has_x else None,
        objective=objective,
        bound=bound,
        gap=relative_gap(objective, bound) if has_x else math.inf,
        node_count=search.nodes,
        wall_time=wall,
        variable_names=model.variable_names,
        incumbent_history=tuple(search.history),
    )
    LOGGER.info(
        "Solve finished %s: objective %.10g, %d nodes, %.2f s",
        status.value,
        objective,
        search.nodes,
        wall,
    )
    return solution


def _solve_highs(model: MilpModel, options: ResolvedSolverOptions) -> MilpSolution:
    arrays = model.arrays()
    started = time.perf_counter()
    highs_options = {"mip_rel_gap": options.gap, "presolve": True}
    if options.time_limit is not None:
        highs_options["time_limit"] = options.time_limit
    if options.node_limit is not None:
        highs_options["node_limit"] = options.node_limit
    constraints = []
    if model.n_constraints:
        constraints.append(
            scipy.optimize.LinearConstraint(
                arrays.a, arrays.row_lower, arrays.row_upper
            )
        )
    result = scipy.optimize.milp(
        arrays.c,
        integrality=arrays.binary.astype(int),
        bounds=scipy.optimize.Bounds(arrays.lower, arrays.upper),
        constraints=constraints,
        options=highs_options,
    )
    wall = time.perf_counter() - started
    nodes = int(getattr(result, "mip_node_count", 0) or 0)

    if result.status == 2:
        status = SolveStatus.INFEASIBLE
    elif result.status == 3:
        status = SolveStatus.UNBOUNDED
    elif result.status == 0:
        status = SolveStatus.OPTIMAL
    elif result.status == 1:
        if result.x is None:
            status = (
                SolveStatus.TIME_LIMIT
                if options.time_limit is not None
                else SolveStatus.NODE_LIMIT
            )
        else:
            status = SolveStatus.GAP_LIMIT
    else:
        raise SolverError(f"HiGHS MILP failed: {result.message}")

    if not status.has_solution:
        objective = -math.inf if status is SolveStatus.UNBOUNDED else math.inf
        return MilpSolution(
            status=status,
            x=None,
            objective=objective,
            bound=objective,
            gap=math.inf,
            node_count=nodes,
            wall_time=wall,
            variable_names=model.variable_names,
        )

    x = np.asarray(result.x, dtype=float)
    binaries = np.flatnonzero(arrays.binary)
    rounded = np.round(x[binaries])
    lower = arrays.lower.copy()
    upper = arrays.upper.copy()
    lower[binaries] = rounded
    upper[binaries] = rounded
    polished = solve_lp(model, lower=lower, upper=upper, method="highs")
    if polished.status is SolveStatus.OPTIMAL and polished.x is not None:
        x = polished.x.copy()
        objective = polished.objective
    else:
        LOGGER.warning("Polishing the HiGHS incumbent failed; keeping raw values")
        objective = model.evaluate(x)
    x[binaries] = rounded
    dual_bound = getattr(result, "mip_dual_bound", None)
    if dual_bound is None:
        bound = objective
    else:
        bound = float(dual_bound) + arrays.objective_constant
    if status is SolveStatus.OPTIMAL:
        bound = min(bound, objective)
    return MilpSolution(
        status=status,
        x=x,
        objective=objective,
        bound=bound,
        gap=relative_gap(objective, bound),
        node_count=nodes,
        wall_time=wall,
        variable_names=model.variable_names,
        incumbent_history=(objective,),
    )
