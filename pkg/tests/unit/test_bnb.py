# SPDX-License-Identifier: Apache-2.0

import math

import numpy as np
import pytest

import mesdopt
from mesdopt import RowSense
from mesdopt import SolveStatus
from mesdopt import testing

from .support import HIGHS
from .support import knapsack_model


def test_knapsack_optimum():
    # WHEN
    solution = mesdopt.solve(knapsack_model())

    # THEN
    assert solution.status is SolveStatus.OPTIMAL
    assert solution.objective == pytest.approx(-9.0)
    assert solution.bound == pytest.approx(-9.0)
    assert solution.gap == 0.0
    assert solution.values_by_name() == {"a": 1.0, "b": 1.0, "c": 0.0}
    assert solution.incumbent_history == pytest.approx((-8.0, -9.0))


def test_node_limit_without_incumbent():
    # WHEN
    solution = mesdopt.solve(knapsack_model(), mesdopt.SolverOptions(node_limit=1))

    # THEN
    assert solution.status is SolveStatus.NODE_LIMIT
    assert solution.x is None
    assert solution.objective == math.inf


def test_node_limit_with_incumbent_reports_the_gap():
    # WHEN
    solution = mesdopt.solve(knapsack_model(), mesdopt.SolverOptions(node_limit=3))

    # THEN
    assert solution.status is SolveStatus.GAP_LIMIT
    assert solution.objective == pytest.approx(-8.0)
    assert solution.bound == pytest.approx(-9.5)
    assert solution.gap == pytest.approx(0.1875)
    assert solution["b"] == 0.0


def test_time_limit_without_incumbent():
    # GIVEN
    options = mesdopt.SolverOptions(time_limit=1e-9, lp_method="simplex")

    # WHEN
    solution = mesdopt.solve(knapsack_model(), options)

    # THEN
    assert solution.status is SolveStatus.TIME_LIMIT
    assert solution.x is None
    assert solution.objective == math.inf


def test_loose_gap_accepts_the_first_incumbent():
    # WHEN
    solution = mesdopt.solve(knapsack_model(), mesdopt.SolverOptions(gap=0.25))

    # THEN
    assert solution.status is SolveStatus.OPTIMAL
    assert solution.objective == pytest.approx(-8.0)
    assert solution.gap <= 0.25


def test_search_is_deterministic():
    # WHEN
    one = mesdopt.solve(knapsack_model())
    two = mesdopt.solve(knapsack_model())

    # THEN
    assert one.node_count == two.node_count
    np.testing.assert_array_equal(one.x, two.x)


def test_solve_freezes_the_model():
    # GIVEN
    model = mesdopt.MilpModel()
    model.add_variable("x", 0.0, 2.0)
    model.set_objective({"x": 1.0})

    # WHEN
    solution = mesdopt.solve(model)

    # THEN
    assert model.frozen
    assert solution.status is SolveStatus.OPTIMAL
    assert solution["x"] == 0.0


def test_infeasible_milp():
    # GIVEN
    model = mesdopt.MilpModel()
    model.add_variable("a", kind=mesdopt.VarKind.BINARY)
    model.add_variable("b", kind=mesdopt.VarKind.BINARY)
    model.add_constraint({"a": 2.0, "b": 2.0}, RowSense.EQ, 1.0)

    # WHEN
    solution = mesdopt.solve(model)

    # THEN
    assert solution.status is SolveStatus.INFEASIBLE
    assert solution.x is None


def test_unbounded_milp():
    # GIVEN
    model = mesdopt.MilpModel()
    model.add_variable("a", kind=mesdopt.VarKind.BINARY)
    model.add_variable("x")
    model.set_objective({"a": 1.0, "x": -1.0})

    # WHEN
    solution = mesdopt.solve(model)

    # THEN
    assert solution.status is SolveStatus.UNBOUNDED
    assert solution.objective == -math.inf


@pytest.mark.parametrize("lp_method", ["simplex", "highs"])
@pytest.mark.parametrize("seed", range(20))
def test_random_milps_match_enumeration(seed, lp_method):
    # GIVEN
    model = testing.random_milp(np.random.default_rng(seed), 6, 2, 4)
    options = mesdopt.SolverOptions(lp_method=lp_method)

    # WHEN
    solution = mesdopt.solve(model, options)
    expected = testing.brute_force_milp(model)

    # THEN
    if expected is None:
        assert solution.status is SolveStatus.INFEASIBLE
    else:
        assert solution.status is SolveStatus.OPTIMAL
        assert solution.objective == pytest.approx(expected, rel=1e-5, abs=1e-6)
        assert model.max_violation(solution.x) <= 1e-6


@pytest.mark.parametrize("seed", range(8))
def test_random_milps_match_highs(seed):
    # GIVEN
    model = testing.random_milp(np.random.default_rng(100 + seed), 8, 3, 5)

    # WHEN
    ours = mesdopt.solve(model)
    reference = mesdopt.solve(model, HIGHS)

    # THEN
    assert ours.status is reference.status
    if ours.status.has_solution:
        assert ours.objective == pytest.approx(reference.objective, rel=1e-5, abs=1e-6)


def test_highs_knapsack():
    # WHEN
    solution = mesdopt.solve(knapsack_model(), HIGHS)

    # THEN
    assert solution.status is SolveStatus.OPTIMAL
    assert solution.objective == pytest.approx(-9.0)
    assert solution.bound <= solution.objective
    assert solution.values_by_name() == {"a": 1.0, "b": 1.0, "c": 0.0}


@pytest.mark.parametrize(
    "upper, lower, gap",
    [
        (-8.0, -9.5, 0.1875),
        (10.0, 10.0, 0.0),
        (10.0, 11.0, 0.0),
        (0.0, 0.0, 0.0),
        (math.inf, 1.0, math.inf),
        (1.0, -math.inf, math.inf),
    ],
)
def test_relative_gap(upper, lower, gap):
    # THEN
    assert mesdopt.relative_gap(upper, lower) == pytest.approx(gap)
