# SPDX-License-Identifier: Apache-2.0

import numpy as np
import pytest

import mesdopt
from mesdopt._plans import plan_assignment

from .support import line_scenario


def _paths(scenario):
    return mesdopt.fastest_paths(
        scenario.road,
        mesdopt.edge_travel_times(scenario.road),
        scenario.stations,
        scenario.t_unit,
    )


@pytest.fixture
def paths(line):
    return _paths(line)


@pytest.fixture
def paths3():
    return _paths(line_scenario(n_steps=6, n_stations=3, speeds=(6.0, 30.0, 30.0)))


def test_from_departures(paths):
    # WHEN
    plan = mesdopt.TransitPlan.from_departures(paths, 0, [(0, 0, 1)])

    # THEN
    np.testing.assert_array_equal(plan.positions(), [0, -1, 1, 1])
    np.testing.assert_array_equal(plan.y, [0, 1, 0, 0])
    assert plan.departures() == [(0, 0, 1)]
    assert mesdopt.check_transit_feasibility(plan.m, plan.e, paths, plan.y)


def test_stationary_plan(paths):
    # WHEN
    plan = mesdopt.TransitPlan.stationary(2, 4, 1)

    # THEN
    np.testing.assert_array_equal(plan.positions(), [1, 1, 1, 1])
    assert plan.departures() == []
    assert mesdopt.check_transit_feasibility(plan.m, plan.e, paths)


def _travelling(paths):
    return mesdopt.TransitPlan.from_departures(paths, 0, [(0, 0, 1)])


def _edit(plan, m_cells=(), e_cells=()):
    m = plan.m.astype(float)
    e = plan.e.astype(float)
    for cell, value in m_cells:
        m[cell] = value
    for cell, value in e_cells:
        e[cell] = value
    return m, e


@pytest.mark.parametrize(
    "m_cells, e_cells, step, reason",
    [
        ((((0, 1), 0.5),), (), None, "flags are not binary"),
        ((), (((0, 0, 2), 1),), 2, "departure to the same station"),
        ((((0, 0), 0),), (), 0, "not connected at the first step"),
        ((((1, 1), 1),), (), 1, "connected while travelling"),
        ((((1, 2), 0), ((0, 2), 1)), (), 2, "did not arrive at station index 1"),
        ((), (((0, 1, 2), 1),), 2, "departure from station index 0 while parked"),
        ((), (((1, 0, 3), 1),), 3, "journey ends beyond the horizon"),
    ],
)
def test_infeasible_flags(paths, m_cells, e_cells, step, reason):
    # GIVEN
    m, e = _edit(_travelling(paths), m_cells, e_cells)

    # WHEN
    result = mesdopt.check_transit_feasibility(m, e, paths)

    # THEN
    assert not result
    assert result.step == step
    assert result.reason.startswith(reason)


def test_changed_station_without_travelling(paths):
    # GIVEN
    plan = mesdopt.TransitPlan.stationary(2, 4, 0)
    m, e = _edit(plan, [((0, 2), 0), ((1, 2), 1), ((0, 3), 0), ((1, 3), 1)])

    # WHEN
    result = mesdopt.check_transit_feasibility(m, e, paths)

    # THEN
    assert (result.ok, result.step) == (False, 2)
    assert result.reason == "changed station without travelling"


def test_transit_flag_must_match_connections(paths):
    # GIVEN
    plan = _travelling(paths)

    # WHEN
    result = mesdopt.check_transit_feasibility(plan.m, plan.e, paths, np.zeros(4))

    # THEN
    assert (result.ok, result.step) == (False, 1)
    assert result.reason == "transit flag disagrees with connection flags"


def test_more_than_one_departure(paths3):
    # GIVEN
    plan = mesdopt.TransitPlan.stationary(3, 6, 0)
    m, e = _edit(plan, e_cells=[((0, 1, 2), 1), ((0, 2, 2), 1)])

    # WHEN
    result = mesdopt.check_transit_feasibility(m, e, paths3)

    # THEN
    assert (result.ok, result.step) == (False, 2)
    assert result.reason == "more than one departure in one step"


def test_arrival_faster_than_an_earlier_departure_allows(paths3):
    # GIVEN
    plan = mesdopt.TransitPlan.from_departures(paths3, 0, [(2, 0, 2)])

    # WHEN
    result = mesdopt.check_transit_feasibility(plan.m, plan.e, paths3)

    # THEN
    assert paths3.gamma[0, 0, 2] == 4
    assert paths3.gamma[2, 0, 2] == 1
    assert (result.ok, result.step) == (False, 4)
    assert result.reason == "reached a station faster than its journey time"


@pytest.mark.parametrize(
    "kwargs, count",
    [
        ({}, 6),
        ({"max_transits": 0}, 2),
        ({"start": 0}, 3),
        ({"start": 1, "max_transits": 0}, 1),
    ],
)
def test_iter_transit_plans(paths, kwargs, count):
    # WHEN
    plans = list(mesdopt.iter_transit_plans(paths, **kwargs))

    # THEN
    assert len(plans) == count
    assert all(mesdopt.check_transit_feasibility(p.m, p.e, paths) for p in plans)


def test_iter_transit_plans_order(paths):
    # WHEN
    plans = list(mesdopt.iter_transit_plans(paths, start=0))

    # THEN
    assert [p.departures() for p in plans] == [[], [(1, 0, 1)], [(0, 0, 1)]]


def test_plan_assignment_spreads_distance_over_the_journey(paths3):
    # GIVEN
    plan = mesdopt.TransitPlan.from_departures(paths3, 0, [(0, 0, 2)])

    # WHEN
    values = plan_assignment(plan, paths3)

    # THEN
    z = [values[("z", 0, k)] for k in range(6)]
    np.testing.assert_allclose(z, [0.0, 5.0, 5.0, 5.0, 5.0, 0.0])
    assert values[("es", 0)] == 1.0
    assert values[("y", 0, 3)] == 1.0
    assert values[("m", 0, 2, 5)] == 1.0


@pytest.mark.parametrize("seed", range(10))
def test_random_plans_are_feasible(paths3, seed):
    # GIVEN
    rng = np.random.default_rng(seed)

    # WHEN
    plan = mesdopt.random_transit_plan(
        paths3, rng, departure_probability=0.5, max_transits=2
    )

    # THEN
    assert mesdopt.check_transit_feasibility(plan.m, plan.e, paths3)
    assert len(plan.departures()) <= 2


def test_random_plan_is_seeded(paths3):
    # WHEN
    one = mesdopt.random_transit_plan(paths3, np.random.default_rng(7))
    two = mesdopt.random_transit_plan(paths3, np.random.default_rng(7))

    # THEN
    np.testing.assert_array_equal(one.m, two.m)
    np.testing.assert_array_equal(one.e, two.e)


def test_random_plan_without_journeys(paths):
    # WHEN
    plan = mesdopt.random_transit_plan(
        paths,
        np.random.default_rng(0),
        start=1,
        departure_probability=1.0,
        max_transits=0,
    )

    # THEN
    np.testing.assert_array_equal(plan.positions(), [1, 1, 1, 1])


def test_random_plan_always_departing(paths):
    # WHEN
    plan = mesdopt.random_transit_plan(
        paths, np.random.default_rng(0), start=0, departure_probability=1.0
    )

    # THEN
    assert plan.departures() == [(0, 0, 1)]
