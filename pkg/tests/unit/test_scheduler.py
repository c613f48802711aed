# SPDX-License-Identifier: Apache-2.0

import dataclasses
import math

import numpy as np
import pytest

import mesdopt
from mesdopt import SolveStatus
from mesdopt import Strategy
from mesdopt import testing
from mesdopt._scheduler import decode
from mesdopt._scheduler import fixed_flags
from mesdopt._scheduler import scaled_scenario
from mesdopt._scheduler import verify_schedule
from mesdopt.exceptions import AssemblyError
from mesdopt.exceptions import ConsistencyError
from mesdopt.exceptions import InfeasiblePathError
from mesdopt.exceptions import SolverError

from .support import HIGHS


def _highs(scenario, **overrides):
    return scenario.options.updated(solver="highs", lp_method="highs", **overrides)


def _below(left, right):
    return left <= right + 1e-5 * max(1.0, abs(right))


def test_assembled_rows_and_objective(line, line_pre):
    # WHEN
    assembled = mesdopt.assemble(line, line_pre, options=HIGHS)

    # THEN
    model = assembled.model
    names = set(model.constraint_names)
    for name in (
        "conn_s0_k0_i0",
        "pmax_s0_i0_k0",
        "pf_lo_s0_i1_k3",
        "soc_s0_k0",
        "soc_end_hi_s0",
        "soc_end_lo_s0",
        "dploss_k0",
        "dv_hi_k0_b2",
        "dl_lo_k3_l1",
    ):
        assert name in names
    assert "dv_hi_k0_b0" not in names
    assert model.frozen
    objective = model.objective
    assert objective[assembled.index[("dPloss", 2)]] == pytest.approx(0.1)
    assert objective[assembled.index[("e", 0, 0, 1, 0)]] == pytest.approx(0.5)
    assert model.bounds(assembled.index[("e", 0, 0, 1, 1)]) == (0.0, 1.0)
    assert model.bounds(assembled.index[("e", 0, 0, 1, 2)]) == (0.0, 0.0)


def test_stationary_assembly_forbids_driving(line, line_pre):
    # WHEN
    assembled = mesdopt.assemble(
        line, line_pre, strategy=Strategy.STATIONARY, options=HIGHS
    )

    # THEN
    model = assembled.model
    assert "stay_s0_i1_k3" in model.constraint_names
    for key, column in assembled.index.items():
        if key[0] == "e":
            assert model.bounds(column) == (0.0, 0.0)
            assert column not in model.objective


def test_fixed_path_assembly_needs_plans(line, line_pre):
    # WHEN
    with pytest.raises(AssemblyError):
        mesdopt.assemble(line, line_pre, strategy=Strategy.FIXED_PATH, options=HIGHS)


def test_precomputed_data_must_match(small_desk, desk_pre):
    # WHEN
    with pytest.raises(AssemblyError) as exc:
        mesdopt.assemble(small_desk, desk_pre, options=HIGHS)

    # THEN
    assert "scenario has 6" in str(exc.value)


@pytest.fixture(scope="module")
def small_desk_schedules(small_desk, small_desk_pre):
    return mesdopt.solve_all(
        small_desk, options=_highs(small_desk), precomputed=small_desk_pre
    )


def test_strategy_ordering(small_desk_schedules):
    # GIVEN
    case1, case2, case3, none = small_desk_schedules

    # THEN
    assert [s.strategy for s in small_desk_schedules] == [
        Strategy.CO_OPTIMIZED,
        Strategy.STATIONARY,
        Strategy.FIXED_PATH,
        Strategy.NO_STORAGE,
    ]
    assert none.objective == 0.0
    assert case1.objective < 0.0
    assert _below(case1.objective, case2.objective)
    assert _below(case1.objective, case3.objective)
    assert _below(case2.objective, 0.0)


def test_schedules_respect_their_strategy(small_desk_schedules):
    # GIVEN
    case1, case2, case3, _ = small_desk_schedules

    # THEN
    assert case1.status is SolveStatus.OPTIMAL
    assert case1.transits.max() <= 2
    assert case2.transits.sum() == 0
    assert case2.total_distance_km == 0.0
    assert len(set(case2.positions[0])) == 1
    assert case3.device_names == ("MESD1",)
    assert case1.j_total == pytest.approx(case1.baseline_cost + case1.objective)
    assert case1.objective == pytest.approx(case1.grid_cost + case1.transit_cost)


def test_co_optimized_matches_brute_force(line, line_pre):
    # GIVEN
    expected, plans = testing.brute_force_case1(line, line_pre, options=HIGHS)

    # WHEN
    schedule = mesdopt.solve_case1(line, options=HIGHS, precomputed=line_pre)

    # THEN
    assert schedule.objective == pytest.approx(expected, rel=1e-6, abs=1e-8)
    assert schedule.objective < 0.0
    assert len(plans) == 1


@pytest.mark.slow
def test_embedded_search_matches_highs(line, line_pre):
    # WHEN
    ours = mesdopt.solve_case1(
        line, options=mesdopt.SolverOptions(), precomputed=line_pre
    )
    reference = mesdopt.solve_case1(line, options=HIGHS, precomputed=line_pre)

    # THEN
    assert ours.objective == pytest.approx(reference.objective, rel=1e-5, abs=1e-8)


def test_pinned_start(line, line_pre):
    # GIVEN
    options = HIGHS.updated(pin_start={"MESD1": "S1"})

    # WHEN
    schedule = mesdopt.solve_case1(line, options=options, precomputed=line_pre)

    # THEN
    assert schedule.positions[0, 0] == 0


def test_fixing_the_optimal_journeys_keeps_the_objective(line, line_pre):
    # GIVEN
    case1 = mesdopt.solve_case1(line, options=HIGHS, precomputed=line_pre)

    # WHEN
    case3 = mesdopt.solve_case3_pev(
        line, fixed_flags(case1), options=HIGHS, precomputed=line_pre
    )

    # THEN
    np.testing.assert_array_equal(case3.positions, case1.positions)
    assert case3.objective == pytest.approx(case1.objective, rel=1e-6, abs=1e-8)


def test_unrealizable_plan_is_rejected(line, line_pre):
    # GIVEN
    plan = mesdopt.TransitPlan(np.zeros((2, 4), dtype=int), np.zeros((2, 2, 4)))

    # WHEN
    with pytest.raises(InfeasiblePathError) as exc:
        mesdopt.solve_case3_pev(line, [plan], options=HIGHS, precomputed=line_pre)

    # THEN
    assert exc.value.device == "MESD1"
    assert exc.value.step == 0


def test_plan_count_must_match_the_fleet(line, line_pre):
    # WHEN
    with pytest.raises(AssemblyError):
        mesdopt.solve_case3_pev(line, [], options=HIGHS, precomputed=line_pre)


def test_no_storage(line, line_pre):
    # WHEN
    schedule = mesdopt.solve_no_storage(line, precomputed=line_pre)

    # THEN
    assert schedule.strategy is Strategy.NO_STORAGE
    assert schedule.n_devices == 0
    assert schedule.objective == 0.0
    assert schedule.j_total == pytest.approx(line_pre.baseline.cost)


def _solved(line, line_pre):
    assembled = mesdopt.assemble(line, line_pre, options=HIGHS)
    return assembled, mesdopt.solve(assembled.model, HIGHS)


def test_decode_needs_a_point(line, line_pre):
    # GIVEN
    assembled, solution = _solved(line, line_pre)
    empty = dataclasses.replace(solution, status=SolveStatus.INFEASIBLE, x=None)

    # WHEN
    with pytest.raises(SolverError):
        decode(empty, assembled)


def test_decode_rejects_fractional_flags(line, line_pre):
    # GIVEN
    assembled, solution = _solved(line, line_pre)
    x = solution.x.copy()
    x[assembled.index[("w", 0, 1)]] = 0.5

    # WHEN
    with pytest.raises(ConsistencyError) as exc:
        decode(dataclasses.replace(solution, x=x), assembled)

    # THEN
    assert "w_s0_k1" in str(exc.value)


@pytest.mark.parametrize(
    "change, message",
    [
        (lambda s: {"soc": s.soc + 1.0}, "state of charge out of bounds"),
        (lambda s: {"y": 1 - s.y}, "connection and transit flags disagree"),
        (lambda s: {"dv": s.dv + 1.0}, "linearized voltage change"),
    ],
)
def test_verify_schedule_names_the_broken_invariant(line, line_pre, change, message):
    # GIVEN
    assembled, solution = _solved(line, line_pre)
    schedule = decode(solution, assembled)

    # WHEN
    with pytest.raises(ConsistencyError) as exc:
        verify_schedule(
            dataclasses.replace(schedule, **change(schedule)), assembled.fleet, line_pre
        )

    # THEN
    assert message in str(exc.value)


def test_sweep(line, line_pre):
    # WHEN
    frame = mesdopt.sweep(
        line, "p_max", [0.5, 1.0], options=HIGHS, precomputed=line_pre
    )

    # THEN
    assert list(frame["factor"]) == [0.5, 1.0]
    assert set(frame["case"]) == {"case1"}
    assert list(frame.columns) == [
        "parameter",
        "factor",
        "case",
        "status",
        "J",
        "J_total",
        "distance_km",
    ]
    assert _below(frame.loc[1, "J"], frame.loc[0, "J"])


def test_sweep_rejects_unknown_parameter(line, line_pre):
    # WHEN
    with pytest.raises(ValueError):
        mesdopt.sweep(line, "speed", [1.0], precomputed=line_pre)


@pytest.mark.parametrize(
    "parameter, check",
    [
        ("p_max", lambda s, p: s.fleet[0].p_min == -100.0),
        ("e_cap", lambda s, p: s.fleet[0].e_cap == 400.0),
        ("dv_max", lambda s, p: np.allclose(p.bundle.dv_min, -0.025)),
        ("dl_max", lambda s, p: np.allclose(p.bundle.dl_max, 500.0)),
    ],
)
def test_scaled_scenario(line, line_pre, parameter, check):
    # WHEN
    scaled, pre = scaled_scenario(line, line_pre, parameter, 0.5)

    # THEN
    assert check(scaled, pre)
    assert math.isclose(line.fleet[0].p_max, 200.0)
