# SPDX-License-Identifier: Apache-2.0

import numpy as np
import pandas as pd
import pytest

import mesdopt
from mesdopt._grid import dump_sensitivities
from mesdopt._grid import forecast_injections
from mesdopt._grid import station_injection_vector
from mesdopt._grid import voltage_profile
from mesdopt.exceptions import NonConvergenceError


def _solve(grid, step=0, extra=None):
    p, q = forecast_injections(grid, step)
    if extra is not None:
        p = p + extra[0::2]
        q = q + extra[1::2]
    return mesdopt.run_power_flow(grid, p, q)


def test_power_flow_on_a_loaded_chain(line):
    # WHEN
    solution = _solve(line.grid)

    # THEN
    assert solution.mismatch <= 1e-8
    assert solution.vm[0] == 1.0
    assert 1.0 > solution.vm[1] > solution.vm[2] > 0.9
    assert solution.p_loss_kw > 0.0
    assert solution.p_loss_kw == pytest.approx(solution.p_loss_lines_kw, rel=1e-5)
    assert abs(solution.s_from_kva[1]) == pytest.approx(
        np.hypot(250.0, 100.0), rel=1e-2
    )


def test_power_flow_without_injections(line):
    # WHEN
    solution = mesdopt.run_power_flow(line.grid, np.zeros(3), np.zeros(3))

    # THEN
    assert solution.iterations == 0
    np.testing.assert_array_equal(solution.vm, np.ones(3))
    assert solution.p_loss_kw == 0.0


def test_power_flow_ignores_the_slack_entry(line):
    # GIVEN
    p, q = forecast_injections(line.grid, 0)

    # WHEN
    shifted = p.copy()
    shifted[0] = 500.0

    # THEN
    assert mesdopt.run_power_flow(line.grid, shifted, q).p_loss_kw == pytest.approx(
        mesdopt.run_power_flow(line.grid, p, q).p_loss_kw
    )


def test_power_flow_reports_divergence(line):
    # GIVEN
    p = np.array([0.0, -1e6, -1e6])

    # WHEN
    with pytest.raises(NonConvergenceError):
        mesdopt.run_power_flow(line.grid, p, np.zeros(3))


def test_power_flow_iteration_limit(line):
    # GIVEN
    p, q = forecast_injections(line.grid, 0)

    # WHEN
    with pytest.raises(NonConvergenceError):
        mesdopt.run_power_flow(line.grid, p, q, max_iterations=1, tol=1e-14)


def _bump(grid, column, size):
    extra = np.zeros(2 * grid.n_buses)
    extra[column] = size
    return extra


@pytest.mark.parametrize("column", [2, 3, 4, 5])
def test_loss_sensitivity_matches_finite_difference(line, column):
    # GIVEN
    sensitivity = mesdopt.step_sensitivity(line.grid, 0)
    h = 2.0

    # WHEN
    up = _solve(line.grid, extra=_bump(line.grid, column, h)).p_loss_kw
    down = _solve(line.grid, extra=_bump(line.grid, column, -h)).p_loss_kw

    # THEN
    assert sensitivity.s_ploss[column] == pytest.approx(
        (up - down) / (2 * h), rel=1e-3, abs=1e-5
    )


@pytest.mark.parametrize("column", [2, 3, 4, 5])
def test_voltage_and_flow_sensitivities_match_finite_difference(line, column):
    # GIVEN
    sensitivity = mesdopt.step_sensitivity(line.grid, 0)
    h = 2.0

    # WHEN
    up = _solve(line.grid, extra=_bump(line.grid, column, h))
    down = _solve(line.grid, extra=_bump(line.grid, column, -h))

    # THEN
    np.testing.assert_allclose(
        sensitivity.s_v[:, column], (up.vm - down.vm) / (2 * h), rtol=1e-3, atol=1e-9
    )
    np.testing.assert_allclose(
        sensitivity.s_l[:, column],
        (up.line_loading_kva - down.line_loading_kva) / (2 * h),
        rtol=1e-3,
        atol=1e-5,
    )


@pytest.fixture(scope="module")
def feeder34():
    return mesdopt.load_scenario(mesdopt.shipped_scenario("default"))


def _station_columns(scenario):
    grid = scenario.grid
    buses = [grid.bus_index(b) for b in scenario.stations.buses]
    return [2 * b + part for b in buses for part in (0, 1)]


def _tight(grid, extra=None):
    p, q = forecast_injections(grid, 0)
    if extra is not None:
        p = p + extra[0::2]
        q = q + extra[1::2]
    return mesdopt.run_power_flow(grid, p, q, tol=1e-12)


def _relative_error(predicted, actual):
    return np.abs(predicted - actual) / np.abs(actual)


def test_sensitivities_on_the_34_bus_feeder(feeder34):
    # GIVEN
    grid = feeder34.grid
    base = _tight(grid)
    sensitivity = mesdopt.linearize(grid, base)
    pq = np.arange(grid.n_buses) != grid.slack_index

    for column in _station_columns(feeder34):
        # WHEN
        moved = _tight(grid, _bump(grid, column, 1.0))

        # THEN
        loss = moved.p_loss_kw - base.p_loss_kw
        assert _relative_error(sensitivity.s_ploss[column], loss) <= 1e-3
        dv = moved.vm - base.vm
        assert (_relative_error(sensitivity.s_v[pq, column], dv[pq]) <= 1e-3).all()
        dl = moved.line_loading_kva - base.line_loading_kva
        carrying = np.abs(dl) >= 1e-3 * np.abs(dl).max()
        predicted = sensitivity.s_l[carrying, column]
        assert (_relative_error(predicted, dl[carrying]) <= 1e-3).all()


def test_linearization_error_shrinks_quadratically(feeder34):
    # GIVEN
    grid = feeder34.grid
    base = _tight(grid)
    sensitivity = mesdopt.linearize(grid, base)

    for column in _station_columns(feeder34)[0::2]:
        # WHEN
        errors = []
        for h in (1.0, 0.5):
            moved = _tight(grid, _bump(grid, column, h))
            change = moved.p_loss_kw - base.p_loss_kw
            errors.append(abs(sensitivity.s_ploss[column] * h - change))

        # THEN
        assert 3.0 <= errors[0] / errors[1] <= 5.0



def test_slack_columns_are_zero(line):
    # WHEN
    sensitivity = mesdopt.step_sensitivity(line.grid, 0)

    # THEN
    assert not sensitivity.s_ploss[:2].any()
    assert not sensitivity.s_v[:, :2].any()
    assert not sensitivity.s_v[0].any()
    assert not sensitivity.s_l[:, :2].any()


def test_injecting_at_a_loaded_bus_reduces_losses(line):
    # WHEN
    sensitivity = mesdopt.step_sensitivity(line.grid, 0)

    # THEN
    assert sensitivity.s_ploss[4] < 0.0
    assert sensitivity.s_v[2, 4] > 0.0


def test_compute_sensitivities(line):
    # WHEN
    bundle = mesdopt.compute_sensitivities(line.grid, line.limits)

    # THEN
    assert len(bundle) == 4
    assert bundle[0].s_v.shape == (3, 6)
    assert bundle[0].s_l.shape == (2, 6)
    np.testing.assert_array_equal(bundle.dv_max, [0.05] * 3)
    np.testing.assert_array_equal(bundle.dv_min, [-0.05] * 3)
    np.testing.assert_array_equal(bundle.dl_max, [1000.0, 1000.0])
    np.testing.assert_array_equal(bundle.dl_min, [-1000.0, -1000.0])


def test_threads_give_the_same_sensitivities(desk):
    # WHEN
    one = mesdopt.compute_sensitivities(desk.grid, desk.limits)
    many = mesdopt.compute_sensitivities(desk.grid, desk.limits, threads=4)

    # THEN
    for left, right in zip(one.steps, many.steps):
        np.testing.assert_array_equal(left.s_ploss, right.s_ploss)
        np.testing.assert_array_equal(left.s_v, right.s_v)
    np.testing.assert_array_equal(one.baseline_losses_kw, many.baseline_losses_kw)


def test_baseline_losses(desk):
    # WHEN
    baseline = mesdopt.baseline_losses(desk.grid, desk.price, desk.t_unit)

    # THEN
    assert baseline.per_step_kw.shape == (24,)
    assert np.all(baseline.per_step_kw > 0.0)
    assert baseline.cost == pytest.approx(
        float(np.dot(desk.price, baseline.per_step_kw)) * desk.t_unit
    )


def test_station_injection_vector_sums_devices(line):
    # GIVEN
    p = np.array([[10.0, 0.0], [5.0, -20.0]])
    q = np.array([[1.0, 0.0], [0.0, 2.0]])

    # WHEN
    vector = station_injection_vector(line.stations, line.grid, p, q)

    # THEN
    np.testing.assert_array_equal(vector, [0.0, 0.0, 15.0, 1.0, -20.0, 2.0])


def test_voltage_profile_applies_extra_injection(line):
    # GIVEN
    extra = _bump(line.grid, 4, 100.0)

    # WHEN
    solution = voltage_profile(line.grid, 0, extra)

    # THEN
    np.testing.assert_allclose(solution.vm, _solve(line.grid, extra=extra).vm)
    assert solution.vm[2] > _solve(line.grid).vm[2]


def test_dump_sensitivities(tmp_path, line):
    # GIVEN
    bundle = mesdopt.compute_sensitivities(line.grid, line.limits)

    # WHEN
    path = dump_sensitivities(bundle, line.grid, tmp_path / "sens.csv")

    # THEN
    table = pd.read_csv(path)
    assert list(table.columns) == ["step", "quantity", "row", "column", "value"]
    assert set(table["quantity"]) == {"ploss", "v", "l"}
    assert sorted(table["step"].unique()) == [0, 1, 2, 3]
    assert "P_0" not in set(table["column"])
