# SPDX-License-Identifier: Apache-2.0

import math

import pytest

import mesdopt
from mesdopt import RowSense
from mesdopt import VarKind
from mesdopt._lpformat import OBJECTIVE_CONSTANT
from mesdopt.exceptions import ModelError

from .support import HIGHS
from .support import knapsack_model


def _mixed_model():
    model = mesdopt.MilpModel("mixed")
    model.add_variable("x", -math.inf, math.inf)
    model.add_variable("y", -3.0, math.inf)
    model.add_variable("fixed_1", 2.5, 2.5)
    model.add_variable("w", -math.inf, 5.0)
    model.add_variable("m_s0_i1_k2", kind=VarKind.BINARY)
    model.add_constraint({"x": 1.0, "y": -1.0}, RowSense.EQ, 1.0, "tie")
    model.add_constraint({"x": 0.1, "w": 1e-7}, RowSense.GE, -10.0)
    model.add_constraint({"y": 3.0, "m_s0_i1_k2": -12.5}, RowSense.LE, 0.0)
    model.set_objective({"x": 1.0, "w": -0.3}, constant=-3.5)
    return model


@pytest.mark.parametrize("build", [knapsack_model, _mixed_model])
def test_export_then_import_gives_the_same_model(tmp_path, build):
    # GIVEN
    model = build()
    path = tmp_path / "model.lp"

    # WHEN
    mesdopt.export_model(model, path)
    loaded = mesdopt.import_model(path)

    # THEN
    assert loaded == model
    assert loaded.name == "model"


def test_export_layout(tmp_path):
    # GIVEN
    path = tmp_path / "knapsack.lp"

    # WHEN
    mesdopt.export_model(knapsack_model(), path)

    # THEN
    lines = path.read_text().splitlines()
    assert lines[:2] == ["\\ Model knapsack", "Minimize"]
    assert lines[2] == " obj: - 5.0 a - 4.0 b - 3.0 c"
    assert " weight: + 2.0 a + 3.0 b + 1.0 c <= 5.0" in lines
    assert lines[-3:] == ["Binaries", " a b c", "End"]


def test_long_rows_are_wrapped(tmp_path):
    # GIVEN
    model = mesdopt.MilpModel("wide")
    for n in range(60):
        model.add_variable(f"variable_{n}")
    model.add_constraint(
        {f"variable_{n}": float(n + 1) for n in range(60)}, RowSense.LE, 1.0, "wide"
    )
    path = tmp_path / "wide.lp"

    # WHEN
    mesdopt.export_model(model, path)

    # THEN
    assert max(len(line) for line in path.read_text().splitlines()) <= 200
    assert mesdopt.import_model(path) == model


def test_scheduling_model_round_trip(tmp_path, line, line_pre):
    # GIVEN
    assembled = mesdopt.assemble(line, line_pre, options=HIGHS)
    path = tmp_path / "line.lp"

    # WHEN
    mesdopt.export_model(assembled.model, path)

    # THEN
    assert mesdopt.import_model(path) == assembled.model


@pytest.mark.parametrize("name", ["2x", "has space", "inf", "free"])
def test_export_rejects_names_the_format_cannot_hold(tmp_path, name):
    # GIVEN
    model = mesdopt.MilpModel()
    model.add_variable(name)

    # WHEN
    with pytest.raises(ModelError):
        mesdopt.export_model(model, tmp_path / "bad.lp")


def test_export_rejects_the_objective_constant_name(tmp_path):
    # GIVEN
    model = mesdopt.MilpModel()
    model.add_variable(OBJECTIVE_CONSTANT)

    # WHEN
    with pytest.raises(ModelError) as exc:
        mesdopt.export_model(model, tmp_path / "bad.lp")

    # THEN
    assert "reserved" in str(exc.value)


def test_objective_constant_is_carried_by_a_fixed_column(tmp_path):
    # GIVEN
    path = tmp_path / "mixed.lp"

    # WHEN
    mesdopt.export_model(_mixed_model(), path)

    # THEN
    lines = path.read_text().splitlines()
    assert f" {OBJECTIVE_CONSTANT} = 1.0" in lines
    assert lines[2].endswith(f"- 3.5 {OBJECTIVE_CONSTANT}")
    assert OBJECTIVE_CONSTANT not in mesdopt.import_model(path).variable_names


def test_import_rejects_general_integers(tmp_path):
    # GIVEN
    path = tmp_path / "general.lp"
    path.write_text(
        "Minimize\n obj: x\nSubject To\n c0: x >= 1\nBounds\n x <= 5\n"
        "Generals\n x\nEnd\n"
    )

    # WHEN
    with pytest.raises(ModelError) as exc:
        mesdopt.import_model(path)

    # THEN
    assert "not supported" in str(exc.value)


def test_import_of_a_missing_file(tmp_path):
    # WHEN
    with pytest.raises(FileNotFoundError):
        mesdopt.import_model(tmp_path / "missing.lp")


def test_import_accepts_hand_written_text(tmp_path):
    # GIVEN
    path = tmp_path / "hand.lp"
    path.write_text(
        "\\ written by hand\n"
        "Minimize\n"
        " obj: 2 x + 3 y - z\n"
        "Subject To\n"
        " cover: x + y >= 1\n"
        " -z + x <= 4\n"
        "Bounds\n"
        " y <= 2\n"
        " -inf <= z <= 7\n"
        "Binaries\n"
        " x\n"
        "End\n"
    )

    # WHEN
    model = mesdopt.import_model(path)

    # THEN
    assert model.variable_names == ("x", "y", "z")
    assert model.bounds("y") == (0.0, 2.0)
    assert model.bounds("z") == (-math.inf, 7.0)
    assert model.is_binary("x")
    assert model.constraint_names[0] == "cover"
    assert model.constraint(1)[1] is RowSense.LE
    assert mesdopt.solve(model).objective == pytest.approx(-5.0)
