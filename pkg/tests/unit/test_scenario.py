# SPDX-License-Identifier: Apache-2.0

import copy
import math

import numpy as np
import pytest

import mesdopt
from mesdopt import testing
from mesdopt.exceptions import ScenarioParseError
from mesdopt.exceptions import ScenarioValidationError

from .support import line_document
from .support import shipped_document
from .support import write_document


def test_load_desk(desk):
    # THEN
    assert desk.name == "desk"
    assert desk.n_steps == 24
    assert desk.t_unit == 1.0
    assert desk.stations.ids == ("S1", "S2", "S3")
    assert desk.stations.intersections == ("A", "C", "E")
    assert desk.n_buses == 8
    assert desk.grid.slack_bus == 1
    assert len(desk.road.edges) == 12
    assert [spec.name for spec in desk.fleet] == ["MESD1"]
    assert desk.options.max_transits == 2
    assert desk.limits.effective_dv_max == 0.02


def test_generation_is_subtracted_from_load(desk):
    # WHEN
    p_load, q_load = desk.grid.load_arrays()

    # THEN
    bus = desk.grid.bus_index(7)
    assert p_load[bus, 12] == pytest.approx(0.92 * 200.0 - 0.95 * 150.0)
    assert q_load[bus, 12] == pytest.approx(0.92 * 90.0)
    assert p_load[desk.grid.slack_index].sum() == 0.0


def test_nk_override_rederives_step_length():
    # WHEN
    scenario = mesdopt.load_scenario(
        mesdopt.shipped_scenario("desk"), nk_override=6
    )

    # THEN
    assert scenario.n_steps == 6
    assert scenario.t_unit == 4.0
    assert scenario.price == (0.06, 0.06, 0.12, 0.12, 0.20, 0.16)
    assert scenario.grid.n_steps == 6


@pytest.mark.parametrize("name", mesdopt._scenario.SHIPPED_SCENARIOS)
def test_shipped_scenarios_load(name):
    # WHEN
    scenario = mesdopt.load_scenario(mesdopt.shipped_scenario(name))

    # THEN
    assert scenario.n_steps * scenario.t_unit == pytest.approx(scenario.horizon_h)
    assert len(scenario.price) == scenario.n_steps
    assert scenario.n_devices >= 1


def test_feeder123_dimensions():
    # WHEN
    scenario = mesdopt.load_scenario(mesdopt.shipped_scenario("feeder123"))

    # THEN
    assert scenario.n_buses == 123
    assert scenario.grid.n_lines == 122
    assert scenario.n_stations == 8
    assert scenario.n_steps == 48


def test_unknown_shipped_scenario():
    # WHEN
    with pytest.raises(ScenarioParseError) as exc:
        mesdopt.shipped_scenario("ieee9000")

    # THEN
    assert "ieee9000" in str(exc.value)


def test_malformed_json_reports_position(tmp_path):
    # GIVEN
    path = tmp_path / "broken.json"
    path.write_text('{\n  "meta": {,\n}')

    # WHEN
    with pytest.raises(ScenarioParseError) as exc:
        mesdopt.load_scenario(path)

    # THEN
    assert "line 2" in str(exc.value)


def test_missing_file(tmp_path):
    # WHEN
    with pytest.raises(ScenarioParseError):
        mesdopt.load_scenario(tmp_path / "missing.json")


def test_nk_override_must_leave_two_steps():
    # WHEN
    with pytest.raises(ScenarioValidationError) as exc:
        mesdopt.scenario_from_dict(line_document(), nk_override=1)

    # THEN
    assert exc.value.field == "nk_override"


def _set(path, value):
    def mutate(document):
        target = document
        for key in path[:-1]:
            target = target[key]
        target[path[-1]] = value

    return mutate


def _drop_slack(document):
    del document["grid"]["buses"][0]["slack"]


def _disconnect_bus(document):
    document["grid"]["lines"] = document["grid"]["lines"][:-1]


def _isolate_station(document):
    edges = document["road"]["edges"]
    document["road"]["edges"] = [
        edge for edge in edges if "C" not in (edge["a"], edge["b"])
    ]


def _duplicate_device(document):
    document["fleet"].append(dict(document["fleet"][0]))


def _parallel_edge(document):
    edge = dict(document["road"]["edges"][1])
    edge["a"], edge["b"] = edge["b"], edge["a"]
    document["road"]["edges"].append(edge)


@pytest.mark.parametrize(
    "mutate, field",
    [
        (_set(("meta", "schema_version"), 2), "meta.schema_version"),
        (_set(("meta", "n_steps"), 23), "meta.n_steps"),
        (_set(("road", "edges", 0, "a"), "Z"), "road.edges[0].a"),
        (_set(("road", "edges", 0, "length_km"), 0.0), "road.edges[0].length_km"),
        (_drop_slack, "grid.slack_bus"),
        (_disconnect_bus, "grid.lines"),
        (_set(("grid", "lines", 0, "rating_kVA"), -1.0), "grid.lines[0].rating_kVA"),
        (_set(("stations", 1, "bus"), 99), "stations[1].bus"),
        (_set(("stations", 1, "intersection"), "Q"), "stations[1].intersection"),
        (_set(("stations", 1, "bus"), 8), "stations"),
        (_set(("fleet", 0, "P_min"), 10.0), "fleet[0].P_min"),
        (_set(("fleet", 0, "E_0"), 0.95), "fleet[0].E_0"),
        (_set(("fleet", 0, "E_cap"), 0.0), "fleet[0].E_cap"),
        (_set(("fleet", 0, "pf_min"), 1.5), "fleet[0].pf_min"),
        (_set(("fleet", 0, "dE_max"), "lots"), "fleet[0].dE_max"),
        (_duplicate_device, "fleet"),
        (_set(("limits", "dv_min_pu"), 0.5), "limits.dv_min_pu"),
        (_set(("options", "colour"), "blue"), "options.colour"),
        (_set(("options", "pin_start"), {"MESD1": "S9"}), "options.pin_start"),
        (_set(("profiles", "rush"), [1.0] * 5), "profiles.rush"),
        (_isolate_station, "road.edges"),
        (_parallel_edge, "road.edges[6].speed_profile_id"),
    ],
)
def test_invalid_documents_name_the_field(mutate, field):
    # GIVEN
    document = shipped_document("desk")
    mutate(document)

    # WHEN
    with pytest.raises(ScenarioValidationError) as exc:
        mesdopt.scenario_from_dict(document)

    # THEN
    assert exc.value.field == field
    assert str(exc.value).startswith(field + ":")


def test_dangling_profile_reference():
    # GIVEN
    document = shipped_document("desk")
    document["price_profile_id"] = "tariff"

    # WHEN
    with pytest.raises(ScenarioValidationError) as exc:
        mesdopt.scenario_from_dict(document)

    # THEN
    assert exc.value.field == "price_profile_id"
    assert "unknown profile 'tariff'" in str(exc.value)


def test_csv_profiles_resolve_relative_to_the_document(tmp_path):
    # GIVEN
    document = line_document(n_steps=4)
    document["profiles"]["load"] = {"csv": "load.csv"}
    (tmp_path / "load.csv").write_text("minutes,value\n0,1.0\n90,0.5\n180,0.25\n")
    path = write_document(tmp_path, document)

    # WHEN
    scenario = mesdopt.load_scenario(path)

    # THEN
    p_load, _ = scenario.grid.load_arrays()
    np.testing.assert_allclose(p_load[1], [200.0, 200.0, 100.0, 50.0])


def test_timestamped_inline_profile():
    # GIVEN
    document = line_document(n_steps=4)
    document["profiles"]["price"] = {"minutes": [0, 120], "values": [0.1, 0.3]}

    # WHEN
    scenario = mesdopt.scenario_from_dict(document)

    # THEN
    assert scenario.price == (0.1, 0.1, 0.3, 0.3)


def test_reverse_speed_profile_adds_the_opposite_edge(line):
    # THEN
    assert [(edge.a, edge.b) for edge in line.road.edges] == [("A", "B"), ("B", "A")]


def test_save_scenario_keeps_the_problem(tmp_path, desk):
    # GIVEN
    path = tmp_path / "canonical.json"

    # WHEN
    mesdopt.save_scenario(desk, path)
    loaded = mesdopt.load_scenario(path)

    # THEN
    assert loaded.fleet == desk.fleet
    assert loaded.price == desk.price
    assert loaded.stations == desk.stations
    assert loaded.grid.lines == desk.grid.lines
    np.testing.assert_allclose(loaded.grid.load_arrays()[0], desk.grid.load_arrays()[0])
    assert [e.speed_kmh for e in loaded.road.edges] == [
        e.speed_kmh for e in desk.road.edges
    ]
    assert loaded.options == desk.options
    assert loaded.limits == desk.limits


def test_station_lookup(desk):
    # THEN
    assert desk.stations.index_of("S3") == 2
    with pytest.raises(KeyError):
        desk.stations.index_of("S7")


def test_reactive_power_ratio():
    # GIVEN
    spec = mesdopt.MesdSpec("M", 100, -100, 500, 0.1, 0.9, 0.5, 0.1, 0.4, pf_min=0.8)

    # THEN
    assert spec.q_ratio == pytest.approx(math.sqrt(1 - 0.64) / 0.8)


def _negative_rating(document, rng):
    line = int(rng.integers(0, len(document["grid"]["lines"])))
    document["grid"]["lines"][line]["rating_kVA"] = -float(rng.uniform(1.0, 100.0))


def _stalled_road(document, rng):
    profile = document["road"]["edges"][0]["speed_profile_id"]
    step = int(rng.integers(0, document["meta"]["n_steps"]))
    document["profiles"][profile][step] = 0.0


def _overfull_start(document, rng):
    document["fleet"][0]["E_0"] = float(rng.uniform(0.91, 2.0))


def _unknown_bus(document, rng):
    station = int(rng.integers(0, len(document["stations"])))
    document["stations"][station]["bus"] = 1000 + station


def _short_profile(document, rng):
    document["profiles"]["price"].pop()


def _no_slack(document, rng):
    del document["grid"]["buses"][0]["slack"]


@pytest.mark.parametrize("seed", range(60))
def test_random_documents_load_and_their_corruptions_do_not(seed):
    # GIVEN
    rng = np.random.default_rng(seed)
    document = testing.random_scenario_document(
        rng, n_stations=2 + seed % 3, n_steps=4 + seed % 5, n_devices=1 + seed % 2
    )
    corrupt = copy.deepcopy(document)
    mutations = [
        _negative_rating,
        _stalled_road,
        _overfull_start,
        _unknown_bus,
        _short_profile,
        _no_slack,
    ]
    mutations[seed % len(mutations)](corrupt, rng)

    # WHEN
    scenario = mesdopt.scenario_from_dict(document)

    # THEN
    assert scenario.n_steps == 4 + seed % 5
    with pytest.raises(ScenarioValidationError):
        mesdopt.scenario_from_dict(corrupt)
