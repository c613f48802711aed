# SPDX-License-Identifier: Apache-2.0

import copy
import json

import mesdopt

HIGHS = mesdopt.SolverOptions(solver="highs", lp_method="highs")

# random scenarios whose journeys take one to three steps
MULTI_STEP_ROADS = {
    "t_unit_h": 0.25,
    "length_km": (2.0, 4.0),
    "speed_kmh": (11.0, 30.0),
}

_LINE_FLEET = [
    {
        "name": "MESD1",
        "P_max": 200.0,
        "P_min": -200.0,
        "E_cap": 800.0,
        "E_min": 0.1,
        "E_max": 0.9,
        "E_0": 0.5,
        "dE_max": 0.2,
        "eta_transit": 0.5,
    }
]


def line_document(n_steps=4, n_stations=2, speeds=(30.0,), price=(0.1,)):
    """Stations along a straight road, each at one bus of a radial chain.

    Road segments are 10 km long; ``speeds`` is an inline profile shared by
    every segment in both directions.
    """
    intersections = [chr(ord("A") + n) for n in range(n_stations)]
    edges = [
        {
            "a": a,
            "b": b,
            "length_km": 10.0,
            "speed_profile_id": "speed",
            "reverse_speed_profile_id": "speed",
        }
        for a, b in zip(intersections, intersections[1:])
    ]
    buses = [{"id": 0, "base_kV": 12.66, "slack": True}]
    lines = []
    for b in range(1, n_stations + 1):
        buses.append(
            {
                "id": b,
                "base_kV": 12.66,
                "p_profile": "load",
                "p_scale_kw": 150.0 + 50.0 * b,
                "q_profile": "load",
                "q_scale_kvar": 60.0 + 20.0 * b,
            }
        )
        lines.append(
            {
                "from": b - 1,
                "to": b,
                "r_pu": 0.02,
                "x_pu": 0.01,
                "rating_kVA": 2000.0,
            }
        )
    return {
        "meta": {
            "name": "line",
            "horizon_h": float(n_steps),
            "t_unit_h": 1.0,
            "n_steps": n_steps,
        },
        "profiles": {
            "speed": list(speeds),
            "load": [1.0],
            "price": list(price),
        },
        "road": {"intersections": intersections, "edges": edges},
        "grid": {"buses": buses, "lines": lines},
        "stations": [
            {"id": f"S{n + 1}", "intersection": node, "bus": n + 1}
            for n, node in enumerate(intersections)
        ],
        "fleet": copy.deepcopy(_LINE_FLEET),
        "price_profile_id": "price",
        "limits": {"dv_max_pu": 0.05, "dv_min_pu": -0.05, "dl_max_frac": 0.5},
        "options": {},
    }


def line_scenario(**kwargs):
    return mesdopt.scenario_from_dict(line_document(**kwargs))


def write_document(directory, document, name="scenario.json"):
    path = directory / name
    path.write_text(json.dumps(document), encoding="utf-8")
    return path


def shipped_document(name):
    path = mesdopt.shipped_scenario(name)
    return json.loads(path.read_text(encoding="utf-8"))


def knapsack_model():
    """max 5a + 4b + 3c s.t. 2a + 3b + c <= 5, written as a minimization."""
    model = mesdopt.MilpModel("knapsack")
    for name in ("a", "b", "c"):
        model.add_variable(name, kind=mesdopt.VarKind.BINARY)
    model.add_constraint(
        {"a": 2.0, "b": 3.0, "c": 1.0}, mesdopt.RowSense.LE, 5.0, "weight"
    )
    model.set_objective({"a": -5.0, "b": -4.0, "c": -3.0})
    return model.freeze()


def schedule_row(
    step,
    station="S1",
    *,
    soc="0.5",
    departure="",
    p_kw="0.0",
    dploss_kw="0.0",
    z_km="0.0",
    device="MESD1",
):
    """One CSV row of a device that only discharges (``Pd == P``)."""
    values = {
        "device": device,
        "step": str(step),
        "station": station,
        "y": "1" if station == "transit" else "0",
        "w": "0",
        "departure": departure,
        "P_kw": p_kw,
        "Q_kvar": "0.0",
        "Pc_kw": "0.0",
        "Pd_kw": p_kw,
        "soc": soc,
        "z_km": z_km,
        "dploss_kw": dploss_kw,
    }
    return ",".join(values[column] for column in mesdopt._schedule.SCHEDULE_COLUMNS)


def write_schedule_csv(directory, rows, header=None):
    path = directory / "schedule.csv"
    header = header or ",".join(mesdopt._schedule.SCHEDULE_COLUMNS)
    path.write_text("\n".join([header, *rows]) + "\n", encoding="utf-8")
    return path
