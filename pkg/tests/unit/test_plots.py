# SPDX-License-Identifier: Apache-2.0

import xml.etree.ElementTree as ET

from matplotlib.colors import to_hex
import numpy as np
import pytest

import mesdopt
from mesdopt import _plots

from .support import schedule_row
from .support import write_schedule_csv

SVG = "{http://www.w3.org/2000/svg}"


@pytest.fixture
def journey(tmp_path, line):
    rows = [
        schedule_row(0, departure="S2", device="<MESD>&1"),
        schedule_row(1, station="transit", z_km="10.0", device="<MESD>&1"),
        schedule_row(2, station="S2", p_kw="50.0", device="<MESD>&1"),
        schedule_row(3, station="S2", device="<MESD>&1"),
    ]
    return mesdopt.read_schedule(write_schedule_csv(tmp_path, rows), line)


def _labels(ax):
    return [
        line.get_label()
        for line in ax.get_lines()
        if not line.get_label().startswith("_")
    ]


def test_write_report(tmp_path, journey):
    # WHEN
    written = _plots.write_report(journey, tmp_path / "charts")

    # THEN
    assert [path.name for path in written] == list(_plots.REPORT_FILES)
    for path in written:
        assert ET.parse(path).getroot().tag == f"{SVG}svg"


def test_write_report_is_repeatable(tmp_path, journey):
    # WHEN
    first = _plots.write_report(journey, tmp_path / "a")
    second = _plots.write_report(journey, tmp_path / "b")

    # THEN
    for one, two in zip(first, second):
        assert one.read_bytes() == two.read_bytes()


@pytest.mark.parametrize(
    "row, segments",
    [
        ([0, -1, 1, 1], [(0, 1, 0), (1, 1, -1), (2, 2, 1)]),
        ([2, 2, 2], [(0, 3, 2)]),
        ([-1], [(0, 1, -1)]),
        ([], []),
    ],
)
def test_position_segments(row, segments):
    # THEN
    assert _plots.position_segments(row) == segments


def test_position_chart_colors_each_stay(journey):
    # WHEN
    fig = _plots.position_chart(journey)

    # THEN
    (ax,) = fig.axes
    (bars,) = ax.collections
    assert [to_hex(color) for color in bars.get_facecolor()] == [
        _plots.PALETTE[0],
        _plots.TRANSIT_COLOR,
        _plots.PALETTE[1],
    ]
    legend = [text.get_text() for text in ax.get_legend().get_texts()]
    assert legend == ["transit", "S1", "S2"]
    assert [label.get_text() for label in ax.get_yticklabels()] == ["<MESD>&1"]


def test_power_chart(journey):
    # WHEN
    (ax,) = _plots.power_chart(journey).axes

    # THEN
    assert _labels(ax) == ["<MESD>&1 P", "<MESD>&1 Q"]
    active, reactive = ax.get_lines()[:2]
    np.testing.assert_allclose(active.get_ydata(), [0.0, 0.0, 50.0, 0.0, 0.0])
    assert reactive.get_linestyle() == ":"


@pytest.mark.parametrize(
    "baseline, labels",
    [
        (None, ["loss change"]),
        (np.full(4, 12.0), ["loss change", "baseline", "with storage"]),
    ],
)
def test_loss_chart(journey, baseline, labels):
    # WHEN
    (ax,) = _plots.loss_chart(journey, baseline).axes

    # THEN
    assert _labels(ax) == labels


def test_charts_without_devices(line):
    # GIVEN
    schedule = mesdopt.zero_schedule(line)

    # WHEN
    (power,) = _plots.power_chart(schedule).axes
    (positions,) = _plots.position_chart(schedule).axes
    (soc,) = _plots.soc_chart(schedule).axes

    # THEN
    assert not power.get_lines()
    assert power.get_legend() is None
    assert not positions.collections
    assert len(positions.get_legend().get_texts()) == 3
    assert soc.get_ylim() == (0.0, 1.0)
