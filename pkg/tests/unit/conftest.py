# SPDX-License-Identifier: Apache-2.0

import numpy as np
import pytest

import mesdopt

from .support import HIGHS
from .support import line_scenario


@pytest.fixture(autouse=True)
def single_thread(monkeypatch):
    monkeypatch.delenv(mesdopt._options.THREADS_ENV_VAR, raising=False)


@pytest.fixture(scope="session")
def desk():
    return mesdopt.load_scenario(mesdopt.shipped_scenario("desk"))


@pytest.fixture(scope="session")
def desk_pre(desk):
    return mesdopt.prepare(desk, HIGHS)


@pytest.fixture(scope="session")
def small_desk():
    return mesdopt.load_scenario(mesdopt.shipped_scenario("desk"), nk_override=6)


@pytest.fixture(scope="session")
def small_desk_pre(small_desk):
    return mesdopt.prepare(small_desk, HIGHS)


@pytest.fixture
def line():
    return line_scenario()


@pytest.fixture
def line_pre(line):
    return mesdopt.prepare(line, HIGHS)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
