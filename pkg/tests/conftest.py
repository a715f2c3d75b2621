# plcforge
# MIT License
#
# Copyright (c) 2026 The plcforge developers
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software and associated documentation files (the "Software"), to deal
# in the Software without restriction, including without limitation the rights
# to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
# copies of the Software, and to permit persons to whom the Software is
# furnished to do so, subject to the following conditions:
#
# The above copyright notice and this permission notice shall be included in all
# copies or substantial portions of the Software.
#
# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
# AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
# LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
# OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
# SOFTWARE.
import sys
import os.path
import random
import tempfile

import pytest

from plcforge import LEGACY, AQUA
from plcforge.aquasec import harden_install
from plcforge.config import ForgeConfig
from plcforge.store import Store


TESTING_DATA = os.path.join(os.path.dirname(__file__), "testing_data")


class FakeClock:
    """
    A clock that only moves when told to
    """
    def __init__(self, start: float = 1_700_000_000.0):
        self.now = start

    def __call__(self) -> float:
        return self.now

    def advance(self, seconds: float) -> float:
        self.now += seconds
        return self.now


@pytest.fixture(scope="function")
def project_root():
    """
    Provide an empty project root folder, deleted after the test.
    """
    os.makedirs(TESTING_DATA, exist_ok=True)
    with tempfile.TemporaryDirectory(dir=TESTING_DATA) as folder:
        yield folder


@pytest.fixture(scope="function")
def fixed_rng():
    return random.Random(1234)


@pytest.fixture(scope="function")
def fake_clock():
    return FakeClock()


@pytest.fixture(scope="function")
def token_factory():
    counter = iter(range(1, 1_000_000))
    return lambda: f"{next(counter):064x}"


@pytest.fixture(scope="function")
def legacy_store(project_root, fixed_rng):
    return Store.init(project_root, LEGACY, rng=fixed_rng)


@pytest.fixture(scope="function")
def aqua_store(project_root, fixed_rng):
    return Store.init(project_root, AQUA, rng=fixed_rng)


@pytest.fixture(scope="function")
def hardened_store(aqua_store):
    harden_install(aqua_store)
    return aqua_store


@pytest.fixture(scope="session")
def fast_config():
    return ForgeConfig(scan_interval=0.005, compile_step_delay=0.0)


def pytest_report_header():
    return f"virtualenv: {sys.prefix}"
