from __future__ import annotations

import warnings

import pytest

from conic_shock.background import shoot_attached_shock
from conic_shock.gas import Freestream, GasModel

ACCEPTANCE: dict[int, str] = {}


@pytest.fixture(scope="session")
def gas14():
    return GasModel(1.0, 1.4)


@pytest.fixture(scope="session")
def fs50(gas14):
    return Freestream(gas14, 50.0, 1.0)


@pytest.fixture(scope="session")
def bg_ref(gas14, fs50):
    """gamma=1.4, b0=0.1, q0=50: the reference configuration."""
    return shoot_attached_shock(0.1, gas14, fs50)


@pytest.fixture(autouse=True)
def _quiet_smallness():
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="epsilon=.*not small", category=RuntimeWarning)
        yield


@pytest.fixture(scope="session")
def acceptance():
    return ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
