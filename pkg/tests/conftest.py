import json
import sys
from pathlib import Path

import numpy as np
import pytest

HERE = Path(__file__).parent
sys.path.insert(0, str(HERE))  # makes tests/oracles.py importable

from gridcast.config import RunConfig  # noqa: E402
from gridcast.grid import parse_case  # noqa: E402

TWO_BUS = """
BUS
1 0.0 0.0 0.0
2 0.8 0.2 0.0
LINE
1 1 2 0.05 1.0
SLACK
1
CANDIDATE
1
"""

THREE_BUS = """
BUS
1 0.0 0.0 0.0
2 1.0 0.3 0.0
3 1.0 0.3 0.0
LINE
1 1 2 0.1 2.0
2 1 3 0.2 2.0
3 2 3 0.25 2.0
SLACK
1
CANDIDATE
1
3
"""

# two-bus and triangle cases for hand-solved injections (bus data unused)
TWO_BUS_INJECTED = """
BUS
1 0.0 0.0 0.0
2 0.0 0.0 0.0
LINE
1 1 2 0.1 5.0
SLACK
2
CANDIDATE
1
"""

TRIANGLE = """
BUS
1 0.0 0.0 0.0
2 0.0 0.0 0.0
3 0.0 0.0 0.0
LINE
1 1 2 0.1 5.0
2 1 3 0.1 5.0
3 2 3 0.1 5.0
SLACK
3
CANDIDATE
1
"""


@pytest.fixture(scope="session")
def derived():
    return json.loads((HERE / "fixtures" / "derived_values.json").read_text())


@pytest.fixture
def two_bus():
    return parse_case(TWO_BUS, "two_bus")


@pytest.fixture
def three_bus():
    return parse_case(THREE_BUS, "three_bus")


@pytest.fixture
def small_config(tmp_path):
    """A configuration that simulates and cross-validates in about a second."""
    return RunConfig().with_overrides({"sim.case": "toy5", "sim.days": 12, "out": str(tmp_path / "out")})


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# --- acceptance summary --------------------------------------------------------------

_ACCEPTANCE: dict[str, str] = {}
_SETUP_SECONDS: dict[str, float] = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rsplit("::", 1)[-1]
    if "test_acceptance" not in report.nodeid or not name.startswith("test_criterion_"):
        return
    if report.when == "setup":
        _SETUP_SECONDS[name] = report.duration  # shared fixtures such as the full sweep
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        status = "PASS" if report.outcome == "passed" else "FAIL"
        number = int(name.split("_")[2])
        seconds = report.duration + (_SETUP_SECONDS.get(name, 0.0) if report.when == "call" else 0.0)
        _ACCEPTANCE[name] = f"criterion {number:2d}: {status}  {name} ({seconds:.1f}s)"


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for name in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[name])
