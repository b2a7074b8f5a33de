import sys
from pathlib import Path

import pytest

from zapledger.gas import load_profiles

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def profiles():
    return load_profiles()


@pytest.fixture(scope="session")
def eth(profiles):
    return profiles["ethereum"]


@pytest.fixture(scope="session")
def quorum(profiles):
    return profiles["quorum"]


@pytest.fixture
def golden():
    return GOLDEN


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
