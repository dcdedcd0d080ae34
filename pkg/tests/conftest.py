import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from spherepack import preset  # noqa: E402

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def bsc():
    return preset("bsc", p=0.1)


@pytest.fixture(scope="session")
def mixed():
    return preset("mixed-hadamard", eps=0.1)


@pytest.fixture(scope="session")
def pure():
    return preset("pure-hadamard")


@pytest.fixture(scope="session")
def bec():
    return preset("bec", e=0.3)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
