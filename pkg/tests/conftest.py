import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conslaw.cli.problem import load_fixtures  # noqa: E402
from conslaw.jetexpr.oracle import OracleConfig  # noqa: E402


@pytest.fixture(scope="session")
def pf():
    return load_fixtures()


@pytest.fixture(scope="session")
def cfg():
    return OracleConfig()


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
