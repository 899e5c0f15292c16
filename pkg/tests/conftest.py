import pytest

from aggrolab.rng import Stream

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def stream():
    return Stream(20240601)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
