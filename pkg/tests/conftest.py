"""Shared pytest plumbing: the acceptance-criteria summary block.

Acceptance tests register one line per criterion; the hook prints them after
the normal test report so the verdicts are visible without -s.
"""

import pytest

ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_log():
    def log(line: str) -> None:
        ACCEPTANCE_LINES.append(line)
    return log


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
