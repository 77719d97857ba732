"""Shared test wiring.

The acceptance tests register one verdict line per criterion; the terminal
summary hook prints them after the run so the report survives pytest's
stdout capture regardless of pass/fail status.
"""

from typing import List

ACCEPTANCE_LINES: List[str] = []


def record_acceptance(line: str) -> None:
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.ensure_newline()
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
