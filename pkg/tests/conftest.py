from __future__ import annotations

import pytest

ACCEPTANCE_LINES: dict[str, str] = {}


@pytest.fixture
def record_criterion():
    """Store a one-line PASS/FAIL verdict for the acceptance summary."""

    def record(key: str, passed: bool, detail: str) -> bool:
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {key}: {detail}"
        ACCEPTANCE_LINES[key] = line
        print(line)
        return passed

    return record


def _sort_key(key: str):
    head = "".join(ch for ch in key if ch.isdigit())
    return int(head or 0), key


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=_sort_key):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
