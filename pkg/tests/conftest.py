from __future__ import annotations

import pytest

_LINES: dict[int, str] = {}


@pytest.fixture
def acceptance_report():
    """Record one PASS/FAIL line per acceptance criterion; printed at session end."""

    def record(number: int, title: str, ok: bool, detail: str) -> bool:
        _LINES[number] = f"[{number}] {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        print(_LINES[number])
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_LINES):
            terminalreporter.write_line(_LINES[k])
