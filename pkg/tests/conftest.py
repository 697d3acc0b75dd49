from __future__ import annotations

import functools

import pytest

# criterion number -> (title, status, detail); filled by tests/test_acceptance.py
CRITERIA: dict[int, tuple[str, str, str]] = {}


def criterion(number: int, title: str):
    """Record PASS/FAIL for an acceptance test; the function may return a detail string."""

    def wrap(fn):
        @functools.wraps(fn)
        def inner(*args, **kwargs):
            try:
                detail = fn(*args, **kwargs)
            except pytest.skip.Exception as exc:
                CRITERIA[number] = (title, "SKIP", str(exc))
                raise
            except BaseException as exc:
                CRITERIA[number] = (title, "FAIL", f"{type(exc).__name__}: {exc}".splitlines()[0])
                raise
            CRITERIA[number] = (title, "PASS", detail or "")

        return inner

    return wrap


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        title, status, detail = CRITERIA[number]
        line = f"[{status}] {number:>2}. {title}"
        if detail:
            line += f" -- {detail}"
        terminalreporter.write_line(line)
