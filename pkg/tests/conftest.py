"""Shared pytest plumbing: the acceptance-criterion scoreboard.

The acceptance tests wrap each criterion's checks in a Criterion context
manager.  Results are recorded before the assertion unwinds, so a red
criterion still prints its line on the final scoreboard instead of
disappearing into a traceback.
"""
from __future__ import annotations

_RESULTS: dict[int, tuple[str, bool, str]] = {}


class Criterion:
    """Records pass/fail for one numbered acceptance criterion.

    Usage::

        with Criterion(3, "Reynolds bounds") as c:
            c.note(f"Re={value:.1f}")
            assert 21.0 <= value <= 23.0

    Leaving the block cleanly records a pass; any exception (assertion
    or otherwise) records a fail, then propagates so pytest still shows
    the test as failed.
    """

    def __init__(self, number: int, title: str):
        self.number = number
        self.title = title
        self.detail = ""

    def note(self, detail: str) -> None:
        self.detail = detail

    def __enter__(self) -> "Criterion":
        return self

    def __exit__(self, exc_type, exc, tb) -> bool:
        passed = exc_type is None
        detail = self.detail
        if not passed and not detail:
            detail = f"{getattr(exc_type, '__name__', exc_type)}: {exc}"
        _RESULTS[self.number] = (self.title, passed, detail)
        return False


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_RESULTS):
        title, passed, detail = _RESULTS[number]
        status = "PASS" if passed else "FAIL"
        line = f"criterion {number:2d} {status}  {title}"
        if detail:
            line += f"  ({detail})"
        tr.write_line(line, green=passed, red=not passed)
