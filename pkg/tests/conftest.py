import pytest

_LINES = {}


@pytest.fixture
def criterion():
    """``criterion(n, ok, detail)`` records one acceptance line and fails the test if not ok."""

    def record(n: int, ok: bool, detail: str):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}"
        _LINES[n] = line
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_LINES):
        terminalreporter.write_line(_LINES[n])
