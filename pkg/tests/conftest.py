import pytest

ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


@pytest.fixture
def record():
    """Store a one-line verdict for the summary, then assert it."""

    def _record(number: int, title: str, ok: bool, detail: str = ""):
        status = "PASS" if ok else "FAIL"
        line = f"[{status}] criterion {number:2d}: {title}"
        if detail:
            line += f" | {detail}"
        ACCEPTANCE_LINES[number] = line
        print(line)
        assert ok, line

    return _record
