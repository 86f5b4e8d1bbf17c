import pytest

_GATE: dict = {}


@pytest.fixture
def gate(request):
    """Record one acceptance verdict; printed together at the end of the session."""
    def record(criterion: int, passed: bool, detail: str) -> None:
        _GATE[criterion] = (passed, detail)
        print(f"criterion {criterion}: {'PASS' if passed else 'FAIL'}  {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if not _GATE:
        return
    terminalreporter.section("acceptance")
    for n in sorted(_GATE):
        passed, detail = _GATE[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if passed else 'FAIL'}  {detail}")
