import pytest

_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one acceptance line; the summary is printed at the end of the session."""

    def record(name: str, passed: bool, detail: str = "") -> bool:
        line = f"{'PASS' if passed else 'FAIL'}  {name}  {detail}".rstrip()
        _LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
