import pytest

CRITERIA: dict[int, str] = {}


@pytest.fixture
def criterion_report():
    """Record one PASS/FAIL line per acceptance criterion."""
    def record(number: int, passed: bool, detail: str) -> str:
        line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        CRITERIA[number] = line
        print(line)
        return line
    return record


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[n])
