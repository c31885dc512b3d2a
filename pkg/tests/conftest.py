import pytest

CRITERIA: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Record the verdict line for one acceptance criterion, then assert it."""

    def record(number: int, ok: bool, detail: str):
        CRITERIA[number] = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        print(CRITERIA[number])
        assert ok, CRITERIA[number]

    return record


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[n])
