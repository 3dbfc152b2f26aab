import pytest

_CRITERIA = []


@pytest.fixture
def criterion():
    """Record one acceptance verdict; the lines are echoed in the summary."""

    def record(number, title, passed, detail=""):
        line = f"CRITERION {number} [{'PASS' if passed else 'FAIL'}] {title}"
        if detail:
            line += f" :: {detail}"
        _CRITERIA.append((number, line))
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_CRITERIA, key=lambda item: item[0]):
        terminalreporter.write_line(line)
