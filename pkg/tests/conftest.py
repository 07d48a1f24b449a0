import pytest

_CRITERIA: dict = {}


@pytest.fixture
def record_criterion():
    """Store a one-line verdict that is echoed in the terminal summary."""

    def record(number: int, passed: bool, detail: str):
        # parametrized criteria report several times; all parts must pass
        if number in _CRITERIA:
            old_pass, old_detail = _CRITERIA[number]
            _CRITERIA[number] = (old_pass and passed, f"{old_detail}; {detail}")
        else:
            _CRITERIA[number] = (passed, detail)
        print(f"criterion {number}: {'PASS' if passed else 'FAIL'} {detail}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        passed, detail = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'} {detail}")
