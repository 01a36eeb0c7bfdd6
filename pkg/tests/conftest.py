import pytest

_criteria = {}


@pytest.fixture
def criterion():
    """Record one acceptance criterion: ``criterion(n, title, checks)``.

    ``checks`` maps a short description to a bool. The verdict line is
    printed immediately and repeated in the terminal summary.
    """

    def record(number, title, checks):
        ok = all(checks.values())
        detail = "; ".join(f"{k}: {'ok' if v else 'FAILED'}" for k, v in checks.items())
        line = f"criterion {number} {'PASS' if ok else 'FAIL'} - {title} ({detail})"
        _criteria[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(_criteria):
        terminalreporter.write_line(_criteria[number])
