"""Shared fixtures and the acceptance-criterion report channel."""

import pytest

_LINES: list[str] = []


@pytest.fixture(scope="session")
def criterion_report():
    """Append 'criterion NN [PASS/FAIL] detail' lines; printed at the end."""

    def _report(line: str) -> None:
        _LINES.append(line)

    return _report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in _LINES:
        terminalreporter.write_line(line)
    try:
        with open("acceptance_report.txt", "w", encoding="utf-8") as fh:
            fh.write("\n".join(_LINES) + "\n")
    except OSError:
        pass
