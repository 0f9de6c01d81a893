import pytest

_ACCEPTANCE: dict[str, tuple[str, str]] = {}


@pytest.fixture(scope="session")
def acceptance_log():
    def record(criterion: str, status: str, detail: str = "") -> None:
        _ACCEPTANCE[criterion] = (status, detail)
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(_ACCEPTANCE, key=lambda c: int(c.split()[0])):
        status, detail = _ACCEPTANCE[criterion]
        terminalreporter.write_line(f"{status:6s} criterion {criterion}: {detail}")
