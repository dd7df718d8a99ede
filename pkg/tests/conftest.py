import pytest

_RESULTS: dict[str, tuple[bool, str]] = {}


class AcceptanceLog:
    def record(self, criterion: str, passed: bool, detail: str) -> bool:
        _RESULTS[criterion] = (bool(passed), detail)
        return bool(passed)


@pytest.fixture
def acceptance():
    return AcceptanceLog()


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_RESULTS, key=lambda k: int(k.split()[0])):
        passed, detail = _RESULTS[name]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] criterion {name}: {detail}")
