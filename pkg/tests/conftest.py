import pytest

ACCEPTANCE = {}


@pytest.fixture
def record():
    def _record(criterion: int, ok: bool, detail: str):
        ACCEPTANCE[criterion] = (ok, detail)
    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
