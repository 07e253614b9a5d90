import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

_CRITERIA = {}


@pytest.fixture
def criterion():
    """Record one acceptance line; printed again in the terminal summary."""

    def record(num: int, ok: bool, detail: str) -> bool:
        line = f"criterion {num:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _CRITERIA[num] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for num in sorted(_CRITERIA):
        terminalreporter.write_line(_CRITERIA[num])
