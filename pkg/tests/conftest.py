import sys
from pathlib import Path

import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("repo", max_examples=100, deadline=None, derandomize=True)
settings.load_profile("repo")

ACCEPTANCE = {}


@pytest.fixture
def acceptance():
    """Record ``(criterion, ok, detail)``; the lines are printed in the summary."""

    def record(criterion, ok, detail=""):
        ACCEPTANCE[criterion] = (bool(ok), detail)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
