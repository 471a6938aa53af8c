import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(Path(__file__).resolve().parent))


@pytest.fixture
def repo_root():
    return ROOT


@pytest.fixture
def scenarios_dir():
    return ROOT / "scenarios"


@pytest.fixture
def profiles_dir():
    return ROOT / "profiles"


def pytest_terminal_summary(terminalreporter):
    try:
        import test_acceptance
    except ImportError:
        return
    if not test_acceptance.VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(test_acceptance.VERDICTS):
        ok, detail = test_acceptance.VERDICTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
