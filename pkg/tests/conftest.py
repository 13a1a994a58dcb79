import sys
from pathlib import Path

import pytest

from hc3lab import Material, model_constants

ROOT = Path(__file__).resolve().parent
sys.path.insert(0, str(ROOT / "oracles"))


@pytest.fixture(scope="session")
def golden():
    import json

    return json.loads((ROOT / "golden.json").read_text())


@pytest.fixture(scope="session")
def m10():
    return Material(1.0, 10.0)


@pytest.fixture(scope="session")
def consts_m10(m10):
    """Extrapolated constant bundle at (a, m) = (1, 10), alpha = alpha_0."""
    return model_constants(m10)


ACCEPTANCE_LINES = pytest.StashKey[list]()


@pytest.fixture
def acceptance_log(request):
    """Collects one pass/fail line per acceptance criterion for the terminal summary."""
    lines = request.config.stash.setdefault(ACCEPTANCE_LINES, [])

    def log(line):
        print(line)
        lines.append(line)

    return log


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
