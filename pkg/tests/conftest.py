import sys
from pathlib import Path

import pytest

HERE = Path(__file__).parent
sys.path.insert(0, str(HERE))

FIXTURES = HERE / "fixtures"
SUITE = ("toy_n4", "rand_n6_L50", "rand_n6_L200", "rand_n8_L50", "rand_n8_L200")
ALL_FIXTURES = ("toy_n3", "toy_n4", "toy_n5", "toy_n6", "rand_n6_L50", "rand_n6_L200", "rand_n8_L50", "rand_n8_L200")


@pytest.fixture
def fixture_path():
    return lambda name: FIXTURES / f"{name}.txt"


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
