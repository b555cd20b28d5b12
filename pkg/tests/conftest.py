import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mechqsr.hilbert import fock, make_state  # noqa: E402


@pytest.fixture(scope="session")
def vacuum():
    return fock(0, 8)


@pytest.fixture(scope="session")
def fock1():
    return fock(1, 8)


@pytest.fixture(scope="session")
def coh08():
    return make_state("coherent", alpha=0.8)


@pytest.fixture(scope="session")
def cat17():
    return make_state("cat", dim=32, beta=1.7j)


@pytest.fixture(scope="session")
def thermal05():
    return make_state("thermal", dim=40, nbar=0.5)


@pytest.fixture(scope="session")
def test_states(vacuum, fock1, coh08, cat17, thermal05):
    return {"vacuum": vacuum, "fock1": fock1, "coherent0.8": coh08, "cat1.7i": cat17,
            "thermal0.5": thermal05}


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
