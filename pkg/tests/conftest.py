import numpy as np
import pytest

from koopman_attractors import attractor, stability
from koopman_attractors.flow import builtin


@pytest.fixture(autouse=True)
def _fresh_memo():
    stability.clear_memo()
    attractor.clear_memo()
    yield


@pytest.fixture(scope="session")
def systems():
    """Built-in systems keyed by name; Hilmy uses a coarser internal step."""
    out = {name: builtin(name) for name in
           ("translation", "decay", "decay_box", "drain", "rotation", "north_south")}
    out["hilmy"] = builtin("hilmy", dt_internal=0.01)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one summary line per acceptance criterion, filled in by test_acceptance
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
