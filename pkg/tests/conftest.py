import numpy as np
import pytest

from subid.kalman import kalman_model
from subid.lti import preset_model


@pytest.fixture(scope="session")
def stable_system():
    return preset_model("two_mass_stable")


@pytest.fixture(scope="session")
def marginal_system():
    return preset_model("two_mass_marginal")


@pytest.fixture(scope="session")
def stable_model(stable_system):
    return kalman_model(stable_system)


@pytest.fixture(scope="session")
def marginal_model(marginal_system):
    return kalman_model(marginal_system)


@pytest.fixture
def rng():
    return np.random.default_rng(20240501)


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record one acceptance verdict; the lines are printed in the terminal summary."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def report(number, title, ok, detail):
        lines.append((number, title, bool(ok), detail))
        return bool(ok)

    return report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, ok, detail in sorted(lines):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} | {detail}")
