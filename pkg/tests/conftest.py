import numpy as np
import pytest

from synclab.config import apply_override, build_config, reference_scenario
from synclab.sim import run

ACCEPTANCE_LINES = []


def scenario(observer_only=False, **overrides):
    doc = reference_scenario()
    for key, value in overrides.items():
        apply_override(doc, key.replace("__", "."), value)
    return build_config(doc, observer_only=observer_only or None)


@pytest.fixture(scope="session")
def reference_log():
    return run(scenario())


@pytest.fixture(scope="session")
def observer_logs():
    """Long observer-only runs keyed by mu; mu=1 gets the longer horizon."""
    horizons = {1.0: 400.0, 10.0: 200.0, 100.0: 200.0}
    return {mu: run(scenario(True, observer__mu=mu, sim__t_end=t)) for mu, t in horizons.items()}


@pytest.fixture(scope="session")
def short_log():
    return run(scenario(sim__t_end=3.0, sim__log_stride=1))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
