import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from mrlsr import TrainingSet

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_set(rng, n, d, scale=1.0):
    return TrainingSet(rng.random((n, d)), scale * rng.standard_normal(n))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line per acceptance criterion and return the verdict."""
    lines = request.config.stash.setdefault(ACCEPTANCE, [])

    def record(number, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'} | {detail}"
        lines.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
