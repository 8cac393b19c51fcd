import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from stablewalk.kernel import AngularDensity, build_kernel

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def kernel_1d():
    """d = 1, alpha = 1.5, a0 = 1: the workhorse kernel."""
    return build_kernel(1, 1.5)


@pytest.fixture(scope="session")
def kernel_1d_slow():
    return build_kernel(1, 0.75)


@pytest.fixture(scope="session")
def kernel_2d_aniso():
    """d = 2, alpha = 1.5, a0 = 1 + 0.5 x1^2."""
    return build_kernel(2, 1.5, AngularDensity.cosine_poly(2, [1.0, 0.5]))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def verdict():
    """Record and print one PASS/FAIL line per acceptance criterion."""

    def record(number, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} C{number}: {detail}"
        print(line)
        ACCEPTANCE_LINES.append((number, line))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
