import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from sklr.data import Dataset
from sklr.dual import DualState, Hyperparams
from sklr.kernel import KernelCache, KernelSpec

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

# acceptance report lines, printed at the end of the session
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def identity_state(alpha, y, C=1.0):
    """Dual state whose kernel matrix is exactly the identity (linear kernel on unit vectors)."""
    n = len(y)
    cache = KernelCache(KernelSpec.linear(), np.eye(n))
    return DualState(np.asarray(alpha, dtype=float), np.asarray(y, dtype=float), cache)


def random_state(rng, n=8, p=3, C=1.0, kernel=None):
    """Random interior feasible-box state (equality constraint not enforced)."""
    X = rng.uniform(size=(n, p))
    y = np.where(rng.uniform(size=n) < 0.5, -1.0, 1.0)
    y[0], y[1] = 1.0, -1.0
    alpha = rng.uniform(0.05 * C, 0.95 * C, size=n)
    cache = KernelCache(kernel or KernelSpec.gaussian(1.0), X)
    return DualState(alpha, y, cache), Hyperparams(C=C)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def two_points():
    return Dataset(np.array([[0.0], [1.0]]), np.array([1.0, -1.0]))
