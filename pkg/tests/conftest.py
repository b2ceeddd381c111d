import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from blackbox_attack.data import mnist_dir
from blackbox_attack.ndcore import SeededRng

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return SeededRng(1234)


@pytest.fixture
def blobs():
    from blackbox_attack.data import synth_blobs

    return synth_blobs(3, 8, 40, 0.05, SeededRng(7))


requires_mnist = pytest.mark.skipif(mnist_dir() is None, reason="MNIST IDX files not available (set MNIST_DIR)")


def central_difference(f, x, h=1e-6):
    x = np.asarray(x, dtype=np.float64)
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e.flat[i] = h
        g.flat[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """``criterion(n, passed, detail)`` records one acceptance line; the lines
    are printed together at the end of the run."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def record(n, passed, detail):
        line = f"criterion {n:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        lines.append((n, line))
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
