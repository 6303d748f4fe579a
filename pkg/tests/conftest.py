import numpy as np
import pytest

from randenv import jackson
from randenv.ctmc import RateKernel


def mm1_kernel(lam=0.5, mu=1.0, n_max=None):
    """Birth-death kernel on n >= 0; with ``n_max`` births above it are still offered (and dropped)."""

    def out(n):
        r = {n + 1: lam}
        if n > 0:
            r[n - 1] = mu
        return r

    def pred(n):
        return [n - 1, n + 1] if n > 0 else [n + 1]

    return RateKernel(out, pred)


@pytest.fixture
def two_site_env():
    nets = {
        "a": jackson.NetworkSpec([1.0, 0.0], [2.0, 1.5], [[0.0, 0.5], [0.0, 0.0]]),
        "b": jackson.NetworkSpec([0.5, 0.5], [3.0, 2.0], [[0.0, 0.3], [0.4, 0.0]]),
    }
    return jackson.EnvironmentSpec(["a", "b"], nets, alpha={"a": 1.0, "b": 2.5}, sigma={"a": 1.0, "b": 0.7},
                                   tau=lambda n, z, z2: 1.0 + n[0])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
