import numpy as np
import pytest

from optrecovery.domains import Disk, Interval
from optrecovery.modulus import ModulusSpec
from optrecovery.recovery import InfoSpec, RecoveryMethod

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_modulus(rng):
    kind = rng.integers(0, 3)
    if kind == 0:
        return ModulusSpec.power(rng.uniform(0.2, 3), rng.uniform(0.2, 1.0))
    if kind == 1:
        return ModulusSpec.capped_linear(rng.uniform(0.2, 3), rng.uniform(0.05, 1.0))
    slopes = np.sort(rng.uniform(0.1, 3, size=3))[::-1]
    ts = np.concatenate([[0], np.cumsum(rng.uniform(0.1, 0.8, size=3))])
    vs = np.concatenate([[0], np.cumsum(slopes * np.diff(ts))])
    return ModulusSpec.piecewise(list(zip(ts, vs)))


def random_method(rng, domain, variant="plain"):
    n = int(rng.integers(1, 7))
    g = domain.build_grid(40)
    q = g.nodes[rng.choice(g.size, n, replace=False)]
    e = rng.uniform(0, 0.2, n) * (rng.random(n) < 0.7)
    return RecoveryMethod(random_modulus(rng), InfoSpec(q, e), domain, variant)


@pytest.fixture
def unit():
    return Interval(0.0, 1.0)


@pytest.fixture
def lip():
    return ModulusSpec.lipschitz()


@pytest.fixture
def disk():
    return Disk((0.0, 0.0), 1.0)
