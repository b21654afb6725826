import math

import numpy as np
import pytest

from treesync.graph import build_tree, incidence_matrix, path, random_tree, star

OMEGA = np.array([20.0, 3.0, 2.0, 1.0])
OMEGA_BAR = np.array([1.0, 10.0, 5.0, 6.0])
THETA0 = np.array([math.pi / 4, math.pi / 10, math.pi / 2, math.pi / 5])


@pytest.fixture
def star4():
    return star(4)


@pytest.fixture
def path4():
    return path(4)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def theta_from_deltas(g, deltas, offset=0.0):
    """Phases whose edge differences equal ``deltas`` (tree, so this is exact)."""
    B = incidence_matrix(g)
    theta = np.linalg.lstsq(B.T, np.asarray(deltas, dtype=float), rcond=None)[0]
    return theta + offset


def random_instance(rng, n_lo=2, n_hi=12, w_lo=0.1, w_hi=20.0):
    n = int(rng.integers(n_lo, n_hi + 1))
    g = random_tree(n, rng)
    return g, rng.uniform(w_lo, w_hi, n)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[number])
