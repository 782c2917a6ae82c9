import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

DATA = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "data")


def two_cliques(size=4):
    n = 2 * size
    a = np.zeros((n, n), dtype=np.uint8)
    for lo in (0, size):
        a[lo:lo + size, lo:lo + size] = 1
    np.fill_diagonal(a, 0)
    return a


def random_instance(rng, n, K, L=None, symmetric=False, density=None):
    p = rng.uniform(0.1, 0.6) if density is None else density
    a = (rng.random((n, n)) < p).astype(np.uint8)
    if symmetric:
        a = np.triu(a, 1)
        a = a | a.T
    np.fill_diagonal(a, 0)
    L = n if L is None else L
    block_of = np.concatenate([np.arange(L), rng.integers(0, L, n - L)])
    rng.shuffle(block_of)
    return a, tuple(int(b) for b in block_of)


@pytest.fixture
def data_dir():
    return DATA


def pytest_terminal_summary(terminalreporter):
    # repeat the acceptance lines so they survive output capture
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for number in sorted(lines):
            terminalreporter.write_line(lines[number])
