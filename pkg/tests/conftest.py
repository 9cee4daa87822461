import numpy as np
import pytest
from hypothesis import settings

from deltaconsensus.graph import random_connected_graph

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

ACCEPTANCE_LINES = []


@pytest.fixture
def gen():
    return np.random.default_rng(12345)


def connected_graphs(seed, count, n_lo=2, n_hi=8, p=0.5):
    gen = np.random.default_rng(seed)
    return [random_connected_graph(int(gen.integers(n_lo, n_hi + 1)), gen, p) for _ in range(count)]


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
