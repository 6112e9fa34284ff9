import numpy as np
import pytest

from partdpp import PartitionSpec

# filled by test_acceptance.py; printed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_partition(rng, m, p, min_k=1, max_k=None):
    """Random labels using every part, plus random feasible quotas."""
    labels = np.concatenate([np.arange(p), rng.integers(0, p, m - p)])
    rng.shuffle(labels)
    sizes = np.bincount(labels, minlength=p)
    max_k = m if max_k is None else max_k
    while True:
        quotas = [int(rng.integers(0, s + 1)) for s in sizes]
        if min_k <= sum(quotas) <= max_k:
            return PartitionSpec(tuple(int(x) for x in labels), tuple(quotas))


def random_features(rng, m, n):
    # row scales spread the determinants out a little
    return rng.standard_normal((m, n)) * rng.uniform(0.5, 2.0, size=(m, 1))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
