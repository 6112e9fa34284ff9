import math

import numpy as np
import pytest

from partdpp import EmptySupport, PartitionSpec, TooLarge
from partdpp.oracle import (
    brute_distribution,
    brute_map_opt,
    brute_marginal,
    brute_partition_function,
    enumerate_valid_subsets,
    iyer_mixture_value,
    oracle_det,
)

P22 = PartitionSpec.from_sizes([2, 2], [1, 1])
DIAG = np.diag([1.0, 2.0, 3.0, 4.0])


def test_oracle_det_small_and_bareiss():
    assert oracle_det([[2.0, 1.0], [1.0, 2.0]]) == pytest.approx(3.0)
    M = np.diag(np.arange(1.0, 9.0))
    M[0, 7] = M[7, 0] = 0.5
    # 8x8 goes through the fraction-free path
    expected = math.prod(range(2, 8)) * (1 * 8 - 0.25)
    assert oracle_det(M) == pytest.approx(expected, rel=1e-12)


def test_oracle_det_needs_pivoting():
    M = np.eye(8)[[1, 0, 2, 3, 4, 5, 6, 7]]
    assert oracle_det(M) == pytest.approx(-1.0)


def test_enumerate_example():
    assert enumerate_valid_subsets(P22) == [(0, 2), (0, 3), (1, 2), (1, 3)]


def test_enumerate_counts():
    P = PartitionSpec.from_sizes([3, 4, 2], [2, 2, 1])
    assert len(enumerate_valid_subsets(P)) == 3 * 6 * 2


def test_enumerate_too_large():
    with pytest.raises(TooLarge):
        enumerate_valid_subsets(PartitionSpec.from_sizes([40, 40], [10, 10]))


def test_partition_function_examples():
    assert brute_partition_function(np.eye(4), P22) == pytest.approx(4.0)
    assert brute_partition_function(DIAG, P22) == pytest.approx(21.0, abs=1e-10)


def test_distribution_identity():
    dist = brute_distribution(np.eye(4), P22)
    assert dist[(0, 2)] == pytest.approx(0.25)
    assert sum(dist.values()) == pytest.approx(1.0)


def test_distribution_diagonal():
    dist = brute_distribution(DIAG, P22)
    assert dist[(1, 3)] == pytest.approx(8 / 21)
    assert sum(dist.values()) == pytest.approx(1.0, abs=1e-14)


def test_distribution_empty_support():
    A = np.zeros((4, 2))
    A[:2] = [[1.0, 0.0], [2.0, 0.0]]
    A[2:] = [[0.0, 1.0], [0.0, 1.0]]
    with pytest.raises(EmptySupport):
        brute_distribution(A @ A.T, PartitionSpec.from_sizes([2, 2], [2, 1]))


class TestMarginal:
    def test_identity_first_step(self):
        assert [brute_marginal(np.eye(4), P22, [], i) for i in range(4)] == pytest.approx([0.25] * 4)

    def test_diagonal_first_step(self):
        probs = [brute_marginal(DIAG, P22, [], i) for i in range(4)]
        # Pr(i first) = sum over sets containing i of det / (2 Z)
        assert probs == pytest.approx([7 / 42, 14 / 42, 9 / 42, 12 / 42])

    def test_second_step(self):
        assert brute_marginal(DIAG, P22, [0], 2) == pytest.approx(3 / 7)
        assert brute_marginal(DIAG, P22, [0], 1) == 0.0
        assert brute_marginal(DIAG, P22, [0], 0) == 0.0

    def test_chain_gives_set_probability(self, rng):
        A = rng.standard_normal((5, 5))
        K = A @ A.T
        P = PartitionSpec((0, 1, 0, 1, 1), (1, 2))
        dist = brute_distribution(K, P)
        order = (3, 0, 4)
        chain = 1.0
        for t, i in enumerate(order):
            chain *= brute_marginal(K, P, order[:t], i)
        assert math.factorial(3) * chain == pytest.approx(dist[tuple(sorted(order))], rel=1e-12)

    def test_zero_probability_prefix(self):
        with pytest.raises(EmptySupport):
            brute_marginal(np.diag([0.0, 1, 1, 1]), P22, [0], 2)


class TestMapOpt:
    def test_diagonal_kernel(self):
        A = np.diag(np.sqrt([5.0, 2.0, 7.0]))
        S, val = brute_map_opt(A, 2)
        assert S == (0, 2)
        assert val == pytest.approx(35.0)

    def test_three_row_instance(self):
        A = np.array([[0.9, 0.9], [1.0, 0.0], [0.0, 1.0]])
        S, val = brute_map_opt(A, 2)
        assert S == (1, 2)
        assert val == pytest.approx(1.0)

    def test_ties_pick_first(self):
        S, val = brute_map_opt(np.eye(3), 2)
        assert (S, val) == ((0, 1), pytest.approx(1.0))


class TestMixtureValue:
    def test_counterexample(self):
        assert iyer_mixture_value(DIAG, P22) == pytest.approx(10.0, abs=1e-10)
        assert brute_partition_function(DIAG, P22) == pytest.approx(21.0, abs=1e-10)

    def test_matches_on_single_singleton_quota(self):
        # one part with quota 1: the mixture is the trace, as is Z
        K = np.diag([1.0, 2.0, 3.0])
        P = PartitionSpec.single(3, 1)
        assert iyer_mixture_value(K, P) == pytest.approx(brute_partition_function(K, P))

    def test_generic_mismatch(self, rng):
        A = rng.standard_normal((6, 6))
        K = A @ A.T
        P = PartitionSpec.from_sizes([3, 3], [1, 1])
        assert abs(iyer_mixture_value(K, P) - brute_partition_function(K, P)) > 1e-3
