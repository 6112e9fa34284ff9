"""Brute-force reference computations for small instances.

Everything here enumerates subsets or ordered tuples literally and evaluates
determinants with its own pure-Python routines (cofactor expansion up to 6x6,
Bareiss elimination above). Nothing is shared with the fast paths, so
agreement between the two is meaningful evidence.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import EmptySupport, TooLarge
from .matrix_core import PartitionSpec

MAX_SUBSETS = 10**6


def _cofactor_det(M: list[list[float]]) -> float:
    n = len(M)
    if n == 0:
        return 1.0
    if n == 1:
        return M[0][0]
    if n == 2:
        return M[0][0] * M[1][1] - M[0][1] * M[1][0]
    total = 0.0
    for j in range(n):
        if M[0][j] == 0.0:
            continue
        minor = [row[:j] + row[j + 1:] for row in M[1:]]
        total += (-1) ** j * M[0][j] * _cofactor_det(minor)
    return total


def _bareiss_det(M: list[list[float]]) -> float:
    # fraction-free elimination with row pivoting on the largest entry
    A = [row[:] for row in M]
    n = len(A)
    sign = 1.0
    prev = 1.0
    for k in range(n - 1):
        piv = max(range(k, n), key=lambda r: abs(A[r][k]))
        if A[piv][k] == 0.0:
            return 0.0
        if piv != k:
            A[k], A[piv] = A[piv], A[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i][j] = (A[i][j] * A[k][k] - A[i][k] * A[k][j]) / prev
        prev = A[k][k]
    return sign * A[n - 1][n - 1]


def oracle_det(M) -> float:
    rows = [[float(x) for x in row] for row in np.asarray(M, dtype=np.float64)]
    if len(rows) <= 6:
        return _cofactor_det(rows)
    return _bareiss_det(rows)


def _minor(K: np.ndarray, S: Sequence[int]) -> float:
    return oracle_det([[K[i, j] for j in S] for i in S])


def enumerate_valid_subsets(P: PartitionSpec) -> list[tuple[int, ...]]:
    """All subsets meeting the quotas, as sorted tuples in lexicographic order."""
    count = math.prod(math.comb(m_l, k_l) for m_l, k_l in zip(P.part_sizes, P.quotas))
    if count > MAX_SUBSETS:
        raise TooLarge(f"{count} valid subsets exceeds the limit of {MAX_SUBSETS}")
    per_part = [itertools.combinations(P.members(l), k_l) for l, k_l in enumerate(P.quotas)]
    return sorted(tuple(sorted(itertools.chain.from_iterable(c))) for c in itertools.product(*per_part))


def brute_partition_function(K, P: PartitionSpec) -> float:
    K = np.asarray(K, dtype=np.float64)
    return sum(_minor(K, S) for S in enumerate_valid_subsets(P))


def brute_distribution(K, P: PartitionSpec) -> dict[tuple[int, ...], float]:
    """Exact constrained-DPP probabilities keyed by sorted index tuples."""
    K = np.asarray(K, dtype=np.float64)
    subsets = enumerate_valid_subsets(P)
    weights = [_minor(K, S) for S in subsets]
    Z = sum(weights)
    if Z <= 0.0:
        raise EmptySupport("no valid subset has positive determinant")
    return {S: w / Z for S, w in zip(subsets, weights)}


def brute_marginal(K, P: PartitionSpec, prefix: Sequence[int], i: int) -> float:
    """``Pr(X_{t+1} = i | X_1..X_t = prefix)`` by summing ordered-tuple probabilities.

    A k-tuple of distinct items meeting the quotas has probability
    ``det(K[S, S]) / (k! Z)``; every other tuple has probability 0.
    """
    K = np.asarray(K, dtype=np.float64)
    prefix = [int(x) for x in prefix]
    k = P.k
    t = len(prefix)
    if t >= k:
        raise ValueError("prefix already has k items")
    free = P.m - t
    n_tuples = math.perm(free, k - t)
    if n_tuples > MAX_SUBSETS:
        raise TooLarge(f"{n_tuples} completions exceeds the limit of {MAX_SUBSETS}")

    @lru_cache(maxsize=None)
    def weight(key: tuple[int, ...]) -> float:
        return _minor(K, key)

    def tuple_weight(tup: tuple[int, ...]) -> float:
        if len(set(tup)) != k or P.counts(tup) != P.quotas:
            return 0.0
        return weight(tuple(sorted(tup)))

    rest = [x for x in range(P.m) if x not in prefix]
    den = sum(tuple_weight(tuple(prefix) + c) for c in itertools.permutations(rest, k - t))
    if den <= 0.0:
        raise EmptySupport("prefix has zero probability")
    if i in prefix:
        return 0.0
    rest_i = [x for x in rest if x != i]
    num = sum(tuple_weight(tuple(prefix) + (i,) + c) for c in itertools.permutations(rest_i, k - t - 1))
    return num / den


def brute_map_opt(A, k: int) -> tuple[tuple[int, ...], float]:
    """Exact ``argmax_{|S|=k} det(A_S A_S^T)``; the first maximizer in lexicographic order wins."""
    A = np.asarray(A, dtype=np.float64)
    m = A.shape[0]
    if math.comb(m, k) > MAX_SUBSETS:
        raise TooLarge(f"C({m}, {k}) exceeds the limit of {MAX_SUBSETS}")
    rows = [list(map(float, r)) for r in A]
    best, best_val = None, -math.inf
    for S in itertools.combinations(range(m), k):
        G = [[sum(x * y for x, y in zip(rows[i], rows[j])) for j in S] for i in S]
        v = oracle_det(G)
        if v > best_val:
            best, best_val = S, v
    return best, best_val


def iyer_mixture_value(K, P: PartitionSpec) -> float:
    """Per-part mixture of cardinality-constrained partition functions.

    Computes ``sum_l sum_{c=1..k_l} sum_{T in P_l, |T|=c} det(K[T, T])``. This
    is the value a per-part factorization of the partition function would
    produce; it is not the Partition-DPP normalizer.
    """
    K = np.asarray(K, dtype=np.float64)
    total = 0.0
    for l, k_l in enumerate(P.quotas):
        members = P.members(l)
        for c in range(1, k_l + 1):
            if math.comb(len(members), c) > MAX_SUBSETS:
                raise TooLarge(f"part {l + 1} has too many {c}-subsets")
            total += sum(_minor(K, T) for T in itertools.combinations(members, c))
    return total
