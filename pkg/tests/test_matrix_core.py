import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from partdpp import (
    IndexOutOfRange,
    InvalidPartition,
    NotPSD,
    PartitionSpec,
    ZeroRow,
    factor_kernel,
    gram,
    principal_minor_det,
    project_rows_orthogonal,
    residual,
)
from partdpp.matrix_core import as_kernel

seeds = st.integers(0, 2**32 - 1)


def cofactor_det(M):
    n = len(M)
    if n == 0:
        return 1.0
    if n == 1:
        return M[0][0]
    return sum(
        (-1) ** j * M[0][j] * cofactor_det([r[:j] + r[j + 1:] for r in M[1:]]) for j in range(n)
    )


class TestGram:
    def test_identity(self):
        np.testing.assert_array_equal(gram(np.eye(2)), np.eye(2))

    def test_single_row(self):
        np.testing.assert_array_equal(gram([[3.0, 4.0]]), [[25.0]])

    def test_matches_triple_loop(self, rng):
        A = rng.standard_normal((5, 3))
        naive = [[sum(A[i, t] * A[j, t] for t in range(3)) for j in range(5)] for i in range(5)]
        K = gram(A)
        np.testing.assert_allclose(K, naive, rtol=1e-13, atol=1e-13)
        assert np.array_equal(K, K.T)

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            gram([[1.0, np.nan]])


class TestKernelValidation:
    def test_rejects_indefinite(self):
        with pytest.raises(NotPSD):
            as_kernel([[1.0, 2.0], [2.0, 1.0]])

    def test_rejects_asymmetric(self):
        with pytest.raises(NotPSD):
            as_kernel([[1.0, 0.5], [0.0, 1.0]])

    def test_tolerates_roundoff_negative(self):
        K = np.diag([1.0, -1e-12])
        as_kernel(K)


class TestFactorKernel:
    def test_diagonal(self):
        A = factor_kernel(np.diag([4.0, 9.0]))
        np.testing.assert_allclose(sorted(np.linalg.norm(A, axis=1)), [2.0, 3.0])
        assert abs(A[0] @ A[1]) < 1e-14

    def test_identity(self):
        A = factor_kernel(np.eye(3))
        np.testing.assert_allclose(A @ A.T, np.eye(3), atol=1e-14)

    def test_round_trip(self, rng):
        K = gram(rng.standard_normal((7, 4)))
        A = factor_kernel(K)
        assert np.linalg.norm(A @ A.T - K) <= 1e-8 * np.linalg.norm(K)

    def test_not_psd(self):
        with pytest.raises(NotPSD):
            factor_kernel(np.diag([1.0, -0.5]))


class TestPrincipalMinor:
    def test_identity(self):
        assert principal_minor_det(np.eye(4), [0, 2]) == 1.0

    def test_diagonal(self):
        assert principal_minor_det(np.diag([2.0, 3.0, 5.0]), [0, 2]) == pytest.approx(10.0)

    def test_empty(self):
        assert principal_minor_det(np.eye(3), []) == 1.0

    def test_cofactor_oracle(self, rng):
        K = gram(rng.standard_normal((6, 6)))
        for S in itertools.combinations(range(6), 3):
            sub = [[K[i, j] for j in S] for i in S]
            assert principal_minor_det(K, S) == pytest.approx(cofactor_det(sub), rel=1e-10)

    def test_out_of_range(self):
        with pytest.raises(IndexOutOfRange):
            principal_minor_det(np.eye(3), [3])

    @settings(max_examples=40, deadline=None)
    @given(seeds)
    def test_nonnegative(self, seed):
        r = np.random.default_rng(seed)
        m = int(r.integers(2, 9))
        K = gram(r.standard_normal((m, int(r.integers(1, m + 2)))))
        S = sorted(r.choice(m, size=int(r.integers(1, m + 1)), replace=False))
        bound = 1e-8 * (1 + np.linalg.norm(K[np.ix_(S, S)]) ** len(S))
        assert principal_minor_det(K, S) >= -bound


class TestProjection:
    def test_identity(self):
        np.testing.assert_array_equal(project_rows_orthogonal(np.eye(2), 0), [[0, 0], [0, 1]])

    def test_gram_schmidt_step(self):
        C = project_rows_orthogonal([[1.0, 0.0], [1.0, 1.0]], 0)
        np.testing.assert_allclose(C, [[0, 0], [0, 1]], atol=1e-15)

    def test_rows_orthogonal(self, rng):
        B = rng.standard_normal((6, 4))
        C = project_rows_orthogonal(B, 2)
        assert np.all(C[2] == 0)
        for c in C:
            assert abs(c @ B[2]) <= 1e-10 * np.linalg.norm(c) * np.linalg.norm(B[2]) + 1e-300

    def test_zero_row(self):
        with pytest.raises(ZeroRow):
            project_rows_orthogonal([[0.0, 0.0], [1.0, 1.0]], 0)

    @settings(max_examples=40, deadline=None)
    @given(seeds)
    def test_idempotent(self, seed):
        r = np.random.default_rng(seed)
        B = r.standard_normal((5, 3))
        b = B[1].copy()
        C = project_rows_orthogonal(B, 1)
        # project again along the original direction
        C2 = C - np.outer(C @ b / (b @ b), b)
        assert np.max(np.abs(C2 - C)) <= 1e-12


class TestResidual:
    def test_empty(self, rng):
        A = rng.standard_normal((4, 3))
        np.testing.assert_array_equal(residual(A, []), A)

    def test_identity(self):
        B = residual(np.eye(3), [1])
        np.testing.assert_array_equal(B, np.diag([1.0, 0.0, 1.0]))

    def test_orthogonal_to_span(self, rng):
        A = rng.standard_normal((7, 5))
        S = [1, 4, 6]
        B = residual(A, S)
        for b in B:
            for i in S:
                assert abs(b @ A[i]) <= 1e-10 * (np.linalg.norm(b) * np.linalg.norm(A[i]) + 1e-300)

    def test_skips_dependent_rows(self):
        A = np.array([[1.0, 0.0], [2.0, 0.0], [1.0, 1.0]])
        B = residual(A, [0, 1])
        np.testing.assert_allclose(B, [[0, 0], [0, 0], [0, 1]], atol=1e-15)

    @settings(max_examples=40, deadline=None)
    @given(seeds)
    def test_order_invariant(self, seed):
        r = np.random.default_rng(seed)
        m = int(r.integers(3, 9))
        A = r.standard_normal((m, m + 1))
        S = list(r.choice(m, size=int(r.integers(1, m)), replace=False))
        B1 = residual(A, S)
        B2 = residual(A, S[::-1])
        assert np.linalg.norm(B1 - B2) <= 1e-9 * np.linalg.norm(A)

    @settings(max_examples=60, deadline=None)
    @given(seeds)
    def test_schur_identity(self, seed):
        r = np.random.default_rng(seed)
        m = int(r.integers(2, 9))
        A = r.standard_normal((m, m + int(r.integers(0, 3))))
        perm = r.permutation(m)
        s = int(r.integers(1, m))
        S, T = list(perm[:s]), list(perm[s:s + int(r.integers(1, m - s + 1))])
        K = gram(A)
        B = residual(A, S)
        lhs = principal_minor_det(K, S + T)
        rhs = principal_minor_det(K, S) * principal_minor_det(gram(B), T)
        assert rhs == pytest.approx(lhs, rel=1e-8)


class TestPartitionSpec:
    def test_properties(self):
        P = PartitionSpec((0, 0, 1, 1, 1), (1, 2))
        assert (P.m, P.p, P.k, P.part_sizes) == (5, 2, 3, (2, 3))
        assert P.satisfied_by([1, 2, 4])
        assert not P.satisfied_by([0, 1, 2])

    def test_quota_exceeds_part(self):
        with pytest.raises(InvalidPartition, match="exceeds"):
            PartitionSpec.from_sizes([2, 2], [3, 0])

    def test_empty_part(self):
        with pytest.raises(InvalidPartition):
            PartitionSpec((0, 0, 2), (1, 0, 1))

    def test_zero_total(self):
        with pytest.raises(InvalidPartition):
            PartitionSpec.from_sizes([2, 2], [0, 0])
