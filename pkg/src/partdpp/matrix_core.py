"""Dense matrix primitives: Gram kernels, principal minors, row projections.

Feature matrices and kernels are plain ``float64`` numpy arrays. The
``as_features`` and ``as_kernel`` helpers validate inputs once at the API
boundary. Item indices are 0-based throughout the Python API.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import IndexOutOfRange, InvalidPartition, NotPSD, ZeroRow

PSD_TOL = 1e-8
# A row whose squared norm falls below this fraction of the largest original
# squared row norm counts as linearly dependent.
DEPENDENT_ROW_RTOL = 1e-12


def as_features(A) -> np.ndarray:
    A = np.array(A, dtype=np.float64)
    if A.ndim == 1:
        A = A[None, :]
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise ValueError(f"feature matrix must be 2-D and non-empty, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("feature matrix has non-finite entries")
    return A


def as_kernel(K, tol: float = PSD_TOL) -> np.ndarray:
    """Validate a kernel matrix and return a symmetrized copy.

    Symmetry is checked entrywise against ``1e-10 * (1 + |K_ij|)`` and then
    enforced by averaging with the transpose. Raises :class:`NotPSD` when the
    smallest eigenvalue is below ``-tol * lambda_max``.
    """
    K = np.array(K, dtype=np.float64)
    if K.ndim != 2 or K.shape[0] != K.shape[1] or K.shape[0] < 1:
        raise ValueError(f"kernel must be a non-empty square matrix, got shape {K.shape}")
    if not np.all(np.isfinite(K)):
        raise ValueError("kernel has non-finite entries")
    if np.any(np.abs(K - K.T) > 1e-10 * (1.0 + np.abs(K))):
        raise NotPSD("kernel is not symmetric")
    K = 0.5 * (K + K.T)
    lam = np.linalg.eigvalsh(K)
    lam_max = max(lam[-1], 0.0)
    if lam[0] < -tol * lam_max or (lam_max == 0.0 and lam[0] < 0.0):
        raise NotPSD(
            f"kernel has eigenvalue {lam[0]:.3e} below -{tol:g} * lambda_max ({lam_max:.3e})"
        )
    return K


@dataclass(frozen=True)
class PartitionSpec:
    """Disjoint partition of ``range(m)`` into ``p`` parts, plus per-part quotas.

    ``part_of[i]`` is the 0-based part label of item ``i``. Every label in
    ``range(p)`` must be used, so every part is non-empty.
    """

    part_of: tuple[int, ...]
    quotas: tuple[int, ...]

    def __post_init__(self):
        part_of = tuple(int(x) for x in self.part_of)
        quotas = tuple(int(x) for x in self.quotas)
        object.__setattr__(self, "part_of", part_of)
        object.__setattr__(self, "quotas", quotas)
        if not part_of:
            raise InvalidPartition("partition must cover at least one item")
        p = len(quotas)
        if p < 1:
            raise InvalidPartition("at least one quota is required")
        if min(part_of) < 0 or max(part_of) >= p:
            raise InvalidPartition(f"part labels must lie in [0, {p}) to match {p} quotas")
        sizes = self.part_sizes
        for l, (k_l, m_l) in enumerate(zip(quotas, sizes)):
            if m_l == 0:
                raise InvalidPartition(f"part {l + 1} is empty")
            if not 0 <= k_l <= m_l:
                raise InvalidPartition(
                    f"quota {k_l} for part {l + 1} exceeds its size {m_l}"
                    if k_l > m_l
                    else f"quota {k_l} for part {l + 1} is negative"
                )
        if sum(quotas) < 1:
            raise InvalidPartition("quotas must select at least one item")

    @classmethod
    def single(cls, m: int, k: int) -> "PartitionSpec":
        """One part holding every item: the plain cardinality constraint."""
        return cls((0,) * m, (k,))

    @classmethod
    def from_sizes(cls, sizes: Sequence[int], quotas: Sequence[int]) -> "PartitionSpec":
        """Contiguous parts: the first ``sizes[0]`` items form part 0, and so on."""
        return cls(tuple(np.repeat(np.arange(len(sizes)), sizes).tolist()), tuple(quotas))

    @property
    def m(self) -> int:
        return len(self.part_of)

    @property
    def p(self) -> int:
        return len(self.quotas)

    @property
    def k(self) -> int:
        return sum(self.quotas)

    @property
    def part_sizes(self) -> tuple[int, ...]:
        counts = [0] * len(self.quotas)
        for l in self.part_of:
            counts[l] += 1
        return tuple(counts)

    @property
    def labels(self) -> np.ndarray:
        return np.asarray(self.part_of, dtype=np.intp)

    def members(self, l: int) -> list[int]:
        return [i for i, lab in enumerate(self.part_of) if lab == l]

    def counts(self, subset: Iterable[int]) -> tuple[int, ...]:
        c = [0] * self.p
        for i in subset:
            c[self.part_of[i]] += 1
        return tuple(c)

    def satisfied_by(self, subset: Iterable[int]) -> bool:
        subset = list(subset)
        return len(set(subset)) == len(subset) and self.counts(subset) == self.quotas

    def with_quotas(self, quotas: Sequence[int]) -> "PartitionSpec":
        return PartitionSpec(self.part_of, tuple(quotas))


def check_subset(S: Iterable[int], m: int) -> list[int]:
    S = [int(i) for i in S]
    if len(set(S)) != len(S):
        raise IndexOutOfRange(f"subset has repeated indices: {S}")
    for i in S:
        if not 0 <= i < m:
            raise IndexOutOfRange(f"index {i} outside [0, {m})")
    return S


def gram(A) -> np.ndarray:
    """Return ``A @ A.T``, symmetrized exactly."""
    A = as_features(A)
    K = A @ A.T
    return 0.5 * (K + K.T)


def factor_kernel(K, tol: float = PSD_TOL) -> np.ndarray:
    """Spectral factor ``A`` with ``A @ A.T == K``.

    Eigenvalues in ``[-tol * lambda_max, 0)`` are clipped to zero; anything
    more negative raises :class:`NotPSD`. Columns belonging to zero
    eigenvalues are kept, so ``A`` is ``m x m``.
    """
    K = as_kernel(K, tol)
    lam, V = np.linalg.eigh(K)
    return V * np.sqrt(np.clip(lam, 0.0, None))


def principal_minor_det(K, S: Iterable[int]) -> float:
    """Determinant of ``K[S, S]``; 1.0 for the empty set."""
    K = np.asarray(K, dtype=np.float64)
    S = check_subset(S, K.shape[0])
    if not S:
        return 1.0
    return float(np.linalg.det(K[np.ix_(S, S)]))


def project_rows_orthogonal(B, i: int) -> np.ndarray:
    """Project every row of ``B`` onto the orthogonal complement of row ``i``.

    Row ``i`` of the result is set to exactly zero.
    """
    B = np.asarray(B, dtype=np.float64)
    if not 0 <= i < B.shape[0]:
        raise IndexOutOfRange(f"row {i} outside [0, {B.shape[0]})")
    norms2 = np.einsum("ij,ij->i", B, B)
    bi = B[i]
    nb = norms2[i]
    if nb <= DEPENDENT_ROW_RTOL * norms2.max() or nb == 0.0:
        raise ZeroRow(f"row {i} has squared norm {nb:.3e}")
    C = B - np.outer(B @ bi / nb, bi)
    C[i] = 0.0
    return C


def residual(A, S: Iterable[int]) -> np.ndarray:
    """``A - pi_S(A)``: rows of ``A`` with their component in span(A_S) removed.

    Rows of ``S`` that are (numerically) linearly dependent on the earlier ones
    are skipped rather than raising.
    """
    A = as_features(A)
    S = check_subset(S, A.shape[0])
    B = A.copy()
    floor = DEPENDENT_ROW_RTOL * np.einsum("ij,ij->i", A, A).max()
    for i in S:
        bi = B[i]
        nb = bi @ bi
        if nb <= floor or nb == 0.0:
            B[i] = 0.0
            continue
        B -= np.outer(B @ bi / nb, bi)
        B[i] = 0.0
    return B
