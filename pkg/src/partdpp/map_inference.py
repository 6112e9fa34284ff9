"""Greedy and swap local search for ``max_{|S|=k} det(A_S A_S^T)``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import RankTooLow
from .matrix_core import DEPENDENT_ROW_RTOL, as_features, project_rows_orthogonal

# values within this relative gap of the maximum count as ties (lowest index wins)
TIE_RTOL = 1e-12


@dataclass(frozen=True)
class MapResult:
    subset: list[int]
    log_det: float
    swaps_performed: int
    kappa: float
    log_det_greedy: float = math.nan
    # log det after each accepted swap, in order
    history: tuple[float, ...] = ()


def _argmax_lowest(values: np.ndarray) -> int:
    top = values.max()
    return int(np.flatnonzero(values >= top - TIE_RTOL * abs(top))[0])


def _log_det(A: np.ndarray, S) -> float:
    sign, ld = np.linalg.slogdet(A[S] @ A[S].T)
    return float(ld) if sign > 0 else -math.inf


def greedy_map(A, k: int) -> list[int]:
    """Add the row with the largest residual norm, ``k`` times.

    Each addition maximizes ``det(A_{S+i} A_{S+i}^T)``, since that equals
    ``det(A_S A_S^T)`` times the squared distance of ``a_i`` to span(A_S).
    Returns items in the order they were added.
    """
    A = as_features(A)
    m = A.shape[0]
    if not 1 <= k <= m:
        raise RankTooLow(f"k={k} is outside [1, {m}]")
    B = A.copy()
    norms0 = np.einsum("ij,ij->i", A, A)
    floor = DEPENDENT_ROW_RTOL * norms0.max()
    S: list[int] = []
    for step in range(k):
        norms = np.einsum("ij,ij->i", B, B)
        norms[S] = -np.inf
        i = _argmax_lowest(norms)
        if not norms[i] > floor:
            raise RankTooLow(f"rank of A is {step}, below k={k}")
        S.append(i)
        B = project_rows_orthogonal(B, i)
    return S


def _distances_without(A: np.ndarray, S: list[int], drop: int) -> np.ndarray:
    """Squared distances of every row to span of ``S`` minus ``S[drop]``."""
    rest = S[:drop] + S[drop + 1:]
    if not rest:
        return np.einsum("ij,ij->i", A, A)
    Q, _ = np.linalg.qr(A[rest].T)
    R = A - (A @ Q) @ Q.T
    return np.einsum("ij,ij->i", R, R)


def swap_cap(k: int, eps: float) -> int:
    return math.ceil(k * k * math.log(max(k, 2)) / eps) + k


def local_search_map(A, k: int, eps: float = 0.1) -> MapResult:
    """Greedy start, then best-improvement swaps while they gain a ``1 + eps/k`` factor.

    The swap ``i -> j`` multiplies the determinant by
    ``d(a_j, span(S - i))^2 / d(a_i, span(S - i))^2``, so each sweep needs one
    projection per member of ``S``.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    A = as_features(A)
    S = greedy_map(A, k)
    log_det_greedy = _log_det(A, S)
    m = A.shape[0]
    threshold = 1.0 + eps / k
    cap = swap_cap(k, eps)
    swaps = 0
    history = []
    while swaps < cap:
        best_gain, best_pair = threshold, None
        outside = np.ones(m, dtype=bool)
        outside[S] = False
        # iterate S in index order so that gain ties resolve to the lowest (i, j)
        for pos in sorted(range(k), key=lambda p: S[p]):
            d = _distances_without(A, S, pos)
            base = d[S[pos]]
            if base <= 0:
                continue
            ratios = np.where(outside, d / base, -np.inf)
            j = _argmax_lowest(ratios)
            if ratios[j] > best_gain * (1 + TIE_RTOL):
                best_gain, best_pair = ratios[j], (pos, j)
        if best_pair is None:
            break
        pos, j = best_pair
        S[pos] = j
        swaps += 1
        history.append(_log_det(A, S))
    return MapResult(S, _log_det(A, S), swaps, kappa(A, k), log_det_greedy, tuple(history))


def kappa(A, k: int) -> float:
    """``lambda_1 / mean(lambda_k..lambda_m)`` for the eigenvalues of ``A A^T``.

    Eigenvalues are sorted in decreasing order and 1-indexed; the mean runs
    over the ``m - k + 1`` items from position ``k`` onwards, zero eigenvalues
    included.
    """
    A = as_features(A)
    m = A.shape[0]
    if not 1 <= k <= m:
        raise RankTooLow(f"k={k} is outside [1, {m}]")
    s = np.linalg.svd(A, compute_uv=False)
    lam = np.zeros(m)
    lam[: s.size] = s[:m] ** 2
    lam = np.sort(lam)[::-1]
    tail = lam[k - 1:].sum()
    if tail <= 1e-12 * lam[0] * (m - k + 1):
        raise RankTooLow("tail eigenvalue mass is zero")
    return float(lam[0] / (tail / (m - k + 1)))
