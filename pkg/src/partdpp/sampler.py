"""Exact samplers for k-DPPs and partition-constrained DPPs.

Both samplers build the subset one item at a time. At step ``t`` with residual
matrix ``B = A - pi_S(A)``, item ``i`` of part ``j`` is drawn with probability

    ||b_i||^2 * Z_{C_i}(k - t - e_j) / ((k - t) * Z_B(k - t))

where ``C_i`` is ``B`` with every row projected orthogonally to ``b_i``, and
``Z_X(q)`` is the sum of ``det(X_T X_T^T)`` over subsets ``T`` that take
``q_l`` items from part ``l``. ``Z`` is the magnitude of one coefficient of the
multivariate characteristic polynomial; see :mod:`partdpp.charpoly`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .charpoly import balanced_radii, quota_coefficient, signed_partition_coefficient
from .errors import DeadEnd, EmptySupport, RankTooLow
from .matrix_core import (
    DEPENDENT_ROW_RTOL,
    PartitionSpec,
    as_features,
    check_subset,
    gram,
    principal_minor_det,
    project_rows_orthogonal,
)

PROB_CUTOFF = 1e-12
NORMALIZATION_RTOL = 1e-6


@dataclass
class SampleState:
    """Progress of one draw: chosen items, current residual, per-part counts."""

    chosen: list[int]
    B: np.ndarray
    counts: list[int]
    row_floor: float = field(default=0.0)

    @classmethod
    def initial(cls, A: np.ndarray, P: PartitionSpec) -> "SampleState":
        A = as_features(A)
        floor = DEPENDENT_ROW_RTOL * float(np.einsum("ij,ij->i", A, A).max())
        return cls([], A.copy(), [0] * P.p, floor)

    @classmethod
    def from_prefix(cls, A, P: PartitionSpec, prefix: Sequence[int]) -> "SampleState":
        A = as_features(A)
        prefix = check_subset(prefix, A.shape[0])
        state = cls.initial(A, P)
        counts = P.counts(prefix)
        if any(c > q for c, q in zip(counts, P.quotas)):
            raise EmptySupport("prefix exceeds a part quota")
        for i in prefix:
            bi = state.B[i]
            if not bi @ bi > state.row_floor:
                raise EmptySupport(f"prefix item {i} is dependent on the earlier ones")
            state.advance(i, int(P.labels[i]))
        return state

    @property
    def t(self) -> int:
        return len(self.chosen)

    def advance(self, i: int, part: int) -> None:
        self.B = project_rows_orthogonal(self.B, i)
        self.chosen.append(i)
        self.counts[part] += 1


def _remaining(P: PartitionSpec, state: SampleState) -> list[int]:
    return [k_l - t_l for k_l, t_l in zip(P.quotas, state.counts)]


def _active_items(P: PartitionSpec, state: SampleState, remaining: list[int]) -> np.ndarray:
    """Unchosen items in unsaturated parts, grouped by part (stable)."""
    labels = P.labels
    mask = np.ones(P.m, dtype=bool)
    mask[state.chosen] = False
    mask &= np.asarray(remaining)[labels] > 0
    idx = np.flatnonzero(mask)
    return idx[np.argsort(labels[idx], kind="stable")]


def _step_weights(P: PartitionSpec, state: SampleState) -> np.ndarray:
    """Unnormalized step weights ``||b_i||^2 |c'(C_i C_i^T)|`` for every item."""
    m = P.m
    labels = P.labels
    remaining = _remaining(P, state)
    active = _active_items(P, state, remaining)
    B = state.B[active]
    norms2 = np.einsum("ij,ij->i", B, B)
    lab = labels[active]
    sizes = np.bincount(lab, minlength=P.p)
    weights = np.zeros(m)
    for j in range(P.p):
        if remaining[j] == 0:
            continue
        local = np.flatnonzero((lab == j) & (norms2 > state.row_floor) & (norms2 > 0))
        if local.size == 0:
            continue
        q_next = list(remaining)
        q_next[j] -= 1
        if sum(q_next) == 0:
            weights[active[local]] = norms2[local]
            continue
        # rows kept for C_i: every active item except the candidate itself,
        # and none of part j if its quota is now exhausted
        sub_sizes = [int(s) for s in sizes]
        sub_sizes[j] -= 1
        if q_next[j] == 0:
            base = np.flatnonzero(lab != j)
            sub_sizes[j] = 0
            keep = np.broadcast_to(base, (local.size, base.size))
        else:
            keep = np.stack([np.delete(np.arange(active.size), c) for c in local])
        bi = B[local]
        coef = np.einsum("cmn,cn->cm", B[keep], bi) / norms2[local, None]
        C = B[keep] - coef[:, :, None] * bi[:, None, :]
        Gs = C @ C.transpose(0, 2, 1)
        radii = None
        if sum(1 for q in q_next if q > 0) > 1:
            # one radius set for the whole batch, tuned on the pre-projection
            # Gram of the kept rows
            proxy = B[keep[0]] @ B[keep[0]].T
            radii = balanced_radii(proxy, sub_sizes, q_next)
        coeff, floor = quota_coefficient(Gs, sub_sizes, q_next, radii)
        z = np.where(np.abs(coeff) > floor, np.abs(coeff), 0.0)
        weights[active[local]] = norms2[local] * z
    top = weights.max()
    if top > 0:
        weights[weights < PROB_CUTOFF * top] = 0.0
    return weights


def _residual_partition_function(P: PartitionSpec, state: SampleState) -> float:
    """``|c''(B B^T)|``: the constrained sum over completions of the current prefix."""
    remaining = _remaining(P, state)
    active = _active_items(P, state, remaining)
    B = state.B[active]
    sizes = np.bincount(P.labels[active], minlength=P.p)
    coeff, floor = quota_coefficient((B @ B.T)[None], [int(s) for s in sizes], remaining)
    return float(abs(coeff[0])) if abs(coeff[0]) > floor[0] else 0.0


def marginal_step_probs(A, P: PartitionSpec, state: SampleState) -> np.ndarray:
    """``Pr(X_{t+1} = i | X_1..X_t)`` for every item ``i``.

    Chosen items, items in parts whose quota is met, and items with a
    vanishing residual get exactly 0.
    """
    k = P.k
    t = state.t
    if t >= k:
        raise ValueError("state already holds k items")
    denom = _residual_partition_function(P, state)
    if denom <= 0:
        raise EmptySupport("the current prefix has zero probability")
    w = _step_weights(P, state)
    if not np.any(w > 0):
        raise DeadEnd(f"every step weight vanished at step {t}")
    return w / ((k - t) * denom)


def _draw(weights: np.ndarray, u: float) -> int:
    cdf = np.cumsum(weights)
    i = int(np.searchsorted(cdf, u * cdf[-1], side="right"))
    if i >= weights.size or weights[i] == 0.0:
        i = int(np.flatnonzero(weights)[-1])
    return i


def sample_partition_dpp(A, P: PartitionSpec, seed=None, *, check_normalization: bool = False) -> list[int]:
    """Draw ``S`` with ``|S & P_l| = k_l`` and ``Pr(S)`` proportional to ``det(A_S A_S^T)``.

    Returns the items in the order they were drawn. ``seed`` may be an int or
    a ``numpy.random.Generator``; each step consumes exactly one uniform.
    With ``check_normalization`` every step also verifies that the weights sum
    to ``(k - t) |c''|``.
    """
    A = as_features(A)
    if A.shape[0] != P.m:
        raise ValueError(f"feature matrix has {A.shape[0]} rows but partition covers {P.m} items")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    # det ratios are scale-free; normalizing keeps large-m products in range
    scale = float(np.sqrt(np.einsum("ij,ij->i", A, A).mean()))
    state = SampleState.initial(A / scale if scale > 0 else A, P)
    labels = P.labels
    for t in range(P.k):
        w = _step_weights(P, state)
        if not np.any(w > 0):
            if t == 0:
                raise EmptySupport("no subset meeting the quotas has positive determinant")
            raise DeadEnd(f"every step weight vanished at step {t}")
        if check_normalization:
            expected = (P.k - t) * _residual_partition_function(P, state)
            got = w.sum()
            if abs(got - expected) > NORMALIZATION_RTOL * expected:
                raise AssertionError(f"step {t}: weights sum to {got!r}, expected {expected!r}")
        i = _draw(w, rng.random())
        state.advance(i, int(labels[i]))
    return state.chosen


def sample_kdpp(A, k: int, seed=None) -> list[int]:
    """Draw a size-``k`` subset with probability proportional to ``det(A_S A_S^T)``."""
    A = as_features(A)
    if not 1 <= k <= A.shape[0]:
        raise RankTooLow(f"k={k} is outside [1, {A.shape[0]}]")
    try:
        return sample_partition_dpp(A, PartitionSpec.single(A.shape[0], k), seed)
    except (EmptySupport, DeadEnd) as exc:
        raise RankTooLow(f"k={k} exceeds the numerical rank of A") from exc


def exact_set_probability(A, P: PartitionSpec, S: Sequence[int]) -> float:
    """``det(A_S A_S^T) / Z`` for a subset meeting the quotas, else 0."""
    A = as_features(A)
    S = check_subset(S, A.shape[0])
    if not P.satisfied_by(S):
        return 0.0
    K = gram(A)
    _, Z = signed_partition_coefficient(K, P)
    if Z <= 0:
        raise EmptySupport("partition function is zero")
    return principal_minor_det(K, S) / Z
