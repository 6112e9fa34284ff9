"""Characteristic-polynomial coefficients and constrained partition functions.

For a kernel ``K`` and a partition of its items into parts ``P_1..P_p``, the
multivariate characteristic polynomial is

    det(K - x_1 I_1 - ... - x_p I_p) = sum_i c[i_1, ..., i_p] x_1^i_1 ... x_p^i_p

where ``I_l`` is the diagonal indicator of part ``l``. The coefficient at
``(m_1 - k_1, ..., m_p - k_p)`` equals ``(-1)^(m-k)`` times the sum of
``det(K[S, S])`` over subsets ``S`` with exactly ``k_l`` items in part ``l``.

Coefficients are recovered by evaluating the determinant on a product grid of
scaled roots of unity and applying a per-axis DFT. The radius of each axis
controls which coefficients come out accurately: with radius ``r`` the
absolute error of ``c[i] * r**i`` is about machine epsilon times the largest
``|c[j]| * r**j``. :func:`balanced_radii` picks radii that make one target
coefficient the dominant term.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import IndexOutOfRange, InterpolationResidual
from .matrix_core import PartitionSpec, as_kernel

IMAG_RTOL = 1e-6
ZERO_RTOL = 1e-10
# complex128 elements per det batch; about 64 MB
_CHUNK_ELEMS = 1 << 22


@dataclass(frozen=True)
class CoeffTensor:
    """Coefficient tensor of shape ``(m_1 + 1, ..., m_p + 1)``.

    ``coeffs[i_1, ..., i_p]`` multiplies ``x_1^i_1 ... x_p^i_p``.
    """

    part_sizes: tuple[int, ...]
    coeffs: np.ndarray

    @property
    def shape(self) -> tuple[int, ...]:
        return self.coeffs.shape

    def __getitem__(self, idx):
        return self.coeffs[idx]


def elementary_symmetric(lam: np.ndarray, kmax: int | None = None) -> np.ndarray:
    """``e_0..e_kmax`` of the trailing axis of ``lam`` (batched over leading axes)."""
    lam = np.asarray(lam, dtype=np.float64)
    n = lam.shape[-1]
    kmax = n if kmax is None else min(kmax, n)
    e = np.zeros(lam.shape[:-1] + (kmax + 1,))
    e[..., 0] = 1.0
    for j in range(n):
        lj = lam[..., j, None]
        # right-hand side is evaluated before assignment, so this is the
        # e_j <- e_j + lam * e_{j-1} sweep with old values
        e[..., 1:] = e[..., 1:] + lj * e[..., :-1]
    return e


def char_coeffs_univariate(K) -> CoeffTensor:
    """Coefficients of ``det(K - xI)`` from the eigenvalues of ``K``.

    ``c[m - j] = (-1)^(m-j) e_j(lambda)``, so ``|c[m - k]|`` is the sum of all
    k-by-k principal minors.
    """
    K = as_kernel(K)
    m = K.shape[0]
    lam = np.clip(np.linalg.eigvalsh(K), 0.0, None)
    e = elementary_symmetric(lam)
    c = np.empty(m + 1)
    for j in range(m + 1):
        c[m - j] = (-1) ** (m - j) * e[j]
    return CoeffTensor((m,), c)


def default_radii(K: np.ndarray, sizes: Sequence[int]) -> np.ndarray:
    """Mean diagonal entry of each part's block (1.0 for an all-zero block)."""
    d = np.diag(K)
    radii = []
    start = 0
    for s in sizes:
        blk = d[start:start + s]
        start += s
        r = float(blk.mean()) if s else 1.0
        radii.append(r if r > 0 else 1.0)
    return np.array(radii)


def balanced_radii(K: np.ndarray, sizes: Sequence[int], quotas: Sequence[int]) -> np.ndarray:
    """Radii that make the coefficient for ``quotas`` the dominant grid term.

    ``K`` must have its parts contiguous in the order of ``sizes``. Each part
    is modelled by its own diagonal block: with ``e_q`` the elementary
    symmetric polynomials of the block eigenvalues, the term for ``q`` items
    from that part dominates when ``e_{q+1}/e_q <= r <= e_q/e_{q-1}``. These
    ratios decrease in ``q`` (Newton's inequalities), so the geometric mean of
    the two bounds sits inside the interval.
    """
    radii = []
    start = 0
    for s, q in zip(sizes, quotas):
        blk = K[start:start + s, start:start + s]
        start += s
        if s == 0:
            radii.append(1.0)
            continue
        lam = np.clip(np.linalg.eigvalsh(blk), 0.0, None)
        top = lam[-1]
        if top <= 0:
            radii.append(1.0)
            continue
        e = elementary_symmetric(lam / top)
        bounds = []
        if q >= 1 and e[q - 1] > 0 and e[q] > 0:
            bounds.append(np.log(e[q] / e[q - 1]))
        if q < s and e[q] > 0 and e[q + 1] > 0:
            bounds.append(np.log(e[q + 1] / e[q]))
        if bounds:
            r = top * float(np.exp(np.mean(bounds)))
        else:
            r = float(np.mean(lam))
        radii.append(r if np.isfinite(r) and r > 0 else 1.0)
    return np.array(radii)


def _grid_diagonals(sizes: Sequence[int], radii: np.ndarray) -> np.ndarray:
    """Diagonal shifts at every grid point, shape ``(G, m)``."""
    axes = [r * np.exp(2j * np.pi * np.arange(s + 1) / (s + 1)) for s, r in zip(sizes, radii)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in mesh], axis=1)
    labels = np.repeat(np.arange(len(sizes)), sizes)
    return pts[:, labels]


def _grid_dets(Ks: np.ndarray, shifts: np.ndarray) -> np.ndarray:
    """``det(K - diag(shift))`` for every matrix in ``Ks`` and every grid row.

    ``Ks`` has shape ``(b, m, m)`` and ``shifts`` has shape ``(G, m)``.
    Returns shape ``(b, G)``.
    """
    b, m, _ = Ks.shape
    G = shifts.shape[0]
    out = np.empty((b, G), dtype=np.complex128)
    if m == 0:
        out[:] = 1.0
        return out
    diag = np.arange(m)
    per_mat = max(1, _CHUNK_ELEMS // (m * m))
    # chunk over flattened (b, G) pairs
    flat = b * G
    for lo in range(0, flat, per_mat):
        hi = min(flat, lo + per_mat)
        bi = np.arange(lo, hi) // G
        gi = np.arange(lo, hi) % G
        M = Ks[bi].astype(np.complex128)
        M[:, diag, diag] -= shifts[gi]
        out.reshape(-1)[lo:hi] = np.linalg.det(M)
    return out


def _interpolate(Ks: np.ndarray, sizes: Sequence[int], radii: np.ndarray) -> np.ndarray:
    """Scaled coefficient tensors ``c[i] * prod(r_l ** i_l)`` for a batch.

    Returns a real array of shape ``(b, m_1 + 1, ..., m_p + 1)``.
    """
    shape = tuple(s + 1 for s in sizes)
    G = int(np.prod(shape))
    vals = _grid_dets(Ks, _grid_diagonals(sizes, radii))
    vals = vals.reshape((Ks.shape[0],) + shape)
    axes = tuple(range(1, len(shape) + 1))
    scaled = np.fft.fftn(vals, axes=axes) / G
    flat = np.abs(scaled).reshape(Ks.shape[0], -1)
    imag = np.abs(scaled.imag).reshape(Ks.shape[0], -1).max(axis=1)
    bound = IMAG_RTOL * flat.max(axis=1)
    bad = imag > bound
    if np.any(bad):
        j = int(np.argmax(bad))
        raise InterpolationResidual(
            f"imaginary residual {imag[j]:.3e} exceeds {bound[j]:.3e}"
        )
    return scaled.real


def _unscale(scaled: np.ndarray, radii: np.ndarray) -> np.ndarray:
    """Divide entry ``i`` of a single scaled tensor by ``prod(r_l ** i_l)``."""
    out = scaled
    for l, r in enumerate(radii):
        shape = [1] * out.ndim
        shape[l] = out.shape[l]
        out = out / (r ** np.arange(out.shape[l], dtype=np.float64)).reshape(shape)
    return out


def _zero_rows(K: np.ndarray, P: PartitionSpec) -> tuple[np.ndarray, np.ndarray]:
    """Items whose kernel row is exactly zero, and their count per part."""
    zero = ~np.any(K != 0.0, axis=1)
    per_part = np.bincount(P.labels[zero], minlength=P.p)
    return zero, per_part


def multichar_all_coeffs(K, P: PartitionSpec, radii: Sequence[float] | None = None) -> CoeffTensor:
    """Full coefficient tensor of ``det(K - sum_l x_l I_l)``.

    Items whose kernel row is exactly zero contribute a factor ``-x_l`` each
    and are factored out before interpolation. ``radii`` (one per part)
    override the default per-part scale; see :func:`balanced_radii`.
    """
    K = as_kernel(K)
    if K.shape[0] != P.m:
        raise ValueError(f"kernel is {K.shape[0]}x{K.shape[0]} but partition covers {P.m} items")
    zero, nz = _zero_rows(K, P)
    keep = ~zero
    sizes_full = P.part_sizes
    sizes = tuple(s - z for s, z in zip(sizes_full, nz))
    Kr, _ = _grouped_sub(K, P, keep)
    radii = default_radii(Kr, sizes) if radii is None else np.asarray(radii, dtype=np.float64)
    if radii.shape != (P.p,) or np.any(radii <= 0):
        raise ValueError("radii must be one positive value per part")
    coeffs = _unscale(_interpolate(Kr[None], sizes, radii)[0], radii)
    full = np.zeros(tuple(s + 1 for s in sizes_full))
    sign = -1.0 if int(nz.sum()) % 2 else 1.0
    full[tuple(slice(z, z + s + 1) for z, s in zip(nz, sizes))] = sign * coeffs
    return CoeffTensor(sizes_full, full)


def _grouped_sub(K: np.ndarray, P: PartitionSpec, keep: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Kept items of ``K`` reordered so parts are contiguous; returns (K', order)."""
    labels = P.labels
    idx = np.flatnonzero(keep)
    idx = idx[np.argsort(labels[idx], kind="stable")]
    return K[np.ix_(idx, idx)], idx


def _check_index(P: PartitionSpec, idx: Sequence[int]) -> tuple[int, ...]:
    idx = tuple(int(i) for i in idx)
    if len(idx) != P.p or any(not 0 <= i <= s for i, s in zip(idx, P.part_sizes)):
        raise IndexOutOfRange(f"coefficient index {idx} outside shape {tuple(s + 1 for s in P.part_sizes)}")
    return idx


def quota_coefficient(Kg: np.ndarray, sizes: Sequence[int], quotas: Sequence[int],
                      radii: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Signed coefficients for selecting ``quotas`` items from each part.

    Batched workhorse behind the public API and the sampler. ``Kg`` has shape
    ``(b, m, m)`` with parts contiguous in the order of ``sizes``. Returns
    ``(coeff, floor)`` arrays of length ``b``: the signed coefficient at
    index ``(m_l - q_l)`` and the magnitude below which it is treated as 0.

    Parts with quota 0 are dropped (their items cannot appear in any counted
    subset). A single remaining part goes through the eigenvalue route;
    several go through grid interpolation.
    """
    sizes = list(sizes)
    quotas = list(quotas)
    b = Kg.shape[0]
    m_full = sum(sizes)
    k = sum(quotas)
    sign = -1.0 if (m_full - k) % 2 else 1.0
    keep_parts = [l for l, q in enumerate(quotas) if q > 0]
    if not keep_parts:
        return np.full(b, sign), np.zeros(b)
    starts = np.cumsum([0] + sizes)
    keep = np.concatenate([np.arange(starts[l], starts[l + 1]) for l in keep_parts])
    if len(keep_parts) < len(sizes):
        Kg = Kg[:, keep[:, None], keep[None, :]]
        if radii is not None:
            radii = np.asarray(radii)[keep_parts]
    sizes = [sizes[l] for l in keep_parts]
    quotas = [quotas[l] for l in keep_parts]
    if any(q > s for q, s in zip(quotas, sizes)):
        return np.zeros(b), np.zeros(b)
    if len(sizes) == 1:
        lam = np.clip(np.linalg.eigvalsh(Kg), 0.0, None)
        top = lam[:, -1:]
        safe = np.where(top > 0, top, 1.0)
        e = elementary_symmetric(lam / safe)
        q = quotas[0]
        val = e[:, q] * safe[:, 0] ** q
        # a rank-deficient spectrum leaves e_q at about (rounding of one null
        # eigenvalue) * lambda_max * e_{q-1}; compare against that, not other degrees
        floor = ZERO_RTOL * e[:, q - 1] * safe[:, 0] ** q
        val = np.where(top[:, 0] > 0, val, 0.0)
        return sign * val, floor
    if radii is None:
        radii = balanced_radii(Kg[0], sizes, quotas)
    scaled = _interpolate(Kg, sizes, radii)
    target = tuple(s - q for s, q in zip(sizes, quotas))
    t_scaled = scaled[(slice(None),) + target]
    mag = np.abs(scaled).reshape(b, -1).max(axis=1)
    unscale = float(np.prod([r ** i for r, i in zip(radii, target)]))
    coeff = t_scaled / unscale
    floor = ZERO_RTOL * mag / unscale
    # the sign (-1)^(m-k) refers to the full item count, not the kept one
    coeff = coeff * (-1.0) ** (m_full - sum(sizes))
    return coeff, floor


def multichar_coeff(K, P: PartitionSpec, idx: Sequence[int]) -> float:
    """One coefficient of the multivariate characteristic polynomial.

    The interpolation radii are tuned for ``idx`` (see :func:`balanced_radii`),
    so this is usually more accurate than the same entry of
    :func:`multichar_all_coeffs` with default radii.
    """
    K = as_kernel(K)
    if K.shape[0] != P.m:
        raise ValueError(f"kernel is {K.shape[0]}x{K.shape[0]} but partition covers {P.m} items")
    idx = _check_index(P, idx)
    quotas = [s - i for s, i in zip(P.part_sizes, idx)]
    return _coeff_by_quotas(K, P, quotas)[0]


def _coeff_by_quotas(K: np.ndarray, P: PartitionSpec, quotas: Sequence[int]) -> tuple[float, float]:
    zero, nz = _zero_rows(K, P)
    sizes = [s - z for s, z in zip(P.part_sizes, nz)]
    Kr, _ = _grouped_sub(K, P, ~zero)
    # a zero row contributes -x_l: it shifts the degree in x_l by one and
    # flips the sign; the item itself can never be selected
    if any(q > s for q, s in zip(quotas, sizes)):
        return 0.0, 0.0
    coeff, floor = quota_coefficient(Kr[None], sizes, quotas)
    sign = -1.0 if int(nz.sum()) % 2 else 1.0
    return sign * float(coeff[0]), float(floor[0])


def constrained_partition_function(K, P: PartitionSpec) -> float:
    """Sum of ``det(K[S, S])`` over subsets meeting the partition quotas."""
    return signed_partition_coefficient(K, P)[1]


def signed_partition_coefficient(K, P: PartitionSpec) -> tuple[float, float]:
    """``(raw coefficient, Z)`` at index ``(m_l - k_l)``; Z is 0 below the floor."""
    K = as_kernel(K)
    if K.shape[0] != P.m:
        raise ValueError(f"kernel is {K.shape[0]}x{K.shape[0]} but partition covers {P.m} items")
    coeff, floor = _coeff_by_quotas(K, P, P.quotas)
    if abs(coeff) <= floor:
        return 0.0, 0.0
    return coeff, abs(coeff)
