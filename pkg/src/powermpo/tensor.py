"""Dense tensor kernel: index contraction and truncated SVD.

Tensors are plain ``numpy.ndarray`` objects of dtype float64 in C (row-major)
order. Every other module funnels its linear algebra through the two functions
here so that truncation semantics live in one place.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import NumericalError, ValidationError

DEFAULT_EPS = 1e-15


@dataclass(frozen=True)
class TruncationPolicy:
    """Bond truncation rule.

    Attributes
    ----------
    max_rank : int or None
        Largest number of singular values kept (``chi``). ``None`` means unbounded.
    rel_cutoff : float
        Singular values below ``rel_cutoff * s[0]`` are discarded.
    """

    max_rank: int | None = None
    rel_cutoff: float = DEFAULT_EPS

    def __post_init__(self) -> None:
        if self.max_rank is not None and self.max_rank < 1:
            raise ValidationError(f"max_rank must be >= 1, got {self.max_rank}")
        if not 0.0 <= self.rel_cutoff < 1.0:
            raise ValidationError(f"rel_cutoff must lie in [0, 1), got {self.rel_cutoff}")


EXACT = TruncationPolicy(None, DEFAULT_EPS)


@dataclass(frozen=True)
class SvdResult:
    u: np.ndarray
    s: np.ndarray
    vt: np.ndarray
    discarded_weight: float

    @property
    def rank(self) -> int:
        return len(self.s)


def as_tensor(data, shape: Sequence[int] | None = None) -> np.ndarray:
    """Coerce ``data`` to a float64 C-ordered array, optionally reshaped."""
    arr = np.ascontiguousarray(data, dtype=np.float64)
    if shape is not None:
        shape = tuple(int(x) for x in shape)
        if any(x < 1 for x in shape):
            raise ValidationError(f"extents must be >= 1, got {shape}")
        if int(np.prod(shape)) != arr.size:
            raise ValidationError(f"cannot view {arr.size} values as shape {shape}")
        arr = arr.reshape(shape)
    return arr


def contract(a: np.ndarray, b: np.ndarray, pairs: Sequence[tuple[int, int]]) -> np.ndarray:
    """Sum over paired axes of ``a`` and ``b``.

    The result carries the unpaired axes of ``a`` (in order) followed by the
    unpaired axes of ``b``.
    """
    axes_a = [int(p[0]) for p in pairs]
    axes_b = [int(p[1]) for p in pairs]
    if len(set(axes_a)) != len(axes_a) or len(set(axes_b)) != len(axes_b):
        raise ValidationError(f"duplicate axis in contraction pairs {list(pairs)}")
    for ia, ib in zip(axes_a, axes_b):
        if not (-a.ndim <= ia < a.ndim and -b.ndim <= ib < b.ndim):
            raise ValidationError(f"axis pair {(ia, ib)} out of range")
        if a.shape[ia] != b.shape[ib]:
            raise ValidationError(
                f"extent mismatch on pair {(ia, ib)}: {a.shape[ia]} != {b.shape[ib]}"
            )
    return np.tensordot(a, b, axes=(axes_a, axes_b))


def _svd(m: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    try:
        return scipy.linalg.svd(m, full_matrices=False, lapack_driver="gesdd", check_finite=False)
    except np.linalg.LinAlgError:
        # gesdd occasionally fails to converge on nearly degenerate spectra
        return scipy.linalg.svd(m, full_matrices=False, lapack_driver="gesvd", check_finite=False)


def truncated_svd(
    m: np.ndarray, policy: TruncationPolicy = EXACT, row_axes: int | None = None
) -> SvdResult:
    """Truncated singular value decomposition of a tensor viewed as a matrix.

    The first ``row_axes`` axes of ``m`` form the row index and the rest the
    column index (default: ``m`` must already be a matrix). The returned ``u``
    and ``vt`` are matrices; callers reshape them back.

    At least one singular value is always kept. An all-zero input gives
    ``s = [0]`` with canonical basis vectors so that downstream chains never
    reach rank zero.
    """
    m = np.asarray(m, dtype=np.float64)
    if row_axes is None:
        if m.ndim != 2:
            raise ValidationError("row_axes is required for tensors with ndim != 2")
        row_axes = 1
    rows = int(np.prod(m.shape[:row_axes], dtype=np.int64))
    mat = m.reshape(rows, -1)
    if not np.all(np.isfinite(mat)):
        raise NumericalError("non-finite entries in matrix passed to truncated_svd")

    n_rows, n_cols = mat.shape
    total = float(np.sum(mat * mat))
    if total == 0.0:
        u = np.zeros((n_rows, 1))
        u[0, 0] = 1.0
        vt = np.zeros((1, n_cols))
        vt[0, 0] = 1.0
        return SvdResult(u, np.zeros(1), vt, 0.0)

    u, s, vt = _svd(mat)
    keep = int(np.count_nonzero(s >= policy.rel_cutoff * s[0]))
    keep = max(keep, 1)
    if policy.max_rank is not None:
        keep = min(keep, policy.max_rank)
    dropped = float(np.sum(s[keep:] ** 2))
    weight = dropped / float(np.sum(s**2))
    return SvdResult(
        np.ascontiguousarray(u[:, :keep]),
        s[:keep].copy(),
        np.ascontiguousarray(vt[:keep]),
        weight,
    )
