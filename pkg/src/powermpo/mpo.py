"""Diagonal matrix product operators.

A diagonal MPO is stored as one rank-3 array per site with axes
``(left_bond, z, right_bond)``: entry ``W[a, z, b]`` is the diagonal element
``<z|W_ab|z>`` of the local operator. The operator represented is

    diag(z) = exp(log_scale) * W_1[z_1] ... W_c[z_c] diag(lam) W_{c+1}[z_{c+1}] ... W_N[z_N]

where ``lam`` (the singular values at bond ``c``) is present only in mixed form.
Isometry conditions use the plain sum over ``z``, which is the canonical form of
the state obtained by applying the operator to the uniform superposition.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from typing import Literal, Sequence

import numpy as np

from .cost import PolynomialCost, generator_table
from .errors import ResourceGuardError, ValidationError, VanishedOperatorError
from .tensor import EXACT, TruncationPolicy, truncated_svd

Form = Literal["none", "left", "right", "mixed"]

DENSE_GUARD = 2**24


@dataclass(frozen=True, eq=False)
class DiagonalMPO:
    sites: tuple[np.ndarray, ...]
    form: Form = "none"
    center: int | None = None
    singular_values: np.ndarray | None = None
    log_scale: float = 0.0

    def __post_init__(self) -> None:
        if not self.sites:
            raise ValidationError("an MPO needs at least one site")
        if self.sites[0].shape[0] != 1 or self.sites[-1].shape[2] != 1:
            raise ValidationError("boundary bond dimensions must be 1")
        for i, (a, b) in enumerate(zip(self.sites[:-1], self.sites[1:])):
            if a.shape[2] != b.shape[0]:
                raise ValidationError(f"bond mismatch between sites {i + 1} and {i + 2}")
        if self.form == "mixed":
            if self.center is None or not 0 <= self.center <= len(self.sites):
                raise ValidationError(f"mixed form needs a center in 0..{len(self.sites)}")
            if self.singular_values is None or len(self.singular_values) != self.bond_dim(self.center):
                raise ValidationError("singular values do not match the center bond")

    @property
    def num_sites(self) -> int:
        return len(self.sites)

    @property
    def local_dims(self) -> tuple[int, ...]:
        return tuple(w.shape[1] for w in self.sites)

    def bond_dim(self, c: int) -> int:
        """Dimension of the bond to the right of site ``c`` (``c = 0..N``)."""
        if c == 0:
            return 1
        return self.sites[c - 1].shape[2]

    def absorbed_sites(self) -> list[np.ndarray]:
        """Site tensors with the center singular values multiplied in."""
        sites = list(self.sites)
        if self.form == "mixed":
            lam = self.singular_values
            c = self.center
            if c == 0:
                sites[0] = lam[:, None, None] * sites[0]
            else:
                sites[c - 1] = sites[c - 1] * lam[None, None, :]
        return sites

    def scaled(self, log_factor: float) -> "DiagonalMPO":
        return replace(self, log_scale=self.log_scale + log_factor)


def bond_profile(mpo: DiagonalMPO) -> list[int]:
    """Bond dimensions of the ``N - 1`` internal cuts."""
    return [w.shape[2] for w in mpo.sites[:-1]]


def max_bond(mpo: DiagonalMPO) -> int:
    return max(bond_profile(mpo), default=1)


def write_bond_profile(mpo: DiagonalMPO, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cut", "dimension"])
        for cut, dim in enumerate(bond_profile(mpo), start=1):
            writer.writerow([cut, dim])


def identity_mpo(local_dims: Sequence[int]) -> DiagonalMPO:
    return DiagonalMPO(tuple(np.ones((1, int(d), 1)) for d in local_dims))


def product_mpo(diagonals: Sequence[Sequence[float]]) -> DiagonalMPO:
    """Tensor product of single-site diagonal operators."""
    return DiagonalMPO(tuple(np.asarray(v, dtype=float).reshape(1, -1, 1) for v in diagonals))


def build_mpo(g: PolynomialCost, policy: TruncationPolicy = EXACT) -> DiagonalMPO:
    """Compile a cost expansion into a diagonal MPO by sequential SVDs from the left.

    Coefficients are kept sparse: the columns of the matrix decomposed at site
    ``i`` are the distinct suffixes (factors on sites ``> i``) of the terms still
    being carried, so the matrix is ``(bond * d_i) x (#distinct suffixes)``. The
    generator basis is rescaled to be orthonormal on each site, which makes the
    returned tensors on sites ``1..N-1`` exact left isometries.
    """
    if not g.terms and g.offset == 0.0:
        raise ValidationError("cannot build an MPO for an empty cost")
    n = g.num_sites
    columns: list[tuple[tuple[int, int], ...]] = [()] if g.offset != 0.0 else []
    coeffs: list[float] = [g.offset] if g.offset != 0.0 else []
    for term in g.terms:
        columns.append(term.factors)
        coeffs.append(term.coeff)
    carry = np.asarray(coeffs, dtype=float).reshape(1, -1)

    sites = []
    for site in range(1, n + 1):
        d = g.local_dims[site - 1]
        ortho = generator_table(d) / math.sqrt(d)
        new_index: dict[tuple[tuple[int, int], ...], int] = {}
        p_idx = np.empty(len(columns), dtype=np.int64)
        q_idx = np.empty(len(columns), dtype=np.int64)
        for j, key in enumerate(columns):
            if key and key[0][0] == site:
                p_idx[j] = key[0][1]
                key = key[1:]
            else:
                p_idx[j] = 0
            q_idx[j] = new_index.setdefault(key, len(new_index))
        rank = carry.shape[0]
        m = np.zeros((rank, d, len(new_index)))
        m[:, p_idx, q_idx] = carry
        m *= math.sqrt(d)
        if site == n:
            # only the empty suffix survives: m has a single column
            sites.append(np.einsum("apb,pz->azb", m, ortho))
            break
        svd = truncated_svd(m, policy, row_axes=2)
        u = svd.u.reshape(rank, d, svd.rank)
        sites.append(np.ascontiguousarray(np.einsum("apb,pz->azb", u, ortho)))
        carry = svd.s[:, None] * svd.vt
        columns = list(new_index)
    return DiagonalMPO(tuple(sites), form="left")


def _left_step(sites: list[np.ndarray], i: int, policy: TruncationPolicy) -> np.ndarray:
    """Make site ``i`` a left isometry; return the carry matrix ``diag(s) vt``."""
    w = sites[i]
    l, d, r = w.shape
    svd = truncated_svd(w.reshape(l * d, r), policy)
    sites[i] = svd.u.reshape(l, d, svd.rank)
    return svd.s[:, None] * svd.vt


def _right_step(sites: list[np.ndarray], i: int, policy: TruncationPolicy):
    """Make site ``i`` a right isometry; return ``(u, s)`` of the split-off factor."""
    w = sites[i]
    l, d, r = w.shape
    svd = truncated_svd(w.reshape(l, d * r), policy)
    sites[i] = svd.vt.reshape(svd.rank, d, r)
    return svd.u, svd.s


def left_sweep(sites: list[np.ndarray], stop: int, policy: TruncationPolicy = EXACT) -> np.ndarray | None:
    """Left-canonicalize sites ``0..stop-1`` in place, pushing remainders right.

    Returns the final carry when ``stop`` equals the number of sites.
    """
    for i in range(stop):
        carry = _left_step(sites, i, policy)
        if i + 1 < len(sites):
            sites[i + 1] = np.einsum("ab,bzc->azc", carry, sites[i + 1])
        else:
            return carry
    return None


def right_sweep(sites: list[np.ndarray], stop: int, policy: TruncationPolicy = EXACT):
    """Right-canonicalize sites ``N-1`` down to ``stop`` in place.

    The factor split off the last processed site is returned as ``(u, s)`` and
    not absorbed; the caller decides where it goes.
    """
    u = s = None
    for i in range(len(sites) - 1, stop - 1, -1):
        if u is not None:
            sites[i] = np.einsum("azb,bc->azc", sites[i], u * s[None, :])
        u, s = _right_step(sites, i, policy)
    return u, s


def canonicalize(
    mpo: DiagonalMPO,
    form: Form,
    center: int | None = None,
    policy: TruncationPolicy = EXACT,
) -> DiagonalMPO:
    """Bring ``mpo`` to left, right or mixed canonical form.

    For ``form="mixed"`` the singular values at bond ``center`` (``0..N``) are
    split off and stored; sites ``1..center`` are left isometries and sites
    ``center+1..N`` right isometries. The represented operator is unchanged up
    to truncation by ``policy``.
    """
    n = mpo.num_sites
    sites = mpo.absorbed_sites()
    if form == "left":
        left_sweep(sites, n - 1, policy)
        return DiagonalMPO(tuple(sites), "left", log_scale=mpo.log_scale)
    if form == "right":
        u, s = right_sweep(sites, 1, policy)
        if u is not None:
            sites[0] = np.einsum("azb,bc->azc", sites[0], u * s[None, :])
        return DiagonalMPO(tuple(sites), "right", log_scale=mpo.log_scale)
    if form != "mixed":
        raise ValidationError(f"unknown canonical form {form!r}")
    if center is None or not 0 <= center <= n:
        raise ValidationError(f"center must lie in 0..{n}, got {center}")

    if center == n:
        carry = left_sweep(sites, n, policy)
        # carry is 1x1 once the right boundary is reached
        sign = np.sign(carry[0, 0]) or 1.0
        sites[-1] = sites[-1] * sign
        lam = np.abs(carry[:, 0])
    else:
        left_sweep(sites, center, policy)
        u, s = right_sweep(sites, center, policy)
        if center == 0:
            sites[0] = sites[0] * (np.sign(u[0, 0]) or 1.0)
        else:
            sites[center - 1] = np.einsum("azb,bc->azc", sites[center - 1], u)
        lam = s
    return DiagonalMPO(tuple(sites), "mixed", center, np.asarray(lam, dtype=float), mpo.log_scale)


def normalize(mpo: DiagonalMPO) -> DiagonalMPO:
    """Rescale the center singular values to unit 2-norm, moving the factor into ``log_scale``."""
    if mpo.form != "mixed":
        raise ValidationError("normalize requires mixed canonical form")
    norm = float(np.linalg.norm(mpo.singular_values))
    if norm == 0.0 or not np.isfinite(norm):
        raise VanishedOperatorError("operator vanished (zero singular values at the center)")
    return replace(
        mpo,
        singular_values=mpo.singular_values / norm,
        log_scale=mpo.log_scale + math.log(norm),
    )


def dense_diagonal(mpo: DiagonalMPO, include_scale: bool = True) -> np.ndarray:
    """All ``prod d_i`` diagonal entries in mixed-radix order (site 1 most significant)."""
    if math.prod(mpo.local_dims) > DENSE_GUARD:
        raise ResourceGuardError(f"dense diagonal of size {math.prod(mpo.local_dims)} exceeds guard")
    sites = mpo.absorbed_sites()
    vec = sites[0].reshape(-1, sites[0].shape[2])
    for w in sites[1:]:
        vec = np.einsum("xa,azb->xzb", vec, w).reshape(-1, w.shape[2])
    out = vec[:, 0]
    if include_scale:
        out = out * math.exp(mpo.log_scale)
    return out


def from_dense_diagonal(
    values, local_dims: Sequence[int], policy: TruncationPolicy = EXACT
) -> DiagonalMPO:
    """Exact (up to ``policy``) MPO of an explicit diagonal, by left-to-right SVDs."""
    dims = [int(d) for d in local_dims]
    rest = np.asarray(values, dtype=float).reshape(1, -1)
    sites = []
    for d in dims[:-1]:
        rank = rest.shape[0]
        svd = truncated_svd(rest.reshape(rank * d, -1), policy)
        sites.append(svd.u.reshape(rank, d, svd.rank))
        rest = svd.s[:, None] * svd.vt
    sites.append(rest.reshape(rest.shape[0], dims[-1], 1))
    return DiagonalMPO(tuple(sites), "left")


def isometry_error(w: np.ndarray, side: Literal["left", "right"]) -> float:
    """Max deviation of ``w`` from the left or right isometry condition."""
    l, d, r = w.shape
    if side == "left":
        m = w.reshape(l * d, r)
        gram = m.T @ m
    else:
        m = w.reshape(l, d * r)
        gram = m @ m.T
    return float(np.max(np.abs(gram - np.eye(gram.shape[0]))))


def entropy_bits(lam: np.ndarray) -> float:
    """Von Neumann entropy (base 2) of normalized Schmidt coefficients ``lam``."""
    p = np.asarray(lam, dtype=float) ** 2
    total = p.sum()
    if total == 0.0:
        return 0.0
    p = p[p > 0] / total
    return float(-np.sum(p * np.log2(p)))


def schmidt_spectra(mpo: DiagonalMPO) -> list[np.ndarray]:
    """Normalized singular values at every internal cut ``1..N-1``.

    One right-canonicalization followed by a single left-to-right SVD sweep, so
    the cost is linear in ``N``.
    """
    sites = canonicalize(mpo, "right").absorbed_sites()
    spectra = []
    for i in range(mpo.num_sites - 1):
        w = sites[i]
        l, d, r = w.shape
        svd = truncated_svd(w.reshape(l * d, r), EXACT)
        sites[i] = svd.u.reshape(l, d, svd.rank)
        sites[i + 1] = np.einsum("ab,bzc->azc", svd.s[:, None] * svd.vt, sites[i + 1])
        norm = np.linalg.norm(svd.s)
        spectra.append(svd.s / norm if norm > 0 else svd.s)
    return spectra
