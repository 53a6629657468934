"""Cost functions over qudit strings expanded in diagonal generator products.

A configuration ``z`` is a sequence of symbols ``z[i] in 0..d_i-1`` (0-based
positions in Python arrays). Sites inside cost terms are 1-based, matching the
chain labels used everywhere else in the solver.

For binary sites the generator of index 1 is Pauli-Z, and symbol 0 maps to the
eigenvalue +1, symbol 1 to -1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Literal, Sequence

import numpy as np

from .errors import ValidationError

Mode = Literal["minimize", "maximize"]


@dataclass(frozen=True)
class QuditGenerator:
    d: int
    k: int
    diagonal: np.ndarray = field(repr=False)


@lru_cache(maxsize=None)
def _generator_table(d: int) -> np.ndarray:
    table = np.zeros((d, d))
    table[0] = 1.0
    for k in range(1, d):
        row = np.zeros(d)
        row[:k] = 1.0
        row[k] = -k
        table[k] = math.sqrt(d / (k * (k + 1))) * row
    table.setflags(write=False)
    return table


def generator_table(d: int) -> np.ndarray:
    """Read-only ``d x d`` matrix whose row ``k`` is the diagonal of generator ``k``."""
    if d < 2:
        raise ValidationError(f"local dimension must be >= 2, got {d}")
    return _generator_table(int(d))


def generator(d: int, k: int) -> QuditGenerator:
    """Diagonal generator ``k`` of the local operator basis on a ``d``-level site.

    ``k = 0`` is the identity. For ``k > 0`` the diagonal is
    ``sqrt(d / (k (k + 1))) * (1, ..., 1, -k, 0, ..., 0)`` with ``k`` leading ones,
    which makes the set orthogonal with ``Tr(Z_k Z_l) = d delta_kl``.
    """
    if not 0 <= k < d:
        raise ValidationError(f"generator index k={k} outside 0..{d - 1}")
    return QuditGenerator(d, k, generator_table(d)[k].copy())


@dataclass(frozen=True)
class CostTerm:
    """``coeff * prod Z^(k)_site`` over the listed ``(site, k)`` factors."""

    coeff: float
    factors: tuple[tuple[int, int], ...]

    @property
    def sites(self) -> tuple[int, ...]:
        return tuple(s for s, _ in self.factors)

    @property
    def order(self) -> int:
        return len(self.factors)


def _canonical_factors(factors: Iterable[Sequence[int]]) -> tuple[tuple[int, int], ...]:
    out = tuple(sorted((int(s), int(k)) for s, k in factors))
    sites = [s for s, _ in out]
    if len(set(sites)) != len(sites):
        raise ValidationError(f"repeated site within a term: {out}")
    return out


class PolynomialCost:
    """Sparse expansion ``C(z) = offset + sum_j h_j prod_i Z^(k_ij)_i(z_i)``.

    Terms sharing a factor set are merged on construction and terms whose merged
    coefficient is exactly zero are dropped. A term with no factors is folded
    into ``offset``.
    """

    def __init__(
        self,
        local_dims: Sequence[int],
        terms: Iterable[CostTerm | tuple[float, Iterable[Sequence[int]]]] = (),
        offset: float = 0.0,
    ) -> None:
        self.local_dims = tuple(int(d) for d in local_dims)
        if any(d < 2 for d in self.local_dims):
            raise ValidationError(f"local dimensions must be >= 2, got {self.local_dims}")
        offset = float(offset)
        merged: dict[tuple[tuple[int, int], ...], float] = {}
        for term in terms:
            if isinstance(term, CostTerm):
                coeff, factors = term.coeff, term.factors
            else:
                coeff, factors = term
            factors = _canonical_factors(factors)
            for site, k in factors:
                if not 1 <= site <= self.num_sites:
                    raise ValidationError(f"site {site} outside 1..{self.num_sites}")
                if not 1 <= k < self.local_dims[site - 1]:
                    raise ValidationError(
                        f"generator index {k} invalid on site {site} (d={self.local_dims[site - 1]})"
                    )
            if not factors:
                offset += float(coeff)
                continue
            merged[factors] = merged.get(factors, 0.0) + float(coeff)
        self.offset = offset
        self.terms = tuple(CostTerm(c, f) for f, c in merged.items() if c != 0.0)

    @classmethod
    def spin(
        cls,
        num_sites: int,
        terms: Iterable[tuple[float, Sequence[int]]],
        offset: float = 0.0,
    ) -> "PolynomialCost":
        """Binary cost from ``(coeff, sites)`` pairs, each term a product of Pauli-Z."""
        return cls(
            [2] * num_sites,
            [(c, [(s, 1) for s in sites]) for c, sites in terms],
            offset,
        )

    @property
    def num_sites(self) -> int:
        return len(self.local_dims)

    @property
    def num_terms(self) -> int:
        return len(self.terms)

    @property
    def hilbert_dim(self) -> int:
        return math.prod(self.local_dims)

    @property
    def is_binary(self) -> bool:
        return all(d == 2 for d in self.local_dims)

    def max_order(self) -> int:
        return max((t.order for t in self.terms), default=0)

    def __repr__(self) -> str:
        return (
            f"PolynomialCost(num_sites={self.num_sites}, num_terms={self.num_terms}, "
            f"offset={self.offset})"
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PolynomialCost):
            return NotImplemented
        return (
            self.local_dims == other.local_dims
            and self.offset == other.offset
            and sorted((t.factors, t.coeff) for t in self.terms)
            == sorted((t.factors, t.coeff) for t in other.terms)
        )

    def check_configuration(self, z) -> np.ndarray:
        z = np.asarray(z)
        if z.shape[-1] != self.num_sites:
            raise ValidationError(f"configuration length {z.shape[-1]} != {self.num_sites}")
        dims = np.asarray(self.local_dims)
        if np.any(z < 0) or np.any(z >= dims):
            raise ValidationError("configuration symbol out of range")
        return z.astype(np.int64, copy=False)


def evaluate(cost: PolynomialCost, z) -> float:
    """Value of ``C(z)`` for a single configuration."""
    z = cost.check_configuration(z)
    total = cost.offset
    for term in cost.terms:
        value = term.coeff
        for site, k in term.factors:
            value *= generator_table(cost.local_dims[site - 1])[k, z[site - 1]]
        total += value
    return float(total)


def evaluate_many(cost: PolynomialCost, configs) -> np.ndarray:
    """Vectorized ``C(z)`` for an ``(n, N)`` array of configurations."""
    configs = cost.check_configuration(np.atleast_2d(configs))
    out = np.full(configs.shape[0], cost.offset)
    for term in cost.terms:
        value = np.full(configs.shape[0], term.coeff)
        for site, k in term.factors:
            value *= generator_table(cost.local_dims[site - 1])[k][configs[:, site - 1]]
        out += value
    return out


def lambda_bound(cost: PolynomialCost) -> float:
    """Upper bound on ``max_z |C(z)|`` from the operator norms of the terms."""
    total = abs(cost.offset)
    for term in cost.terms:
        norm = 1.0
        for site, k in term.factors:
            norm *= float(np.max(np.abs(generator_table(cost.local_dims[site - 1])[k])))
        total += abs(term.coeff) * norm
    return total


@dataclass(frozen=True)
class ShiftScale:
    """Affine map ``G = a H + b I``: ``(a, b) = (-1, lam)`` to minimize, ``(1, lam)`` to maximize.

    Both choices are non-negative whenever ``lam >= max_z |C(z)|``, and the
    target configurations carry the largest diagonal entries of ``G``.
    """

    a: float
    b: float
    lam: float

    @classmethod
    def for_mode(cls, mode: Mode, lam: float) -> "ShiftScale":
        if lam < 0:
            raise ValidationError(f"shift must be non-negative, got {lam}")
        if mode == "minimize":
            return cls(-1.0, float(lam), float(lam))
        if mode == "maximize":
            return cls(1.0, float(lam), float(lam))
        raise ValidationError(f"unknown mode {mode!r}")

    def apply(self, energies):
        return self.a * np.asarray(energies) + self.b


def shift_scale(cost: PolynomialCost, mode: Mode = "minimize", lam: float | None = None) -> ShiftScale:
    return ShiftScale.for_mode(mode, lambda_bound(cost) if lam is None else float(lam))


def shifted_cost(cost: PolynomialCost, mode: Mode = "minimize", lam: float | None = None) -> PolynomialCost:
    """Expansion of ``G = a H + b I``, non-negative on every configuration when
    ``lam >= max_z |C(z)|`` (guaranteed for the default ``lam = lambda_bound(cost)``)."""
    ss = shift_scale(cost, mode, lam)
    return PolynomialCost(
        cost.local_dims,
        [CostTerm(ss.a * t.coeff, t.factors) for t in cost.terms],
        ss.a * cost.offset + ss.b,
    )


def all_configurations(local_dims: Sequence[int], start: int = 0, stop: int | None = None) -> np.ndarray:
    """Configurations ``start..stop-1`` in mixed-radix order, site 1 most significant."""
    total = math.prod(local_dims)
    stop = total if stop is None else min(stop, total)
    idx = np.arange(start, stop, dtype=np.int64)
    out = np.empty((idx.size, len(local_dims)), dtype=np.int64)
    for pos in range(len(local_dims) - 1, -1, -1):
        out[:, pos] = idx % local_dims[pos]
        idx //= local_dims[pos]
    return out


def cost_from_table(local_dims: Sequence[int], values, tol: float = 1e-12) -> PolynomialCost:
    """Expand a dense table of ``C(z)`` (mixed-radix order) in the generator basis.

    Uses orthogonality ``Tr(Z_k Z_l) = d delta_kl`` mode by mode; coefficients with
    magnitude below ``tol * max|C|`` are dropped.
    """
    dims = tuple(int(d) for d in local_dims)
    coeffs = np.asarray(values, dtype=np.float64).reshape(dims)
    for axis, d in enumerate(dims):
        basis = generator_table(d) / d
        coeffs = np.moveaxis(np.tensordot(basis, coeffs, axes=([1], [axis])), 0, axis)
    scale = float(np.max(np.abs(values))) if np.size(values) else 0.0
    terms = []
    for idx in zip(*np.nonzero(np.abs(coeffs) > tol * scale)):
        factors = [(site + 1, int(k)) for site, k in enumerate(idx) if k > 0]
        terms.append((float(coeffs[idx]), factors))
    return PolynomialCost(dims, terms)
