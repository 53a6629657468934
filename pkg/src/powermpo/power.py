"""Truncated power iteration on diagonal MPOs.

Products are formed with a zip-up sweep and renormalized after every step, so
``exp(log_scale)`` carries the (possibly astronomically large) overall factor.
"""
from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Literal

import numpy as np

from .errors import ValidationError
from .mpo import (
    DiagonalMPO,
    bond_profile,
    canonicalize,
    entropy_bits,
    normalize,
    schmidt_spectra,
)
from .tensor import EXACT, TruncationPolicy, truncated_svd


def _right_gauge_sites(mpo: DiagonalMPO) -> list[np.ndarray]:
    """Sites with ``2..N`` right-isometric and the norm on site 1."""
    if mpo.form == "right" or (mpo.form == "mixed" and mpo.center <= 1):
        return mpo.absorbed_sites()
    return canonicalize(mpo, "right").absorbed_sites()


def zipup_multiply(a: DiagonalMPO, b: DiagonalMPO, policy: TruncationPolicy = EXACT) -> DiagonalMPO:
    """Product of two diagonal MPOs (pointwise product of their diagonals).

    Both factors are brought to right-canonical gauge, then a left-to-right
    sweep contracts site pairs into a growing environment and truncates with
    ``policy`` as the zipper closes. A right-to-left sweep (also truncating)
    restores a mixed canonical form centered on bond 1, after which the center
    singular values are normalized. The returned ``log_scale`` is the sum of
    both inputs' plus the extracted norm.
    """
    if a.local_dims != b.local_dims:
        raise ValidationError(f"local dims differ: {a.local_dims} vs {b.local_dims}")
    sa = _right_gauge_sites(a)
    sb = _right_gauge_sites(b)
    n = len(sa)
    env = np.ones((1, 1, 1))
    sites = []
    for i in range(n):
        x = env.shape[0]
        tmp = np.tensordot(env, sa[i], axes=([1], [0]))  # x, b, z, c
        t = np.einsum("xbzc,bzd->xzcd", tmp, sb[i])
        d = t.shape[1]
        if i == n - 1:
            sites.append(t.reshape(x, d, 1))
            break
        rc, rd = t.shape[2], t.shape[3]
        svd = truncated_svd(t.reshape(x * d, rc * rd), policy)
        sites.append(svd.u.reshape(x, d, svd.rank))
        env = (svd.s[:, None] * svd.vt).reshape(svd.rank, rc, rd)
    prod = DiagonalMPO(tuple(sites), "left", log_scale=a.log_scale + b.log_scale)
    return normalize(canonicalize(prod, "mixed", 1, policy))


def prepare(g: DiagonalMPO, policy: TruncationPolicy = EXACT) -> DiagonalMPO:
    """Mixed-canonical (center at bond 1), normalized copy of ``g``."""
    return normalize(canonicalize(g, "mixed", 1, policy))


def mpo_power(g: DiagonalMPO, k: int, policy: TruncationPolicy = EXACT) -> DiagonalMPO:
    """``g**k`` by binary exponentiation (square-and-multiply) of zip-up products."""
    if k < 1:
        raise ValidationError(f"power must be >= 1, got {k}")
    base = prepare(g, policy)
    result = None
    while True:
        if k & 1:
            result = base if result is None else zipup_multiply(result, base, policy)
        k >>= 1
        if not k:
            return result
        base = zipup_multiply(base, base, policy)


def max_entanglement_entropy(mpo: DiagonalMPO) -> float:
    """Largest bipartite entropy (bits) of the embedded state over all cuts."""
    return max((entropy_bits(lam) for lam in schmidt_spectra(mpo)), default=0.0)


@dataclass(frozen=True)
class Schedule:
    """``linear``: ``steps`` multiplications by G (K = steps + 1).
    ``doubling``: ``steps`` self-multiplications (K = 2**steps)."""

    kind: Literal["linear", "doubling"]
    steps: int

    def __post_init__(self) -> None:
        if self.kind not in ("linear", "doubling"):
            raise ValidationError(f"unknown schedule kind {self.kind!r}")
        if self.steps < 0:
            raise ValidationError(f"steps must be >= 0, got {self.steps}")

    @classmethod
    def to_power(cls, kind: str, m: int) -> "Schedule":
        """Schedule reaching ``K = 2**m`` with either kind."""
        return cls(kind, m if kind == "doubling" else 2**m - 1)

    @property
    def final_power(self) -> int:
        return self.steps + 1 if self.kind == "linear" else 2**self.steps

    def powers(self) -> list[int]:
        if self.kind == "linear":
            return list(range(1, self.steps + 2))
        return [2**j for j in range(self.steps + 1)]


@dataclass
class TraceRow:
    k: int
    m: int | None
    bond_profile: list[int]
    max_entropy: float
    log_scale: float
    seconds: float

    @property
    def max_bond(self) -> int:
        return max(self.bond_profile, default=1)


@dataclass
class PowerTrace:
    rows: list[TraceRow] = field(default_factory=list)

    def append(self, row: TraceRow) -> None:
        if self.rows and row.k <= self.rows[-1].k:
            raise ValidationError("trace checkpoints must have increasing K")
        self.rows.append(row)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["K", "m", "max_bond", "max_entropy_bits", "log_scale", "seconds"])
            for r in self.rows:
                writer.writerow(
                    [r.k, "" if r.m is None else r.m, r.max_bond, f"{r.max_entropy:.12g}",
                     f"{r.log_scale:.17g}", f"{r.seconds:.6f}"]
                )


def _log2_exact(k: int) -> int | None:
    return k.bit_length() - 1 if k > 0 and k & (k - 1) == 0 else None


def default_checkpoints(schedule: Schedule) -> set[int]:
    """Powers of two up to the schedule's final K."""
    return {k for k in schedule.powers() if _log2_exact(k) is not None}


def run_power(
    g: DiagonalMPO,
    schedule: Schedule,
    policy: TruncationPolicy = EXACT,
    checkpoints: Iterable[int] | None = None,
    on_checkpoint: Callable[[TraceRow, DiagonalMPO], None] | None = None,
) -> tuple[DiagonalMPO, PowerTrace]:
    """Raise ``g`` to the schedule's final power, recording trace rows at ``checkpoints``.

    ``on_checkpoint(row, mpo)`` is invoked after each recorded row, which lets
    callers sample intermediate states without keeping them around.
    """
    wanted = default_checkpoints(schedule) if checkpoints is None else set(checkpoints)
    trace = PowerTrace()
    t0 = time.perf_counter()
    base = prepare(g, policy)

    def record(k: int, mpo: DiagonalMPO) -> None:
        if k not in wanted:
            return
        row = TraceRow(k, _log2_exact(k), bond_profile(mpo), max_entanglement_entropy(mpo),
                       mpo.log_scale, time.perf_counter() - t0)
        trace.append(row)
        if on_checkpoint is not None:
            on_checkpoint(row, mpo)

    current, k = base, 1
    record(k, current)
    for _ in range(schedule.steps):
        if schedule.kind == "linear":
            current = zipup_multiply(current, base, policy)
            k += 1
        else:
            current = zipup_multiply(current, current, policy)
            k *= 2
        record(k, current)
    return current, trace


@dataclass(frozen=True)
class PowerEstimate:
    eta: float
    k_required: float

    @property
    def k_ceil(self) -> int:
        return max(1, math.ceil(self.k_required))


def suppression_factor(lam: float, lam0: float, gap: float) -> float:
    """Per-power amplitude ratio of a gap-``gap`` excitation to a ground state."""
    return (lam - lam0 - gap) / (lam - lam0)


def success_probability(eta: float, k: float, dim: int, gamma: int) -> float:
    """Probability of drawing a ground state from a two-level spectrum at power ``k``."""
    return gamma / (gamma + (dim - gamma) * eta ** (2 * k))


def estimate_required_power(
    lam: float, lam0: float, gap: float, dim: int, gamma: int, p: float
) -> PowerEstimate:
    """Power ``K`` at which a two-level spectrum yields ground states with probability ``p``.

    ``K = [log(p / (1 - p)) + log((D - gamma) / gamma)] / (2 log(1 / eta))``.
    """
    if not lam > lam0:
        raise ValidationError(f"shift {lam} must exceed the ground energy {lam0}")
    if not gap > 0:
        raise ValidationError(f"gap must be positive, got {gap}")
    if not 0 < p < 1:
        raise ValidationError(f"target probability must lie in (0, 1), got {p}")
    if not 1 <= gamma < dim:
        raise ValidationError(f"degeneracy must satisfy 1 <= gamma < D, got {gamma}, D={dim}")
    eta = suppression_factor(lam, lam0, gap)
    if eta >= 1.0:
        raise ValidationError("no spectral gap: suppression factor >= 1")
    if eta < 0.0:
        raise ValidationError("shift too small: excited states would get negative weight")
    numerator = math.log(p / (1 - p)) + math.log((dim - gamma) / gamma)
    if eta == 0.0:
        return PowerEstimate(0.0, 0.0)
    return PowerEstimate(eta, numerator / (2 * math.log(1 / eta)))
