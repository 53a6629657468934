"""Embedding a powered diagonal MPO into an MPS and drawing exact samples from it."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .cost import PolynomialCost, evaluate_many
from .errors import GaugeError, ResourceGuardError, ValidationError
from .mpo import DENSE_GUARD, DiagonalMPO, right_sweep

DEFAULT_BATCH = 4096
NORM_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class MPS:
    """Normalized, right-canonical MPS; ``log_norm`` is the log of the discarded norm."""

    sites: tuple[np.ndarray, ...]
    log_norm: float = 0.0

    @property
    def num_sites(self) -> int:
        return len(self.sites)

    @property
    def local_dims(self) -> tuple[int, ...]:
        return tuple(a.shape[1] for a in self.sites)

    def amplitudes(self) -> np.ndarray:
        """Dense state vector in mixed-radix order (site 1 most significant)."""
        if math.prod(self.local_dims) > DENSE_GUARD:
            raise ResourceGuardError("state too large for a dense amplitude vector")
        vec = self.sites[0].reshape(-1, self.sites[0].shape[2])
        for a in self.sites[1:]:
            vec = np.einsum("xa,azb->xzb", vec, a).reshape(-1, a.shape[2])
        return vec[:, 0]


def right_canonical_mps(sites, log_norm: float = 0.0) -> MPS:
    """Right-canonicalize arbitrary site tensors and normalize the state."""
    sites = [np.asarray(a, dtype=float) for a in sites]
    u, s = right_sweep(sites, 0)
    # u is 1x1 (a sign), s the norm
    norm = float(s[0])
    if norm == 0.0:
        raise GaugeError("state has zero norm")
    sites[0] = sites[0] * float(np.sign(u[0, 0]) or 1.0)
    return MPS(tuple(sites), log_norm + math.log(norm))


def embed(mpo: DiagonalMPO) -> MPS:
    """State proportional to ``mpo |+>^N``: each diagonal leg becomes a physical
    leg scaled by ``1/sqrt(d)``, then the chain is right-canonicalized and normalized."""
    sites = [w / math.sqrt(w.shape[1]) for w in mpo.absorbed_sites()]
    return right_canonical_mps(sites, mpo.log_scale)


def sample_stream(seed: int, batch: int) -> np.random.Generator:
    """Counter-based generator for batch ``batch`` of a run seeded with ``seed``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(int(batch),))))


def _sample_batch(psi: MPS, size: int, rng: np.random.Generator) -> np.ndarray:
    out = np.empty((size, psi.num_sites), dtype=np.int64)
    env = np.ones((size, 1))
    rows = np.arange(size)
    # one row of uniforms per draw, so a shorter batch is a prefix of a longer one
    uniforms = rng.random((size, psi.num_sites))
    for i, a in enumerate(psi.sites):
        w = np.einsum("nl,lzr->nzr", env, a)
        prob = np.einsum("nzr,nzr->nz", w, w)
        total = prob.sum(axis=1)
        if np.any(np.abs(total - 1.0) > NORM_TOL):
            raise GaugeError(
                f"conditional probabilities at site {i + 1} sum to {total.min():.3g}..{total.max():.3g}"
            )
        cdf = np.cumsum(prob, axis=1)
        u = uniforms[:, i] * cdf[:, -1]
        z = np.minimum((cdf <= u[:, None]).sum(axis=1), a.shape[1] - 1)
        out[:, i] = z
        env = w[rows, z] / np.sqrt(prob[rows, z])[:, None]
    return out


def perfect_sample(psi: MPS, n: int, seed: int, batch_size: int = DEFAULT_BATCH) -> np.ndarray:
    """Draw ``n`` i.i.d. configurations with probability ``|<z|psi>|^2``.

    Sites are sampled one at a time from their conditional distribution given
    the prefix, with the left environment carried along. Draws are split into
    fixed-size batches, each with its own stream, so the output depends only on
    ``(seed, n, batch_size)``.
    """
    if n < 0:
        raise ValidationError(f"sample count must be >= 0, got {n}")
    chunks = []
    for b, start in enumerate(range(0, n, batch_size)):
        size = min(batch_size, n - start)
        chunks.append(_sample_batch(psi, size, sample_stream(seed, b)))
    if not chunks:
        return np.empty((0, psi.num_sites), dtype=np.int64)
    return np.concatenate(chunks)


@dataclass(eq=False)
class SampleSet:
    configs: np.ndarray
    energies: np.ndarray
    seed: int | None = None

    @classmethod
    def from_configs(cls, cost: PolynomialCost, configs: np.ndarray, seed: int | None = None) -> "SampleSet":
        configs = np.asarray(configs, dtype=np.int64).reshape(-1, cost.num_sites)
        energies = evaluate_many(cost, configs) if len(configs) else np.zeros(0)
        return cls(configs, energies, seed)

    @property
    def num_draws(self) -> int:
        return len(self.configs)

    def min_energy(self) -> float:
        if not self.num_draws:
            raise ValidationError("empty sample set")
        return float(np.min(self.energies))

    def best(self) -> np.ndarray:
        return self.configs[int(np.argmin(self.energies))]

    def write_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            for z, e in zip(self.configs, self.energies):
                fh.write(json.dumps({"z": config_string(z), "energy": float(e)}) + "\n")


def config_string(z) -> str:
    z = [int(v) for v in z]
    if max(z, default=0) < 10:
        return "".join(str(v) for v in z)
    return ",".join(str(v) for v in z)


def read_jsonl(path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def approximation_ratio(samples: SampleSet, optimum: float) -> float:
    """Best sampled cost divided by the optimal cost."""
    if optimum == 0:
        raise ValidationError("approximation ratio undefined for a zero optimum; report the gap instead")
    return samples.min_energy() / optimum


def unique_count(samples: SampleSet) -> int:
    if not samples.num_draws:
        return 0
    return int(len(np.unique(samples.configs, axis=0)))


def summary(samples: SampleSet, optimum: float | None = None) -> dict:
    out = {
        "min_energy": samples.min_energy(),
        "ar": None,
        "unique": unique_count(samples),
        "n": samples.num_draws,
    }
    if optimum is not None and optimum != 0:
        out["ar"] = approximation_ratio(samples, optimum)
    return out
