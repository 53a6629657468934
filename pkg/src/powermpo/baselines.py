"""Reference solvers: exhaustive search, chain dynamic programming, simulated annealing."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cost import PolynomialCost, all_configurations, evaluate_many, generator_table
from .errors import ResourceGuardError, ValidationError
from .sampler import SampleSet

BRUTE_FORCE_GUARD = 2**24
OPTIMAL_SET_LIMIT = 10**6
FRONTIER_GUARD = 2**22


@dataclass
class ExactResult:
    optimum: float
    degeneracy: int
    optimal_set: np.ndarray | None
    """Optimal configurations, or ``None`` when there are too many to list."""

    def example(self) -> np.ndarray | None:
        return None if self.optimal_set is None or len(self.optimal_set) == 0 else self.optimal_set[0]


def _same(a, b, scale: float) -> np.ndarray:
    return np.abs(np.asarray(a) - b) <= 1e-9 * max(1.0, scale)


def brute_force(cost: PolynomialCost, chunk: int = 2**18) -> ExactResult:
    """Exact minimum, degeneracy and optimal set by enumerating every configuration."""
    total = cost.hilbert_dim
    if total > BRUTE_FORCE_GUARD:
        raise ResourceGuardError(
            f"{total} configurations exceed the brute-force guard of {BRUTE_FORCE_GUARD}; "
            "use the frontier solver for chain-local instances"
        )
    tol = 1e-9 * max(1.0, abs(cost.offset) + sum(abs(t.coeff) for t in cost.terms))
    best = math.inf
    winners: list[np.ndarray] = []
    count = 0
    for start in range(0, total, chunk):
        configs = all_configurations(cost.local_dims, start, start + chunk)
        energies = evaluate_many(cost, configs)
        low = float(energies.min())
        if low < best - tol:
            best, winners, count = low, [], 0
        if low <= best + tol:
            hit = energies <= best + tol
            count += int(hit.sum())
            if count <= OPTIMAL_SET_LIMIT:
                winners.append(configs[hit])
    optimal = np.concatenate(winners) if count <= OPTIMAL_SET_LIMIT else None
    return ExactResult(best, count, optimal)


def chain_frontiers(cost: PolynomialCost) -> list[list[int]]:
    """For each prefix ``1..i``, the sites in it that share a term with a site ``> i``."""
    n = cost.num_sites
    reach = [0] * (n + 1)  # furthest site each site interacts with
    for term in cost.terms:
        hi = term.sites[-1]
        for s in term.sites:
            reach[s] = max(reach[s], hi)
    return [[s for s in range(1, i + 1) if reach[s] > i] for i in range(1, n + 1)]


def frontier_solve(cost: PolynomialCost, guard: int = FRONTIER_GUARD) -> ExactResult:
    """Exact minimum by dynamic programming along the chain order.

    The state after site ``i`` is the assignment of the sites in the prefix that
    still interact with the suffix. Cost is exponential only in that frontier
    width, so lattice instances far beyond brute-force scale are tractable.
    Returns the optimum, the exact degeneracy, and one optimal configuration.
    """
    n = cost.num_sites
    dims = cost.local_dims
    frontiers = chain_frontiers(cost)
    by_last: dict[int, list] = {}
    for term in cost.terms:
        by_last.setdefault(term.sites[-1], []).append(term)

    axes: list[int] = []  # sites labelling the axes of value/count
    value = np.array(cost.offset)
    count = np.array(1, dtype=np.int64)
    history = []
    for i in range(1, n + 1):
        axes_i = axes + [i]
        shape = [dims[s - 1] for s in axes_i]
        if math.prod(shape) > guard:
            raise ResourceGuardError(
                f"frontier of {len(axes_i)} sites exceeds the dynamic-programming guard"
            )
        value = np.broadcast_to(value[..., None], shape).copy()
        count = np.broadcast_to(count[..., None], shape).copy()
        for term in by_last.get(i, ()):
            contrib = np.full([1] * len(axes_i), term.coeff)
            for site, k in term.factors:
                ax = axes_i.index(site)
                vec_shape = [1] * len(axes_i)
                vec_shape[ax] = dims[site - 1]
                contrib = contrib * generator_table(dims[site - 1])[k].reshape(vec_shape)
            value = value + contrib
        history.append((axes_i, value))
        keep = frontiers[i - 1]
        drop = tuple(ax for ax, s in enumerate(axes_i) if s not in keep)
        if drop:
            best = value.min(axis=drop, keepdims=True)
            scale = float(np.max(np.abs(value))) if value.size else 1.0
            hit = _same(value, best, scale)
            count = np.where(hit, count, 0).sum(axis=drop)
            value = best.squeeze(axis=drop)
        axes = keep

    optimum = float(value)
    degeneracy = int(count)
    # backtrack one optimal configuration
    z = np.zeros(n, dtype=np.int64)
    known: dict[int, int] = {}
    for axes_i, table in reversed(history):
        index = tuple(known[s] if s in known else slice(None) for s in axes_i)
        sub = table[index]
        free = [s for s in axes_i if s not in known]
        if free:
            pos = np.unravel_index(int(np.argmin(sub)), sub.shape)
            for s, v in zip(free, pos):
                known[s] = int(v)
    for s, v in known.items():
        z[s - 1] = v
    return ExactResult(optimum, degeneracy, z[None, :])


def exact_minimum(cost: PolynomialCost) -> ExactResult:
    """Brute force when it fits the guard, otherwise the frontier solver."""
    if cost.hilbert_dim <= 2**16:
        return brute_force(cost)
    return frontier_solve(cost)


def _incidence(cost: PolynomialCost):
    """Per site, a padded ``(n_terms, max_order)`` member matrix and coefficients.

    Padding points at a ghost column (index ``N``) that always holds spin +1.
    """
    n = cost.num_sites
    width = max(cost.max_order(), 1)
    per_site: list[list] = [[] for _ in range(n)]
    for term in cost.terms:
        members = [s - 1 for s in term.sites] + [n] * (width - term.order)
        for s in term.sites:
            per_site[s - 1].append((members, term.coeff))
    out = []
    for entries in per_site:
        if entries:
            out.append((np.array([m for m, _ in entries]), np.array([c for _, c in entries])))
        else:
            out.append((np.full((0, width), n), np.zeros(0)))
    return out


def spins_from_configs(configs: np.ndarray) -> np.ndarray:
    return 1 - 2 * np.asarray(configs)


def flip_delta(cost: PolynomialCost, spins: np.ndarray, site: int, incidence=None) -> np.ndarray:
    """Energy change from flipping 0-based ``site`` for each row of ``spins`` (ghost column included)."""
    members, coeffs = (incidence or _incidence(cost))[site]
    if coeffs.size == 0:
        return np.zeros(spins.shape[0])
    prods = np.prod(spins[:, members], axis=2)
    return -2.0 * prods @ coeffs


def beta_ladder(beta_min: float, beta_max: float, sweeps: int) -> np.ndarray:
    """Geometric inverse-temperature schedule with both endpoints included."""
    if sweeps == 1:
        return np.array([float(beta_max)])
    return np.geomspace(beta_min, beta_max, sweeps) if sweeps else np.zeros(0)


def metropolis_accept(delta: np.ndarray, beta: float, uniforms: np.ndarray) -> np.ndarray:
    """Accept with probability ``min(1, exp(-beta * delta))`` given uniforms in ``[0, 1)``."""
    return (delta <= 0) | (uniforms < np.exp(-beta * np.maximum(delta, 0)))


def simulated_annealing(
    cost: PolynomialCost,
    sweeps: int = 1000,
    beta_min: float = 0.1,
    beta_max: float = 10.0,
    restarts: int = 100,
    seed: int = 0,
    verify: bool = False,
) -> SampleSet:
    """Single-spin-flip Metropolis annealing run natively on a binary HUBO.

    Each restart has its own Philox stream keyed by ``(seed, restart)``; its
    initial state and all acceptance uniforms come from that stream, so results
    do not depend on how restarts are batched. Inverse temperature follows a
    geometric ladder from ``beta_min`` to ``beta_max`` over ``sweeps`` sweeps.
    The returned set holds the best configuration seen by each restart.
    ``verify=True`` re-evaluates every chain after each sweep and raises if the
    incrementally tracked energies drifted.
    """
    if not cost.is_binary:
        raise ValidationError("simulated annealing supports binary sites only")
    if restarts < 1:
        raise ValidationError(f"restarts must be >= 1, got {restarts}")
    if sweeps < 0:
        raise ValidationError(f"sweeps must be >= 0, got {sweeps}")
    if not 0 < beta_min <= beta_max:
        raise ValidationError("need 0 < beta_min <= beta_max")
    n = cost.num_sites
    streams = [
        np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(r,))))
        for r in range(restarts)
    ]
    init = np.stack([g.integers(0, 2, size=n) for g in streams])
    betas = beta_ladder(beta_min, beta_max, sweeps)

    spins = np.ones((restarts, n + 1))
    spins[:, :n] = spins_from_configs(init)
    energy = evaluate_many(cost, init)
    best_energy = energy.copy()
    best_spins = spins.copy()
    incidence = _incidence(cost)
    for sweep in range(sweeps):
        beta = betas[sweep]
        uniforms = np.stack([g.random(n) for g in streams])
        for site in range(n):
            delta = flip_delta(cost, spins, site, incidence)
            accept = metropolis_accept(delta, beta, uniforms[:, site])
            spins[accept, site] *= -1
            energy = energy + np.where(accept, delta, 0.0)
        if verify:
            exact = evaluate_many(cost, ((1 - spins[:, :n]) // 2).astype(np.int64))
            if not np.allclose(energy, exact, rtol=0, atol=1e-10):
                raise AssertionError("incremental energy drifted from full evaluation")
        improved = energy < best_energy
        best_energy = np.where(improved, energy, best_energy)
        best_spins[improved] = spins[improved]
    configs = ((1 - best_spins[:, :n]) // 2).astype(np.int64)
    return SampleSet(configs, evaluate_many(cost, configs), seed)
