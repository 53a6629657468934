"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run the long criterion 7 with ``pytest -m slow``; the default run deselects nothing,
so the full file takes roughly 15 minutes on one core.
"""
from __future__ import annotations

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import random_qubo_terms, random_spin_terms, record_criterion
from powermpo.baselines import brute_force, exact_minimum, simulated_annealing
from powermpo.cli import main, read_manifest, run_bench
from powermpo.cost import PolynomialCost, all_configurations, cost_from_table, evaluate_many, lambda_bound, shifted_cost
from powermpo.instances import gen_heavyhex, gen_hypercubic, heavyhex_graph, save
from powermpo.mpo import build_mpo, dense_diagonal, from_dense_diagonal, max_bond
from powermpo.power import estimate_required_power, mpo_power
from powermpo.sampler import MPS, embed, perfect_sample, right_canonical_mps
from powermpo.solver import solve

MANIFESTS = Path(__file__).resolve().parent.parent / "manifests"


def qubo_from_matrix(m: np.ndarray) -> PolynomialCost:
    n = m.shape[0]
    terms = [(float(m[i, i]), (i + 1,)) for i in range(n)]
    terms += [(float(m[i, j]), (i + 1, j + 1)) for i in range(n) for j in range(i + 1, n)]
    return PolynomialCost.spin(n, terms)


def indices(configs: np.ndarray, dims) -> np.ndarray:
    return np.ravel_multi_index(configs.T, tuple(dims))


# 1 ------------------------------------------------------------------------------------------


def test_criterion_01_mpo_oracle_equivalence():
    t0 = time.perf_counter()
    worst = 0.0
    for seed in range(20):
        rng = np.random.default_rng(1000 + seed)
        n = 6 + seed % 7
        if seed % 2 == 0:
            cost = PolynomialCost.spin(n, random_qubo_terms(n, rng))
        else:
            cost = PolynomialCost.spin(n, random_spin_terms(n, 3 * n, 3, rng))
        g = shifted_cost(cost)
        want = evaluate_many(g, all_configurations(g.local_dims))
        got = dense_diagonal(build_mpo(g))
        worst = max(worst, float(np.max(np.abs(got - want)) / np.max(np.abs(want))))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-10 and elapsed < 60
    record_criterion(1, "MPO oracle equivalence", ok, f"worst relative error {worst:.2e}, {elapsed:.1f}s")
    assert ok


# 2 ------------------------------------------------------------------------------------------


def test_criterion_02_qubo_bond_bound():
    t0 = time.perf_counter()
    failures = []
    for n in range(8, 15):
        for seed in range(3):
            rng = np.random.default_rng(n * 100 + seed)
            bond = max_bond(build_mpo(shifted_cost(qubo_from_matrix(rng.normal(size=(n, n))))))
            if bond > n // 2 + 2:
                failures.append(("dense", n, seed, bond))
            for r in (1, 2, 3):
                u = rng.normal(size=(n, r))
                bond = max_bond(build_mpo(shifted_cost(qubo_from_matrix(u @ u.T))))
                if bond > r + 2:
                    failures.append(("rank", r, n, seed, bond))
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed < 60
    record_criterion(2, "QUBO bond bound", ok, f"{len(failures)} violations, {elapsed:.1f}s")
    assert ok, failures


# 3 ------------------------------------------------------------------------------------------


def test_criterion_03_structural_claims():
    t0 = time.perf_counter()
    problems = []
    for dim, size in [(2, 4), (2, 6), (3, 3)]:
        bond = max_bond(build_mpo(shifted_cost(gen_hypercubic(dim, size, seed=0).cost)))
        if bond > size ** (dim - 1) + 2:
            problems.append(("hypercubic", dim, size, bond))
    for size in (1, 2, 3, 4, 10):
        coords, edges = heavyhex_graph(size)
        if len(coords) != 5 * size**2 + 8 * size - 1 or len(edges) != 6 * size**2 + 8 * size - 2:
            problems.append(("counts", size, len(coords), len(edges)))
    for size in (2, 3, 4):
        bond = max_bond(build_mpo(shifted_cost(gen_heavyhex(size, seed=0).cost)))
        if bond > size + 6:
            problems.append(("heavyhex", size, bond))
    elapsed = time.perf_counter() - t0
    ok = not problems and elapsed < 60
    record_criterion(3, "hypercubic and heavy-hex structure", ok, f"{len(problems)} violations, {elapsed:.1f}s")
    assert ok, problems


# 4 ------------------------------------------------------------------------------------------


def power_limit_instances():
    for seed in range(5):
        yield gen_hypercubic(2, 3, seed=seed).cost
    for seed in range(5):
        rng = np.random.default_rng(4000 + seed)
        n = 8 + seed
        terms = [(float(rng.choice([-1.0, 1.0])), s) for _, s in random_spin_terms(n, 2 * n, 3, rng)]
        yield PolynomialCost.spin(n, terms)


def test_criterion_04_power_limit_law():
    t0 = time.perf_counter()
    worst, details = 0.0, []
    for cost in power_limit_instances():
        values = evaluate_many(cost, all_configurations(cost.local_dims))
        exact = brute_force(cost)
        levels = np.unique(np.round(values, 9))
        gap = float(levels[1] - levels[0])
        lam = lambda_bound(cost)
        est = estimate_required_power(lam, exact.optimum, gap, cost.hilbert_dim, exact.degeneracy, 1 - 1e-7)
        probs = embed(mpo_power(build_mpo(shifted_cost(cost)), est.k_ceil)).amplitudes() ** 2
        target = np.zeros_like(probs)
        target[indices(exact.optimal_set, cost.local_dims)] = 1.0 / exact.degeneracy
        tv = 0.5 * float(np.abs(probs - target).sum())
        worst = max(worst, tv)
        details.append(est.k_ceil)
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-6 and elapsed < 120
    record_criterion(4, "power-limit law", ok, f"worst TV {worst:.2e} at K in {min(details)}..{max(details)}, {elapsed:.1f}s")
    assert ok


# 5 ------------------------------------------------------------------------------------------

CALIBRATION_GRID = [
    (p, gamma, gap)
    for p, (gamma, gap) in zip([0.9] * 3 + [0.99] * 3 + [0.999] * 3, [(1, 0.5), (3, 1.0), (8, 2.0)] * 3)
]


def test_criterion_05_required_power_calibration():
    t0 = time.perf_counter()
    n, draws = 8, 10_000
    dim = 2**n
    rows, ok = [], True
    for i, (p, gamma, gap) in enumerate(CALIBRATION_GRID):
        rng = np.random.default_rng(100 + i)
        values = np.full(dim, gap)
        ground = rng.choice(dim, gamma, replace=False)
        values[ground] = 0.0
        cost = cost_from_table([2] * n, values)
        est = estimate_required_power(lambda_bound(cost), 0.0, gap, dim, gamma, p)
        psi = embed(mpo_power(build_mpo(shifted_cost(cost)), est.k_ceil))
        exact_success = float(np.sum(psi.amplitudes()[ground] ** 2))
        hits = np.isin(indices(perfect_sample(psi, draws, seed=i), [2] * n), ground)
        empirical = float(hits.mean())
        rows.append(f"p={p} gamma={gamma} gap={gap} K={est.k_ceil} exact={exact_success:.5f} empirical={empirical:.4f}")
        ok &= empirical >= p
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 120
    for row in rows:
        print("  ", row)
    failed = [r for r in rows if float(r.split("empirical=")[1]) < float(r.split()[0][2:])]
    record_criterion(5, "required-power calibration", ok,
                     f"{len(rows) - len(failed)}/9 grid points reach p empirically, {elapsed:.1f}s")
    assert ok, failed


# 6 ------------------------------------------------------------------------------------------


def random_mps(dims, bond, rng) -> MPS:
    bonds = [1] + [bond] * (len(dims) - 1) + [1]
    return right_canonical_mps([rng.normal(size=(bonds[i], d, bonds[i + 1])) for i, d in enumerate(dims)])


def test_criterion_06_sampling_fidelity():
    t0 = time.perf_counter()
    draws = 100_000
    cases = [((2,) * 4, 2), ((2,) * 6, 3), ((2,) * 8, 4), ((2,) * 10, 4), ((3, 2, 3, 2, 2), 3)]
    ratios, leaked = [], 0
    for i, (dims, bond) in enumerate(cases):
        rng = np.random.default_rng(600 + i)
        psi = random_mps(dims, bond, rng)
        exact = psi.amplitudes() ** 2
        counts = np.bincount(indices(perfect_sample(psi, draws, seed=i), dims), minlength=exact.size)
        tv = 0.5 * np.abs(counts / draws - exact).sum()
        bound = 0.5 * np.sum(3 * np.sqrt(exact * (1 - exact) / draws))
        ratios.append(tv / bound)
        # same structure with a zero-amplitude mask
        mask = rng.random(exact.size) < 0.5
        values = rng.normal(size=exact.size) * mask
        sparse = embed(from_dense_diagonal(values, dims))
        hits = indices(perfect_sample(sparse, draws, seed=50 + i), dims)
        leaked += int(np.count_nonzero(~mask[hits]))
    elapsed = time.perf_counter() - t0
    ok = max(ratios) < 1.0 and leaked == 0 and elapsed < 60
    record_criterion(6, "sampling fidelity", ok,
                     f"max TV/bound {max(ratios):.2f}, zero-amplitude draws {leaked}, {elapsed:.1f}s")
    assert ok


# 7 ------------------------------------------------------------------------------------------


@pytest.mark.slow
def test_criterion_07_desk_scale_benchmark():
    t0 = time.perf_counter()
    manifest = read_manifest(MANIFESTS / "desk_2d_L10.json")
    rows, per_instance = run_bench(manifest)
    elapsed = time.perf_counter() - t0
    ar_mean = rows[0]["ar_mean"]
    ok = len(per_instance) == 5 and ar_mean >= 0.995 and elapsed < 1800
    record_criterion(7, "desk-scale (2,10) benchmark row", ok,
                     f"max-AR per instance {[round(r['max_ar'], 4) for r in per_instance]}, "
                     f"mean {ar_mean:.4f}, {elapsed:.0f}s")
    assert ok


# 8 ------------------------------------------------------------------------------------------


@pytest.fixture(scope="module")
def trajectory_runs():
    t0 = time.perf_counter()
    runs = {}
    for seed in range(5):
        inst = gen_hypercubic(2, 6, seed=seed)
        for schedule in ("linear", "doubling"):
            runs[seed, schedule] = solve(inst, chi=32, schedule=schedule, steps=10, samples=1000, seed=0)
    runs["seconds"] = time.perf_counter() - t0
    return runs


def unimodal(series, slack: float) -> bool:
    peak = int(np.argmax(series))
    rising = all(series[i + 1] >= series[i] - slack for i in range(peak))
    falling = all(series[i + 1] <= series[i] + slack for i in range(peak, len(series) - 1))
    return rising and falling


def test_criterion_08_power_trajectory(trajectory_runs):
    checks = {}
    for schedule in ("linear", "doubling"):
        res = trajectory_runs[0, schedule]
        stats = res.checkpoints
        optimum = res.summary["optimum"]
        mean = [s.mean_energy for s in stats]
        std = [s.std_energy for s in stats]
        monotone = all(mean[i + 1] <= mean[i] + std[i] for i in range(len(mean) - 1))
        final = stats[-1]
        reached = final.m == 10 and final.min_energy == optimum and final.mean_energy - optimum <= final.std_energy
        entropy = [s.max_entropy for s in stats]
        peak = int(np.argmax(entropy))
        checks[f"{schedule} energy"] = monotone and reached
        checks[f"{schedule} entropy"] = (max(entropy) <= math.log2(32) and 0 < peak < len(entropy) - 1
                                         and unimodal(entropy, 0.05))
    wins = sum(
        trajectory_runs[s, "linear"].checkpoints[-1].unique >= trajectory_runs[s, "doubling"].checkpoints[-1].unique
        for s in range(5)
    )
    checks["unique-count direction"] = wins >= 3
    checks["runtime"] = trajectory_runs["seconds"] < 600
    ok = all(checks.values())
    detail = ", ".join(f"{k} {'ok' if v else 'FAILED'}" for k, v in checks.items())
    record_criterion(8, "energy, entropy and diversity trajectory at (2,6)", ok,
                     f"{detail}; linear >= doubling unique on {wins}/5 seeds, {trajectory_runs['seconds']:.0f}s")
    assert ok, checks


# 9 ------------------------------------------------------------------------------------------


def test_criterion_09_sa_baseline():
    t0 = time.perf_counter()
    seeds = range(20)
    sa_hits = 0
    for seed in seeds:
        inst = gen_hypercubic(2, 6, seed=seed)
        sa = simulated_annealing(inst.cost, restarts=100, seed=seed)
        sa_hits += sa.min_energy() == exact_minimum(inst.cost).optimum
    mpo_wins = 0
    for seed in range(5):
        inst = gen_heavyhex(3, seed=seed)
        res = solve(inst, chi=32, schedule="doubling", steps=11, samples=1000, seed=0, exact=False)
        sa = simulated_annealing(inst.cost, restarts=100, seed=seed)
        mpo_wins += res.summary["min_energy"] <= sa.min_energy()
    elapsed = time.perf_counter() - t0
    ok = sa_hits >= 0.95 * len(seeds) and mpo_wins >= 4 and elapsed < 600
    record_criterion(9, "simulated annealing baseline", ok,
                     f"SA optimal on {sa_hits}/{len(seeds)} (2,6) seeds, MPO <= SA on {mpo_wins}/5 heavy-hex L=3, "
                     f"{elapsed:.0f}s")
    assert ok


# 10 -----------------------------------------------------------------------------------------


def test_criterion_10_determinism(tmp_path, capsys):
    t0 = time.perf_counter()
    inst = tmp_path / "inst.json"
    manifest = tmp_path / "manifest.json"
    manifest.write_text(json.dumps({"cells": [{"family": "heavyhex", "size": 1}], "seeds": [0, 1],
                                    "chi": [8], "schedules": ["linear", "doubling"], "steps": 4, "samples": 100}))
    commands = {
        "generate": ["generate", "hypercubic", "--dim", "2", "--size", "4", "--seed", "3", "--force", "-o", "{out}"],
        "solve": ["solve", str(inst), "--chi", "8", "--steps", "5", "--samples", "200", "--seed", "11",
                  "--summary", "{out}"],
        "solve-doubling": ["solve", str(inst), "--schedule", "doubling", "--steps", "5", "--samples", "200",
                           "--summary", "{out}"],
        "exact": ["exact", str(inst), "--summary", "{out}"],
        "sa": ["sa", str(inst), "--sweeps", "50", "--restarts", "10", "--seed", "4", "--summary", "{out}"],
        "bench": ["bench", str(manifest), "-o", "{out}"],
    }
    save(gen_hypercubic(2, 4, seed=3), inst)
    differing = []
    for name, template in commands.items():
        outputs = []
        for rep in range(2):
            out = tmp_path / f"{name}-{rep}.out"
            assert main([a.replace("{out}", str(out)) for a in template]) == 0
            outputs.append(out.read_bytes())
        if outputs[0] != outputs[1]:
            differing.append(name)
    capsys.readouterr()
    elapsed = time.perf_counter() - t0
    ok = not differing and elapsed < 60
    record_criterion(10, "determinism", ok, f"{len(commands) - len(differing)}/{len(commands)} commands byte-identical, {elapsed:.1f}s")
    assert ok, differing
