"""Shared helpers: random instance generators and oracles that share no code with the library."""
from __future__ import annotations

import itertools

import numpy as np
import pytest

from powermpo.cost import PolynomialCost


def random_spin_terms(n: int, n_terms: int, max_order: int, rng: np.random.Generator):
    """Random ``(coeff, sites)`` list on ``n`` binary sites (1-based sites)."""
    terms = []
    for _ in range(n_terms):
        order = int(rng.integers(1, min(max_order, n) + 1))
        sites = tuple(sorted(rng.choice(n, size=order, replace=False) + 1))
        terms.append((float(rng.normal()), sites))
    return terms


def random_qubo_terms(n: int, rng: np.random.Generator, density: float = 1.0):
    terms = [(float(rng.normal()), (i,)) for i in range(1, n + 1)]
    for i, j in itertools.combinations(range(1, n + 1), 2):
        if rng.random() < density:
            terms.append((float(rng.normal()), (i, j)))
    return terms


def naive_spin_energy(n: int, terms, offset: float = 0.0) -> np.ndarray:
    """All ``2**n`` energies by explicit loops, z=0 -> +1 and z=1 -> -1, site 1 most significant."""
    out = np.empty(2**n)
    for idx, z in enumerate(itertools.product((0, 1), repeat=n)):
        total = offset
        for coeff, sites in terms:
            value = coeff
            for s in sites:
                value *= 1 - 2 * z[s - 1]
            total += value
        out[idx] = total
    return out


def toy_cost() -> PolynomialCost:
    """Two sites with the single coupling ``Z1 Z2``."""
    return PolynomialCost.spin(2, [(1.0, (1, 2))])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}: {title} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
