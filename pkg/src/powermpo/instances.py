"""Benchmark problem families, their chain orderings, and JSON (de)serialization.

Coefficients are drawn from a Philox stream keyed by the instance seed, in a fixed
traversal order (vertices ascending, then edges lexicographic, then cubic terms
by center vertex), all in chain labels.
"""
from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal

import numpy as np

from .cost import CostTerm, PolynomialCost
from .errors import ValidationError

FORMAT_VERSION = 1


@dataclass
class ProblemInstance:
    """A cost already expressed in chain sites, plus how graph vertices map onto the chain.

    ``site_order[v]`` is the 0-based chain position of graph vertex ``v``.
    """

    cost: PolynomialCost
    family: str = "custom"
    parameters: dict[str, Any] = field(default_factory=dict)
    site_order: list[int] | None = None

    def __post_init__(self) -> None:
        if self.site_order is None:
            self.site_order = list(range(self.cost.num_sites))
        if sorted(self.site_order) != list(range(self.cost.num_sites)):
            raise ValidationError("site_order must be a permutation of 0..N-1")

    @property
    def num_sites(self) -> int:
        return self.cost.num_sites

    def to_dict(self) -> dict[str, Any]:
        return {
            "version": FORMAT_VERSION,
            "num_sites": self.cost.num_sites,
            "local_dims": list(self.cost.local_dims),
            "offset": self.cost.offset,
            "terms": [
                {"coeff": t.coeff, "factors": [[s - 1, k] for s, k in t.factors]}
                for t in self.cost.terms
            ],
            "metadata": {
                "family": self.family,
                "parameters": self.parameters,
                "site_order": list(self.site_order),
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=None, separators=(",", ":"))

    def digest(self) -> str:
        """SHA-256 of the canonical JSON encoding."""
        return hashlib.sha256(self.to_json().encode()).hexdigest()

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ProblemInstance":
        if not isinstance(data, dict):
            raise ValidationError("instance file must hold a JSON object")
        if data.get("version") != FORMAT_VERSION:
            raise ValidationError(f"unsupported instance version {data.get('version')!r}")
        try:
            n = int(data["num_sites"])
            dims = data["local_dims"]
            if len(dims) != n:
                raise ValidationError("local_dims length does not match num_sites")
            terms = []
            for entry in data["terms"]:
                factors = []
                for site, k in entry["factors"]:
                    if not 0 <= int(site) < n:
                        raise ValidationError(f"site index {site} outside 0..{n - 1}")
                    factors.append((int(site) + 1, int(k)))
                terms.append(CostTerm(float(entry["coeff"]), tuple(factors)))
            cost = PolynomialCost(dims, terms, float(data.get("offset", 0.0)))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"malformed instance: {exc}") from exc
        meta = data.get("metadata", {}) or {}
        return cls(cost, meta.get("family", "custom"), meta.get("parameters", {}), meta.get("site_order"))


def save(inst: ProblemInstance, path) -> None:
    Path(path).write_text(inst.to_json() + "\n")


def load(path) -> ProblemInstance:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON ({exc})") from exc
    return ProblemInstance.from_dict(data)


def coefficient_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


def _bimodal(rng: np.random.Generator, size: int) -> np.ndarray:
    return 1.0 - 2.0 * rng.integers(0, 2, size=size)


def chain_index(r, L: int) -> int:
    """1-based chain position ``1 + sum_nu r_nu L**(nu-1)`` of lattice point ``r``."""
    return 1 + sum(int(x) * L**nu for nu, x in enumerate(r))


def hypercubic_edges(D: int, L: int, boundary: Literal["open", "periodic"] = "open") -> list[tuple[int, int]]:
    """Nearest-neighbor edges as sorted 1-based chain pairs, lexicographic."""
    edges = set()
    for r in itertools.product(range(L), repeat=D):
        for nu in range(D):
            if r[nu] + 1 < L:
                nxt = r[nu] + 1
            elif boundary == "periodic" and L > 2:
                nxt = 0
            else:
                continue
            s = list(r)
            s[nu] = nxt
            a, b = chain_index(r, L), chain_index(s, L)
            edges.add((min(a, b), max(a, b)))
    return sorted(edges)


def gen_hypercubic(
    D: int, L: int, seed: int, boundary: Literal["open", "periodic"] = "open"
) -> ProblemInstance:
    """±J Ising spin glass on the ``L**D`` hypercubic lattice."""
    if D < 1 or L < 2:
        raise ValidationError(f"need D >= 1 and L >= 2, got D={D}, L={L}")
    if boundary not in ("open", "periodic"):
        raise ValidationError(f"unknown boundary {boundary!r}")
    edges = hypercubic_edges(D, L, boundary)
    couplings = _bimodal(coefficient_rng(seed), len(edges))
    cost = PolynomialCost.spin(L**D, [(float(j), e) for j, e in zip(couplings, edges)])
    # graph vertices enumerate lattice points lexicographically (r_1 slowest)
    order = [chain_index(r, L) - 1 for r in itertools.product(range(L), repeat=D)]
    return ProblemInstance(
        cost, "hypercubic", {"dim": D, "size": L, "seed": int(seed), "boundary": boundary}, order
    )


def honeycomb(L: int) -> tuple[list[tuple[int, int]], list[tuple[tuple[int, int], tuple[int, int]]]]:
    """Brick-wall honeycomb with ``L x L`` hexagonal cells.

    Cell ``(cx, cy)`` spans columns ``x0..x0+2`` on rows ``cy`` and ``cy+1`` with
    ``x0 = 2 cx + (cy mod 2)``. Returns vertices ``(x, y)`` and edges between them.
    """
    vertices = set()
    edges = set()
    for cy in range(L):
        for cx in range(L):
            x0 = 2 * cx + cy % 2
            for y in (cy, cy + 1):
                for x in range(x0, x0 + 3):
                    vertices.add((x, y))
                for x in range(x0, x0 + 2):
                    edges.add(((x, y), (x + 1, y)))
            for x in (x0, x0 + 2):
                edges.add(((x, cy), (x, cy + 1)))
    return sorted(vertices, key=lambda v: (v[1], v[0])), sorted(edges)


def heavyhex_graph(L: int):
    """Heavy-hex lattice embedded on a grid: honeycomb vertex ``(x, y)`` sits at
    ``(2x, 2y)`` and each edge midpoint halfway between its endpoints.

    Returns ``(coords, edges)`` with ``coords`` in row-major order (grid row, then
    column) and edges as pairs of indices into ``coords``.
    """
    hv, he = honeycomb(L)
    points = {(2 * x, 2 * y) for x, y in hv}
    links = []
    for (x1, y1), (x2, y2) in he:
        a, b = (2 * x1, 2 * y1), (2 * x2, 2 * y2)
        mid = ((a[0] + b[0]) // 2, (a[1] + b[1]) // 2)
        points.add(mid)
        links += [(a, mid), (mid, b)]
    coords = sorted(points, key=lambda p: (p[1], p[0]))
    index = {p: i for i, p in enumerate(coords)}
    edges = sorted((min(index[a], index[b]), max(index[a], index[b])) for a, b in links)
    return coords, edges


def snake_order(coords: list[tuple[int, int]]) -> list[int]:
    """Chain position of each grid point: rows top to bottom, alternating direction."""
    rows: dict[int, list[int]] = {}
    for i, (x, y) in enumerate(coords):
        rows.setdefault(y, []).append(i)
    order = [0] * len(coords)
    pos = 0
    for n, y in enumerate(sorted(rows)):
        members = sorted(rows[y], key=lambda i: coords[i][0], reverse=n % 2 == 1)
        for i in members:
            order[i] = pos
            pos += 1
    return order


def gen_heavyhex(L: int, seed: int) -> ProblemInstance:
    """Cubic HUBO on the heavy-hex lattice with ``L x L`` cells, all coefficients ±1.

    Terms: a field on every vertex, a coupling on every edge, and a three-body
    term ``Z_l Z_n1 Z_n2`` for every degree-2 vertex ``l`` and its two neighbors.
    """
    if L < 1:
        raise ValidationError(f"need L >= 1, got {L}")
    coords, graph_edges = heavyhex_graph(L)
    order = snake_order(coords)
    n = len(coords)
    edges = sorted((min(order[a], order[b]) + 1, max(order[a], order[b]) + 1) for a, b in graph_edges)
    neighbors: dict[int, list[int]] = {v: [] for v in range(1, n + 1)}
    for a, b in edges:
        neighbors[a].append(b)
        neighbors[b].append(a)
    cubic = [(v, *sorted(neighbors[v])) for v in range(1, n + 1) if len(neighbors[v]) == 2]

    rng = coefficient_rng(seed)
    fields = _bimodal(rng, n)
    couplings = _bimodal(rng, len(edges))
    triples = _bimodal(rng, len(cubic))
    terms = [(float(h), (v,)) for v, h in zip(range(1, n + 1), fields)]
    terms += [(float(j), e) for e, j in zip(edges, couplings)]
    terms += [(float(c), t) for t, c in zip(cubic, triples)]
    cost = PolynomialCost.spin(n, terms)
    return ProblemInstance(cost, "heavyhex", {"size": L, "seed": int(seed)}, order)


def generate(family: str, seed: int, **params) -> ProblemInstance:
    if family == "hypercubic":
        return gen_hypercubic(int(params["dim"]), int(params["size"]), seed, params.get("boundary", "open"))
    if family == "heavyhex":
        return gen_heavyhex(int(params["size"]), seed)
    raise ValidationError(f"unknown family {family!r}")
