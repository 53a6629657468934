"""Combinatorial optimization by powering diagonal matrix product operators."""
from __future__ import annotations

from .baselines import ExactResult, brute_force, exact_minimum, frontier_solve, simulated_annealing
from .cost import CostTerm, PolynomialCost, evaluate, evaluate_many, lambda_bound, shifted_cost
from .errors import (
    GaugeError,
    NumericalError,
    PowerMPOError,
    ResourceGuardError,
    VanishedOperatorError,
    ValidationError,
)
from .instances import ProblemInstance, gen_heavyhex, gen_hypercubic, generate
from .mpo import DiagonalMPO, build_mpo, canonicalize, dense_diagonal, normalize
from .power import Schedule, estimate_required_power, mpo_power, run_power, zipup_multiply
from .sampler import MPS, SampleSet, embed, perfect_sample
from .solver import SolveResult, solve
from .tensor import EXACT, TruncationPolicy, truncated_svd

__version__ = "0.1.0"

__all__ = [
    "CostTerm",
    "DiagonalMPO",
    "EXACT",
    "ExactResult",
    "GaugeError",
    "MPS",
    "NumericalError",
    "PolynomialCost",
    "PowerMPOError",
    "ProblemInstance",
    "ResourceGuardError",
    "SampleSet",
    "Schedule",
    "SolveResult",
    "TruncationPolicy",
    "ValidationError",
    "VanishedOperatorError",
    "annotations",
    "brute_force",
    "build_mpo",
    "canonicalize",
    "dense_diagonal",
    "embed",
    "estimate_required_power",
    "evaluate",
    "evaluate_many",
    "exact_minimum",
    "frontier_solve",
    "gen_heavyhex",
    "gen_hypercubic",
    "generate",
    "lambda_bound",
    "mpo_power",
    "normalize",
    "perfect_sample",
    "run_power",
    "shifted_cost",
    "simulated_annealing",
    "solve",
    "truncated_svd",
    "zipup_multiply",
]
