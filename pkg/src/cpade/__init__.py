"""Cluster-Based Parameter Adaptation for Differential Evolution, with baselines and a benchmark harness."""

from .benchmarks import BenchmarkProblem, make_problem
from .core import BudgetExhausted, EvalBudget, Population, RunRecord, SearchSpace, make_rng
from .cpa import CpaConfig, CpaController, cpa_run
from .de import Crossover, Mutation, MutationKind, de_generation, de_run
from .shade import shade_run
from .stats import wilcoxon_ranksum
from .variants import parse_variant

__all__ = [
    "BenchmarkProblem",
    "BudgetExhausted",
    "CpaConfig",
    "CpaController",
    "Crossover",
    "EvalBudget",
    "Mutation",
    "MutationKind",
    "Population",
    "RunRecord",
    "SearchSpace",
    "cpa_run",
    "de_generation",
    "de_run",
    "make_problem",
    "make_rng",
    "parse_variant",
    "shade_run",
    "wilcoxon_ranksum",
]

__version__ = "0.1.0"
