"""SHADE baseline: success-history based adaptation of F and CR.

Follows the usual SHADE conventions: ``H`` memory slots initialised at 0.5,
CR drawn from Normal(M_CR, 0.1) and F from Cauchy(M_F, 0.1), memory written
with the improvement-weighted Lehmer mean (F) and arithmetic mean (CR), one
slot per generation in cyclic order.  Only strict improvements feed the
memory.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import EvalBudget, RunRecord
from .de import Crossover, Mutation, MutationKind, evolve

__all__ = ["ShadeController", "ShadeState", "shade_run", "shade_sample_params", "shade_update_memory"]


@dataclass
class ShadeState:
    H: int = 100
    memory_F: np.ndarray = field(default=None)
    memory_CR: np.ndarray = field(default=None)
    memory_index: int = 0

    def __post_init__(self):
        if self.memory_F is None:
            self.memory_F = np.full(self.H, 0.5)
        if self.memory_CR is None:
            self.memory_CR = np.full(self.H, 0.5)


def shade_sample_params(state: ShadeState, rng: np.random.Generator, size: Optional[int] = None):
    """Draw (F, CR); returns scalars, or arrays when ``size`` is given."""
    n = 1 if size is None else size
    slot = rng.integers(0, state.H, n)
    CR = np.clip(rng.normal(state.memory_CR[slot], 0.1), 0.0, 1.0)
    mu_F = state.memory_F[slot]
    F = mu_F + 0.1 * rng.standard_cauchy(n)
    bad = F <= 0.0
    while bad.any():
        F[bad] = mu_F[bad] + 0.1 * rng.standard_cauchy(int(bad.sum()))
        bad = F <= 0.0
    F = np.minimum(F, 1.0)
    if size is None:
        return float(F[0]), float(CR[0])
    return F, CR


def shade_update_memory(state: ShadeState, successful_F, successful_CR, improvements) -> None:
    """Write the weighted means of successful parameters into the next memory slot."""
    F = np.asarray(successful_F, dtype=float)
    CR = np.asarray(successful_CR, dtype=float)
    w = np.asarray(improvements, dtype=float)
    if not (F.size == CR.size == w.size):
        raise ValueError("successful_F, successful_CR and improvements must have equal length")
    if F.size == 0:
        return
    w = w / w.sum() if w.sum() > 0 else np.full(w.size, 1.0 / w.size)
    state.memory_F[state.memory_index] = np.sum(w * F * F) / np.sum(w * F)
    state.memory_CR[state.memory_index] = np.sum(w * CR)
    state.memory_index = (state.memory_index + 1) % state.H


class ShadeController:
    """Per-member SHADE parameters plus a pbest fraction drawn from [2/N, 0.2]."""

    def __init__(self, H: int = 100, p_max: float = 0.2):
        self.state = ShadeState(H)
        self.p_max = p_max

    def propose(self, pop, rng):
        n = pop.size
        F, CR = shade_sample_params(self.state, rng, size=n)
        p = rng.uniform(min(2.0 / n, self.p_max), self.p_max, n)
        return F, CR, p

    def observe(self, old, new, success, F, CR):
        gain = old.values - new.values
        improved = gain > 0
        shade_update_memory(self.state, F[improved], CR[improved], gain[improved])


def shade_kind(variant: Mutation) -> MutationKind:
    if variant is Mutation.CURRENT_TO_PBEST1:
        return MutationKind(variant, p=0.2, archive=True)
    if variant is Mutation.RAND1:
        return MutationKind(variant)
    raise ValueError("SHADE runs with rand/1 or current-to-pbest/1 with archive")


def shade_run(problem, mutation: Mutation, size: int, budget: EvalBudget, rng: np.random.Generator,
              crossover: Optional[Crossover] = None, H: int = 100, max_generations: Optional[int] = None,
              seed: Optional[int] = None) -> RunRecord:
    """SHADE_R (rand/1) or SHADE_C (current-to-pbest/1 with archive).

    Crossover defaults to binomial for SHADE_C and exponential for SHADE_R.
    """
    kind = shade_kind(mutation)
    if crossover is None:
        crossover = Crossover.BINOMIAL if mutation is Mutation.CURRENT_TO_PBEST1 else Crossover.EXPONENTIAL
    echo = {"algorithm": "SHADE", "mutation": mutation.value, "archive": kind.archive,
            "crossover": crossover.value, "N": size, "H": H}
    return evolve(problem, size, kind, crossover, budget, rng, ShadeController(H),
                  max_generations=max_generations, seed=seed, config=echo)
