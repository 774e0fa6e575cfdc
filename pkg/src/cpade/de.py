"""Differential Evolution operators and a generation step driven by per-member parameters.

Operators exist in two forms sharing one formula: a single-member form
(``mutate``, ``crossover_binomial``, ``crossover_exponential``) that accepts
forced indices for hand-traced checks, and a population form used by
:func:`de_generation`, which builds all ``N`` trials with array operations.
Indices are 0-based throughout.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Optional, Protocol

import numpy as np

from .core import (
    BudgetExhausted,
    EvalBudget,
    Individual,
    Population,
    RunRecord,
    SearchSpace,
    clamp_to_bounds,
)

__all__ = [
    "Crossover",
    "DeParams",
    "FixedParams",
    "Mutation",
    "MutationKind",
    "PBestArchive",
    "crossover_binomial",
    "crossover_exponential",
    "crossover_length",
    "de_generation",
    "de_run",
    "evolve",
    "exponential_lengths",
    "mutate",
    "sample_distinct_indices",
    "select",
]


class Mutation(enum.Enum):
    BEST1 = "best/1"
    BEST2 = "best/2"
    RAND1 = "rand/1"
    RAND2 = "rand/2"
    CURRENT_TO_BEST1 = "current-to-best/1"
    CURRENT_TO_PBEST1 = "current-to-pbest/1"


class Crossover(enum.Enum):
    BINOMIAL = "bin"
    EXPONENTIAL = "exp"


# number of r-indices each variant draws
N_RANDOM = {
    Mutation.BEST1: 2,
    Mutation.BEST2: 4,
    Mutation.RAND1: 3,
    Mutation.RAND2: 5,
    Mutation.CURRENT_TO_BEST1: 2,
    Mutation.CURRENT_TO_PBEST1: 2,
}

MIN_POPULATION = {
    Mutation.BEST1: 3,
    Mutation.BEST2: 5,
    Mutation.RAND1: 4,
    Mutation.RAND2: 6,
    Mutation.CURRENT_TO_BEST1: 3,
    Mutation.CURRENT_TO_PBEST1: 3,
}


@dataclass(frozen=True)
class MutationKind:
    """A mutation variant; ``p`` and ``archive`` only matter for current-to-pbest/1."""

    variant: Mutation
    p: float = 0.1
    archive: bool = False

    def __post_init__(self):
        if not 0.0 < self.p <= 1.0:
            raise ValueError("p must lie in (0, 1]")

    @property
    def min_population(self) -> int:
        return MIN_POPULATION[self.variant]


@dataclass(frozen=True)
class DeParams:
    F: float
    CR: float

    def __post_init__(self):
        if not (0.0 < self.F <= 1.0 and 0.0 < self.CR <= 1.0):
            raise ValueError("F and CR must lie in (0, 1]")


class PBestArchive:
    """Replaced parents kept for current-to-pbest/1 with archive.

    When an insertion overflows the capacity a uniformly random member is
    evicted.
    """

    def __init__(self, capacity: int, dimension: int):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._members = np.empty((0, dimension))

    def __len__(self) -> int:
        return self._members.shape[0]

    @property
    def members(self) -> np.ndarray:
        return self._members

    def add(self, points: np.ndarray, rng: np.random.Generator) -> None:
        points = np.atleast_2d(points)
        if points.shape[0] == 0:
            return
        members = np.vstack([self._members, points])
        excess = members.shape[0] - self.capacity
        if excess > 0:
            drop = rng.choice(members.shape[0], size=excess, replace=False)
            members = np.delete(members, drop, axis=0)
        self._members = members


# --------------------------------------------------------------------------
# index sampling


def sample_distinct_indices(size: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """``(size, count)`` matrix; row i holds distinct indices, none equal to i."""
    if count > size - 1:
        raise ValueError(f"cannot draw {count} distinct indices besides the target from {size}")
    keys = rng.random((size, size))
    np.fill_diagonal(keys, 2.0)
    return np.argsort(keys, axis=1)[:, :count]


def _sample_from_union(size: int, union_size: int, exclude: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One index per row from ``range(union_size)`` avoiding every column of ``exclude``."""
    out = rng.integers(0, union_size, size)
    bad = np.any(out[:, None] == exclude, axis=1)
    while bad.any():
        out[bad] = rng.integers(0, union_size, int(bad.sum()))
        bad = np.any(out[:, None] == exclude, axis=1)
    return out


def _pbest_pool_size(p, size: int) -> np.ndarray:
    return np.clip(np.floor(np.asarray(p, dtype=float) * size).astype(int), 2, size)


# --------------------------------------------------------------------------
# mutation


def _combine(variant: Mutation, X, current, best, r, F, union=None, pbest=None):
    """Mutant vectors for rows ``current`` given drawn indices ``r``.

    ``F`` is a column vector.  For current-to-pbest/1 the second difference
    index refers to ``union`` (population stacked over the archive).
    """
    if variant is Mutation.BEST1:
        return best + F * (X[r[:, 0]] - X[r[:, 1]])
    if variant is Mutation.BEST2:
        return best + F * (X[r[:, 0]] - X[r[:, 1]]) + F * (X[r[:, 2]] - X[r[:, 3]])
    if variant is Mutation.RAND1:
        return X[r[:, 0]] + F * (X[r[:, 1]] - X[r[:, 2]])
    if variant is Mutation.RAND2:
        return X[r[:, 0]] + F * (X[r[:, 1]] - X[r[:, 2]]) + F * (X[r[:, 3]] - X[r[:, 4]])
    if variant is Mutation.CURRENT_TO_BEST1:
        return current + F * (best - current) + F * (X[r[:, 0]] - X[r[:, 1]])
    if variant is Mutation.CURRENT_TO_PBEST1:
        pool = X if union is None else union
        return current + F * (pbest - current) + F * (X[r[:, 0]] - pool[r[:, 1]])
    raise ValueError(f"unknown mutation {variant}")


def mutate(kind: MutationKind, pop: Population, i: int, F: float, rng: np.random.Generator,
           archive: Optional[PBestArchive] = None, indices=None, pbest_index: Optional[int] = None) -> np.ndarray:
    """Mutant vector for member ``i``.

    ``indices`` forces the r-indices (r1, r2, ...) and ``pbest_index`` the
    pbest member; otherwise both are drawn from ``rng``.  With an active
    archive the last index of current-to-pbest/1 addresses the population
    followed by the archive members.
    """
    n = pop.size
    if n < kind.min_population:
        raise ValueError(f"{kind.variant.value} needs at least {kind.min_population} members, got {n}")
    X = pop.positions
    union = None
    if kind.variant is Mutation.CURRENT_TO_PBEST1 and kind.archive and archive is not None and len(archive):
        union = np.vstack([X, archive.members])
    need = N_RANDOM[kind.variant]
    if indices is None:
        choices = [j for j in range(n) if j != i]
        r = list(rng.choice(choices, size=need, replace=False))
        if union is not None:
            r[-1] = int(_sample_from_union(1, union.shape[0], np.array([[i, r[0]]]), rng)[0])
    else:
        r = [int(j) for j in indices]
        if len(r) != need:
            raise ValueError(f"{kind.variant.value} takes {need} indices")
    pbest = None
    if kind.variant is Mutation.CURRENT_TO_PBEST1:
        if pbest_index is None:
            order = np.argsort(pop.values, kind="stable")
            pbest_index = int(order[rng.integers(0, _pbest_pool_size(kind.p, n))])
        pbest = X[pbest_index][None, :]
    best = X[pop.best_index][None, :]
    v = _combine(kind.variant, X, X[i][None, :], best, np.array([r]), np.array([[F]], dtype=float),
                 union=union, pbest=pbest)
    return v[0]


def mutate_population(kind: MutationKind, pop: Population, F: np.ndarray, rng: np.random.Generator,
                      archive: Optional[PBestArchive] = None, p=None) -> np.ndarray:
    """Mutant vectors for every member at once."""
    n = pop.size
    if n < kind.min_population:
        raise ValueError(f"{kind.variant.value} needs at least {kind.min_population} members, got {n}")
    X = pop.positions
    r = sample_distinct_indices(n, N_RANDOM[kind.variant], rng)
    union = pbest = None
    if kind.variant is Mutation.CURRENT_TO_PBEST1:
        if kind.archive and archive is not None and len(archive):
            union = np.vstack([X, archive.members])
            exclude = np.column_stack([np.arange(n), r[:, 0]])
            r[:, 1] = _sample_from_union(n, union.shape[0], exclude, rng)
        pool = _pbest_pool_size(kind.p if p is None else p, n)
        order = np.argsort(pop.values, kind="stable")
        pbest = X[order[rng.integers(0, pool, size=n) if np.ndim(pool) == 0 else rng.integers(0, pool)]]
    best = np.broadcast_to(X[pop.best_index], X.shape)
    return _combine(kind.variant, X, X, best, r, np.asarray(F, dtype=float).reshape(-1, 1), union=union, pbest=pbest)


# --------------------------------------------------------------------------
# crossover


def crossover_binomial(target, mutant, CR: float, rng: np.random.Generator, j_rand: Optional[int] = None) -> np.ndarray:
    """``u_j = v_j`` if ``rand(j) <= CR`` or ``j == j_rand``, else ``x_j``."""
    target = np.asarray(target, dtype=float)
    mutant = np.asarray(mutant, dtype=float)
    if target.shape != mutant.shape:
        raise ValueError("target and mutant lengths differ")
    d = target.size
    if j_rand is None:
        j_rand = int(rng.integers(0, d))
    take = rng.random(d) <= CR
    take[j_rand] = True
    return np.where(take, mutant, target)


def crossover_length(CR: float, d: int, rng: np.random.Generator) -> int:
    """Run the length loop: grow L while ``rand <= CR`` and ``L <= d``; at least 1.

    The result can be ``d + 1``; the copied window is capped at ``d``.
    """
    L = 0
    while rng.random() <= CR and L <= d:
        L += 1
    return max(L, 1)


def exponential_lengths(CR: np.ndarray, d: int, rng: np.random.Generator) -> np.ndarray:
    """Vectorised :func:`crossover_length` for one CR per row."""
    CR = np.asarray(CR, dtype=float).reshape(-1)
    hits = rng.random((CR.size, d + 1)) <= CR[:, None]
    # leading run of hits = number of loop iterations before the first failure
    run = np.where(hits.all(axis=1), d + 1, np.argmin(hits, axis=1))
    return np.maximum(run, 1)


def _window_mask(start: np.ndarray, length: np.ndarray, d: int) -> np.ndarray:
    # circular window {(start + k) mod d : k = 0..L-1}
    offset = (np.arange(d)[None, :] - start[:, None]) % d
    return offset < np.minimum(length, d)[:, None]


def crossover_exponential(target, mutant, CR: float, rng: np.random.Generator,
                          start: Optional[int] = None, length: Optional[int] = None) -> np.ndarray:
    """Copy the mutant over a circular window beginning at ``start``; target elsewhere."""
    target = np.asarray(target, dtype=float)
    mutant = np.asarray(mutant, dtype=float)
    if target.shape != mutant.shape:
        raise ValueError("target and mutant lengths differ")
    d = target.size
    if start is None:
        start = int(rng.integers(0, d))
    if length is None:
        length = crossover_length(CR, d, rng)
    mask = _window_mask(np.array([start]), np.array([length]), d)[0]
    return np.where(mask, mutant, target)


def crossover_mask(crossover: Crossover, CR: np.ndarray, d: int, rng: np.random.Generator) -> np.ndarray:
    """Boolean ``(N, d)`` matrix of coordinates taken from the mutant."""
    CR = np.asarray(CR, dtype=float).reshape(-1)
    n = CR.size
    if crossover is Crossover.BINOMIAL:
        take = rng.random((n, d)) <= CR[:, None]
        take[np.arange(n), rng.integers(0, d, n)] = True
        return take
    start = rng.integers(0, d, n)
    return _window_mask(start, exponential_lengths(CR, d, rng), d)


# --------------------------------------------------------------------------
# selection and one generation


def select(target: Individual, trial: Individual) -> tuple[Individual, bool]:
    """Keep the trial when it is no worse than the target (ties go to the trial)."""
    if trial.value <= target.value:
        return trial, True
    return target, False


def de_generation(pop: Population, F, CR, kind: MutationKind, crossover: Crossover, space: SearchSpace,
                  objective: Callable, budget: EvalBudget, rng: np.random.Generator,
                  archive: Optional[PBestArchive] = None, p=None) -> tuple[Population, np.ndarray]:
    """One generation with parameters ``F[i]``, ``CR[i]`` for member ``i``.

    Mutants are clamped to ``space`` before crossover, so every trial is
    feasible.  Returns the next population and the per-member success mask
    (trial kept, ties included).  Raises :class:`BudgetExhausted` without
    evaluating anything when the budget cannot cover the whole generation.
    """
    n = pop.size
    F = np.broadcast_to(np.asarray(F, dtype=float), (n,))
    CR = np.broadcast_to(np.asarray(CR, dtype=float), (n,))
    if budget.remaining < n:
        raise BudgetExhausted(f"generation needs {n} evaluations, {budget.remaining} left")
    mutants = clamp_to_bounds(mutate_population(kind, pop, F, rng, archive=archive, p=p), space)
    trials = np.where(crossover_mask(crossover, CR, pop.dimension, rng), mutants, pop.positions)
    trial_values = budget.evaluate_batch(objective, trials)
    success = trial_values <= pop.values
    if archive is not None and success.any():
        archive.add(pop.positions[success], rng)
    positions = np.where(success[:, None], trials, pop.positions)
    values = np.where(success, trial_values, pop.values)
    return Population(positions, values, pop.generation + 1), success


# --------------------------------------------------------------------------
# run loop


class ParameterController(Protocol):
    def propose(self, pop: Population, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray, Optional[np.ndarray]]:
        ...

    def observe(self, old: Population, new: Population, success: np.ndarray, F: np.ndarray, CR: np.ndarray) -> None:
        ...


@dataclass
class FixedParams:
    """Constant F and CR for every member (classic DE)."""

    F: float = 0.5
    CR: float = 0.9

    def propose(self, pop, rng):
        n = pop.size
        return np.full(n, self.F), np.full(n, self.CR), None

    def observe(self, old, new, success, F, CR):
        pass


def evolve(problem, size: int, kind: MutationKind, crossover: Crossover, budget: EvalBudget,
           rng: np.random.Generator, controller, max_generations: Optional[int] = None,
           seed: Optional[int] = None, config: Optional[dict] = None) -> RunRecord:
    """Initialize a population in ``problem.space`` and iterate generations.

    Stops when the next full generation no longer fits in ``budget`` or when
    ``max_generations`` is reached.
    """
    if size < kind.min_population:
        raise ValueError(f"population of {size} too small for {kind.variant.value}")
    if budget.remaining < size:
        raise ValueError(f"budget of {budget.remaining} evaluations cannot cover one population of {size}")
    pop = Population.initialize(problem.space, size, problem, budget, rng)
    archive = PBestArchive(size, problem.dimension) if kind.archive else None
    trace = [float(pop.values.min())]
    while budget.remaining >= size and (max_generations is None or pop.generation < max_generations):
        F, CR, p = controller.propose(pop, rng)
        try:
            new, success = de_generation(pop, F, CR, kind, crossover, problem.space, problem, budget, rng,
                                         archive=archive, p=p)
        except BudgetExhausted:
            break
        controller.observe(pop, new, success, F, CR)
        pop = new
        trace.append(float(pop.values.min()))
    best = pop.best
    optimum = getattr(problem, "optimum_value", 0.0)
    return RunRecord(
        best_position=best.position,
        best_value=best.value,
        best_error=best.value - optimum,
        evals_used=budget.used,
        generations=pop.generation,
        trace=trace,
        seed=seed,
        config=dict(config or {}),
    )


def de_run(problem, F: float, CR: float, kind: MutationKind, crossover: Crossover, size: int,
           budget: EvalBudget, rng: np.random.Generator, **kwargs) -> RunRecord:
    """Classic DE with fixed parameters."""
    return evolve(problem, size, kind, crossover, budget, rng, FixedParams(F, CR), **kwargs)
