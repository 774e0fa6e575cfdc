"""Cluster-Based Parameter Adaptation (CPA) for Differential Evolution.

The controller cycles through three stages while DE runs:

* random generation: every member gets uniformly drawn (F, CR); the pairs
  whose trial replaced its target go to the success archive ``A`` until it
  holds ``AS`` entries;
* guided generation: K-means groups ``A``; each cluster gets a share of
  ``RP`` new pairs proportional to its size, sampled at random directions
  around its centroid with distance ``R * U**alpha``; ``A`` is emptied;
* deployment: the ``RP`` pending pairs (``NP``) are consumed ``N`` per
  generation, after which random generation resumes.

Tuning costs no objective evaluations beyond the DE generations themselves.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .clustering import choose_k, kmeans
from .core import EvalBudget, RunRecord, SearchSpace, clamp_to_bounds, uniform_sample_in_box
from .de import Crossover, Mutation, MutationKind, evolve

__all__ = [
    "CpaConfig",
    "CpaController",
    "SuccessArchive",
    "allocate_cluster_counts",
    "cpa_run",
    "generate_cluster_params",
    "random_param_generation",
    "record_successes",
    "sample_direction",
    "sample_directions",
    "sample_distance",
]

PARAM_FLOOR = 1e-12


@dataclass(frozen=True)
class CpaConfig:
    AS: int = 50
    RP: int = 200
    k: int = 8
    R: float = 0.2
    alpha: float = 0.5
    population_size: int = 60
    mutation: MutationKind = MutationKind(Mutation.RAND1)
    crossover: Crossover = Crossover.EXPONENTIAL
    # (k_lower, k_upper) switches to silhouette selection of K every cycle
    k_range: Optional[tuple] = None
    param_space: SearchSpace = field(default_factory=lambda: SearchSpace([PARAM_FLOOR] * 2, [1.0] * 2))
    kmeans_max_iters: int = 100

    def __post_init__(self):
        if self.AS < self.k or self.RP < self.k:
            raise ValueError("AS and RP must be at least k")
        if self.k < 1 or self.R <= 0 or self.alpha <= 0:
            raise ValueError("k must be positive, R and alpha strictly positive")
        if self.population_size < max(4, self.mutation.min_population):
            raise ValueError("population too small")
        if self.k_range is not None:
            lo, hi = self.k_range
            if not 2 <= lo <= hi <= self.AS:
                raise ValueError(f"K range {self.k_range} infeasible for an archive of {self.AS}")

    @property
    def zeta(self) -> int:
        return self.param_space.dimension


class SuccessArchive:
    """Bounded list of parameter vectors that produced a successful trial."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self.entries: list[np.ndarray] = []

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def full(self) -> bool:
        return len(self.entries) >= self.capacity

    def as_array(self) -> np.ndarray:
        return np.array(self.entries)

    def clear(self) -> None:
        self.entries = []


def random_param_generation(config: CpaConfig, rng: np.random.Generator, count: Optional[int] = None) -> np.ndarray:
    """``(count, zeta)`` parameters drawn uniformly in G and clamped to it."""
    count = config.population_size if count is None else count
    return clamp_to_bounds(uniform_sample_in_box(config.param_space, rng, count), config.param_space)


def record_successes(params, success_mask, archive: SuccessArchive) -> int:
    """Append successful rows in order until the archive is full; returns how many were admitted."""
    params = np.atleast_2d(np.asarray(params, dtype=float))
    mask = np.asarray(success_mask, dtype=bool)
    if params.shape[0] != mask.shape[0]:
        raise ValueError("params and mask lengths differ")
    admitted = 0
    for row in params[mask]:
        if archive.full:
            break
        archive.entries.append(row.copy())
        admitted += 1
    return admitted


def allocate_cluster_counts(sizes, RP: int) -> np.ndarray:
    """``floor(RP * n_k / sum n)`` per cluster, leftovers by largest remainder (ties to lower index)."""
    sizes = np.asarray(sizes, dtype=np.int64)
    if np.any(sizes < 1) or RP < 1:
        raise ValueError("cluster sizes and RP must be positive")
    total = int(sizes.sum())
    exact = RP * sizes
    counts = exact // total
    remainders = exact - counts * total
    leftover = RP - int(counts.sum())
    order = np.argsort(-remainders, kind="stable")
    counts[order[:leftover]] += 1
    return counts


def sample_directions(count: int, zeta: int, rng: np.random.Generator) -> np.ndarray:
    """Unit vectors ``o / |o|`` with standard normal components; all-zero draws are redrawn."""
    if zeta < 1:
        raise ValueError("zeta must be at least 1")
    o = rng.standard_normal((count, zeta))
    norm = np.linalg.norm(o, axis=1)
    while np.any(norm == 0.0):
        bad = norm == 0.0
        o[bad] = rng.standard_normal((int(bad.sum()), zeta))
        norm = np.linalg.norm(o, axis=1)
    return o / norm[:, None]


def sample_direction(zeta: int, rng: np.random.Generator) -> np.ndarray:
    return sample_directions(1, zeta, rng)[0]


def evaporation_distance(u, R: float, alpha: float):
    """``R * u**alpha``: alpha > 1 pulls samples toward the centroid, alpha < 1 toward R."""
    return R * np.asarray(u, dtype=float) ** alpha


def sample_distance(R: float, alpha: float, rng: np.random.Generator, size: Optional[int] = None):
    """Distance in ``(0, R]`` with ``U`` uniform on ``(0, 1]``."""
    if R <= 0 or alpha <= 0:
        raise ValueError("R and alpha must be positive")
    u = 1.0 - rng.random(size)
    r = evaporation_distance(u, R, alpha)
    return float(r) if size is None else r


def sample_offsets(count: int, zeta: int, R: float, alpha: float, rng: np.random.Generator) -> np.ndarray:
    """Raw offsets from a centroid, before clamping."""
    directions = sample_directions(count, zeta, rng)
    return directions * sample_distance(R, alpha, rng, size=count)[:, None]


def generate_cluster_params(centroid, s_k: int, config: CpaConfig, rng: np.random.Generator) -> np.ndarray:
    """``s_k`` candidates ``clamp(centroid + r * direction)`` around one centroid."""
    centroid = np.asarray(centroid, dtype=float)
    offsets = sample_offsets(s_k, config.zeta, config.R, config.alpha, rng)
    return clamp_to_bounds(centroid + offsets, config.param_space)


@dataclass
class Cycle:
    """Diagnostics for one guided-generation step."""

    generation: int
    k: int
    centroids: np.ndarray
    sizes: np.ndarray
    allocation: np.ndarray
    offsets: np.ndarray
    owner: np.ndarray


class CpaController:
    """Supplies per-member (F, CR) to DE and learns from the success mask.

    ``propose`` and ``observe`` are called once per generation by
    :func:`cpade.de.evolve`.  With ``record_history`` the controller keeps every
    clustering cycle and the per-generation archive sizes for inspection.
    """

    RANDOM, DEPLOY = "random", "deploy"

    def __init__(self, config: CpaConfig, record_history: bool = False):
        self.config = config
        self.archive = SuccessArchive(config.AS)
        self.pending = np.empty((0, config.zeta))
        self.record_history = record_history
        self.cycles: list[Cycle] = []
        # (generation, stage, |A| after, |NP| after)
        self.log: list[tuple] = []
        self._stage = None
        self._params = None

    def _guided_generation(self, generation: int, rng: np.random.Generator) -> None:
        cfg = self.config
        data = self.archive.as_array()
        distinct = np.unique(data, axis=0).shape[0]
        if cfg.k_range is not None and distinct >= 2:
            lo, hi = cfg.k_range
            k = choose_k(data, min(lo, distinct), min(hi, distinct), rng, max_iters=cfg.kmeans_max_iters)
        else:
            k = min(cfg.k, distinct)
        model = kmeans(data, k, rng, max_iters=cfg.kmeans_max_iters)
        allocation = allocate_cluster_counts(model.sizes, cfg.RP)
        owner = np.repeat(np.arange(k), allocation)
        offsets = sample_offsets(cfg.RP, cfg.zeta, cfg.R, cfg.alpha, rng)
        self.pending = clamp_to_bounds(model.centroids[owner] + offsets, cfg.param_space)
        self.archive.clear()
        if self.record_history:
            self.cycles.append(Cycle(generation, k, model.centroids, model.sizes, allocation, offsets, owner))

    def propose(self, pop, rng):
        n = pop.size
        if self.archive.full and len(self.pending) == 0:
            self._guided_generation(pop.generation, rng)
        if len(self.pending):
            params = self.pending[:n]
            self.pending = self.pending[n:]
            if params.shape[0] < n:
                params = np.vstack([params, random_param_generation(self.config, rng, n - params.shape[0])])
            self._stage = self.DEPLOY
        else:
            params = random_param_generation(self.config, rng, n)
            self._stage = self.RANDOM
        self._params = params
        return params[:, 0].copy(), params[:, 1].copy(), None

    def observe(self, old, new, success, F, CR):
        if self._stage == self.RANDOM:
            record_successes(self._params, success, self.archive)
        if self.record_history:
            self.log.append((new.generation, self._stage, len(self.archive), len(self.pending)))

    @property
    def stage(self) -> Optional[str]:
        return self._stage


def cpa_run(problem, config: CpaConfig, budget: EvalBudget, rng: np.random.Generator,
            controller: Optional[CpaController] = None, max_generations: Optional[int] = None,
            seed: Optional[int] = None) -> RunRecord:
    """Optimize ``problem`` with CPA-DE until the budget cannot cover another generation."""
    controller = CpaController(config) if controller is None else controller
    echo = {
        "algorithm": "CPA-DE",
        "k": config.k,
        "k_range": config.k_range,
        "R": config.R,
        "AS": config.AS,
        "RP": config.RP,
        "alpha": config.alpha,
        "N": config.population_size,
        "mutation": config.mutation.variant.value,
        "archive": config.mutation.archive,
        "crossover": config.crossover.value,
    }
    return evolve(problem, config.population_size, config.mutation, config.crossover, budget, rng,
                  controller, max_generations=max_generations, seed=seed, config=echo)
