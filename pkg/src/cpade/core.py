"""Shared primitives: boxes, populations, seeded streams and evaluation budgets.

Random streams are numpy ``Generator`` objects backed by PCG64.  Per-run
seeds are derived with ``numpy.random.SeedSequence`` from the master seed and
a tuple of integer keys, so a run's stream depends only on its own identity
and never on scheduling order.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence

import numpy as np

__all__ = [
    "BudgetExhausted",
    "EvalBudget",
    "Individual",
    "Population",
    "RunRecord",
    "SearchSpace",
    "clamp_to_bounds",
    "derive_seed",
    "evaluate",
    "make_rng",
    "stable_key",
    "uniform_sample_in_box",
]


class BudgetExhausted(Exception):
    """Raised when an evaluation is requested past the budget."""


@dataclass(frozen=True, eq=False)
class SearchSpace:
    """Axis-aligned box ``[lower_i, upper_i]``."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float).reshape(-1)
        upper = np.asarray(self.upper, dtype=float).reshape(-1)
        if lower.size == 0 or lower.shape != upper.shape:
            raise ValueError("lower and upper must have equal, nonzero length")
        if not np.all(lower < upper):
            raise ValueError("every lower bound must be below its upper bound")
        lower.flags.writeable = False
        upper.flags.writeable = False
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SearchSpace):
            return NotImplemented
        return np.array_equal(self.lower, other.lower) and np.array_equal(self.upper, other.upper)

    def __hash__(self) -> int:
        return hash((self.lower.tobytes(), self.upper.tobytes()))

    @classmethod
    def cube(cls, low: float, high: float, dimension: int) -> "SearchSpace":
        return cls(np.full(dimension, low), np.full(dimension, high))

    @property
    def dimension(self) -> int:
        return self.lower.size

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))


def uniform_sample_in_box(space: SearchSpace, rng: np.random.Generator, size: Optional[int] = None) -> np.ndarray:
    """Draw each coordinate independently from ``U(lower_i, upper_i)``.

    With ``size`` given, returns a ``(size, dimension)`` matrix of draws.
    """
    shape = (space.dimension,) if size is None else (size, space.dimension)
    x = space.lower + rng.random(shape) * space.width
    # lower + u * width can round up to exactly upper + ulp.
    return np.minimum(x, space.upper)


def clamp_to_bounds(x, space: SearchSpace) -> np.ndarray:
    """Set out-of-range coordinates to the nearest bound.

    Works on a single point or on a stack of points (last axis = dimension).
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != space.dimension:
        raise ValueError(f"expected dimension {space.dimension}, got {x.shape[-1]}")
    return np.clip(x, space.lower, space.upper)


@dataclass
class EvalBudget:
    """Counts objective evaluations against a hard cap (``max_evals``)."""

    max_evals: int
    used: int = 0

    def __post_init__(self):
        if self.max_evals <= 0:
            raise ValueError("max_evals must be positive")

    @property
    def remaining(self) -> int:
        return self.max_evals - self.used

    @property
    def exhausted(self) -> bool:
        return self.used >= self.max_evals

    def evaluate_batch(self, objective: Callable, X: np.ndarray) -> np.ndarray:
        """Evaluate every row of ``X`` or none of them.

        A batch that does not fit in the remaining budget raises
        :class:`BudgetExhausted` before anything is evaluated; the caller
        discards the partial generation.
        """
        X = np.atleast_2d(X)
        if X.shape[0] > self.remaining:
            raise BudgetExhausted(f"{X.shape[0]} evaluations requested, {self.remaining} left")
        values = np.asarray(objective(X), dtype=float).reshape(X.shape[0])
        self.used += X.shape[0]
        return np.where(np.isnan(values), np.inf, values)


def evaluate(objective: Callable, x, budget: EvalBudget) -> float:
    """Evaluate one point, charging one unit of ``budget``.

    NaN results are reported as ``+inf`` so selection stays total.
    """
    if budget.exhausted:
        raise BudgetExhausted("evaluation budget exhausted")
    return float(budget.evaluate_batch(objective, np.asarray(x, dtype=float)[None, :])[0])


@dataclass
class Individual:
    position: np.ndarray
    value: float = float("nan")

    @property
    def evaluated(self) -> bool:
        return not np.isnan(self.value)


@dataclass
class Population:
    """Positions as an ``(N, d)`` matrix with cached objective values."""

    positions: np.ndarray
    values: np.ndarray
    generation: int = 0

    def __post_init__(self):
        self.positions = np.atleast_2d(np.asarray(self.positions, dtype=float))
        self.values = np.asarray(self.values, dtype=float).reshape(-1)
        if self.values.shape[0] != self.positions.shape[0]:
            raise ValueError("one value per member is required")

    def __len__(self) -> int:
        return self.positions.shape[0]

    def __getitem__(self, i: int) -> Individual:
        return Individual(self.positions[i].copy(), float(self.values[i]))

    @property
    def size(self) -> int:
        return self.positions.shape[0]

    @property
    def dimension(self) -> int:
        return self.positions.shape[1]

    @property
    def best_index(self) -> int:
        return int(np.argmin(self.values))

    @property
    def best(self) -> Individual:
        return self[self.best_index]

    @classmethod
    def initialize(cls, space: SearchSpace, size: int, objective: Callable,
                   budget: EvalBudget, rng: np.random.Generator) -> "Population":
        X = uniform_sample_in_box(space, rng, size)
        return cls(X, budget.evaluate_batch(objective, X), generation=0)


@dataclass
class RunRecord:
    """Outcome of one optimizer run.

    ``trace[g]`` is the best value after generation ``g``; entry 0 is the
    initial population.  ``evals_used == (generations + 1) * N`` because the
    initial population is evaluated once before the first generation.
    """

    best_position: np.ndarray
    best_value: float
    best_error: float
    evals_used: int
    generations: int
    trace: list
    seed: Optional[int] = None
    config: dict = field(default_factory=dict)


def stable_key(text: str) -> int:
    """Platform-stable 32-bit key for a string (``hash()`` is salted per process)."""
    return zlib.crc32(text.encode("utf-8"))


def derive_seed(master_seed: int, *keys: int) -> int:
    """Mix a master seed with integer keys into a 64-bit run seed."""
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(k) for k in keys))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def make_rng(seed: Any) -> np.random.Generator:
    """A PCG64 stream; accepts an int seed or an existing Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def as_matrix(points: Sequence) -> np.ndarray:
    return np.atleast_2d(np.asarray(points, dtype=float))
