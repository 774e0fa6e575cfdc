"""Shifted analytic test functions f1-f11 (SOCO 2011 / CEC 2008 definitions).

Every function is written on ``z = x - shift`` and evaluates along the last
axis, so a single point or an ``(N, n)`` population can be passed.  All
global minima are 0 at ``z = 0``.  Cosine and exponential terms are arranged
as ``c * (1 - cos(.))`` so that the minimum evaluates to exactly 0.0 in
floating point and no in-box value is negative.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import SearchSpace, derive_seed, make_rng, stable_key

__all__ = ["BenchmarkProblem", "FUNCTIONS", "evaluate_benchmark", "make_problem", "problem_names"]


def sphere(z):
    # f1: sum_i z_i^2
    return np.sum(z * z, axis=-1)


def schwefel_2_21(z):
    # f2: max_i |z_i|
    return np.max(np.abs(z), axis=-1)


def rosenbrock(z):
    # f3: sum_{i<n} 100 (y_i^2 - y_{i+1})^2 + (y_i - 1)^2,  y = z + 1
    y = z + 1.0
    head, tail = y[..., :-1], y[..., 1:]
    return np.sum(100.0 * (head * head - tail) ** 2 + (head - 1.0) ** 2, axis=-1)


def rastrigin(z):
    # f4: 10 n + sum_i (z_i^2 - 10 cos(2 pi z_i))
    return np.sum(z * z + 10.0 * (1.0 - np.cos(2.0 * np.pi * z)), axis=-1)


def griewank(z):
    # f5: sum_i z_i^2 / 4000 - prod_i cos(z_i / sqrt(i)) + 1
    i = np.arange(1, z.shape[-1] + 1)
    return np.sum(z * z, axis=-1) / 4000.0 + (1.0 - np.prod(np.cos(z / np.sqrt(i)), axis=-1))


def ackley(z):
    # f6: -20 exp(-0.2 sqrt(mean z^2)) - exp(mean cos(2 pi z)) + 20 + e
    n = z.shape[-1]
    rms = np.sqrt(np.sum(z * z, axis=-1) / n)
    mean_cos = np.sum(np.cos(2.0 * np.pi * z), axis=-1) / n
    return 20.0 * (1.0 - np.exp(-0.2 * rms)) + (np.e - np.exp(mean_cos))


def schwefel_2_22(z):
    # f7: sum_i |z_i| + prod_i |z_i|
    a = np.abs(z)
    return np.sum(a, axis=-1) + np.prod(a, axis=-1)


def schwefel_1_2(z):
    # f8: sum_i (sum_{j<=i} z_j)^2
    return np.sum(np.cumsum(z, axis=-1) ** 2, axis=-1)


def _f10_pair(x, y):
    # f10(x, y) = (x^2 + y^2)^0.25 (sin^2(50 (x^2 + y^2)^0.1) + 1)
    s = x * x + y * y
    return s ** 0.25 * (np.sin(50.0 * s ** 0.1) ** 2 + 1.0)


def extended_f10(z):
    # f9: sum_{i<n} f10(z_i, z_{i+1}) + f10(z_n, z_1)
    return np.sum(_f10_pair(z, np.roll(z, -1, axis=-1)), axis=-1)


def bohachevsky(z):
    # f10: sum_{i<n} z_i^2 + 2 z_{i+1}^2 - 0.3 cos(3 pi z_i) - 0.4 cos(4 pi z_{i+1}) + 0.7
    head, tail = z[..., :-1], z[..., 1:]
    return np.sum(head * head + 2.0 * tail * tail
                  + 0.3 * (1.0 - np.cos(3.0 * np.pi * head))
                  + 0.4 * (1.0 - np.cos(4.0 * np.pi * tail)), axis=-1)


def schaffer(z):
    # f11: sum_{i<n} f10(z_i, z_{i+1})
    return np.sum(_f10_pair(z[..., :-1], z[..., 1:]), axis=-1)


# name -> (formula, half-width of the symmetric box, description)
FUNCTIONS: dict[str, tuple[Callable, float, str]] = {
    "f1": (sphere, 100.0, "Shifted Sphere"),
    "f2": (schwefel_2_21, 100.0, "Shifted Schwefel 2.21"),
    "f3": (rosenbrock, 100.0, "Shifted Rosenbrock"),
    "f4": (rastrigin, 5.0, "Shifted Rastrigin"),
    "f5": (griewank, 600.0, "Shifted Griewank"),
    "f6": (ackley, 32.0, "Shifted Ackley"),
    "f7": (schwefel_2_22, 10.0, "Shifted Schwefel 2.22"),
    "f8": (schwefel_1_2, 65.536, "Shifted Schwefel 1.2"),
    "f9": (extended_f10, 100.0, "Shifted Extended f10"),
    "f10": (bohachevsky, 15.0, "Shifted Bohachevsky"),
    "f11": (schaffer, 100.0, "Shifted Schaffer"),
}


def problem_names() -> list[str]:
    return list(FUNCTIONS)


@dataclass(frozen=True, eq=False)
class BenchmarkProblem:
    name: str
    dimension: int
    space: SearchSpace
    shift: np.ndarray
    optimum_value: float = 0.0

    @property
    def description(self) -> str:
        return FUNCTIONS[self.name][2]

    def __call__(self, x) -> np.ndarray | float:
        return evaluate_benchmark(self, x)


def evaluate_benchmark(problem: BenchmarkProblem, x):
    """Objective value at ``x`` (a point or a stack of points)."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != problem.dimension:
        raise ValueError(f"{problem.name} expects dimension {problem.dimension}, got {x.shape[-1]}")
    value = FUNCTIONS[problem.name][0](x - problem.shift)
    return float(value) if np.ndim(value) == 0 else value


def make_problem(name: str, dimension: int, shift_seed: int = 0, shift: Optional[np.ndarray] = None) -> BenchmarkProblem:
    """Build a problem with its canonical box and a seeded shift.

    The shift is uniform over the central 80% of the box unless given
    explicitly.
    """
    if name not in FUNCTIONS:
        raise KeyError(f"unknown problem {name!r}; choose from {', '.join(FUNCTIONS)}")
    if dimension < 2:
        raise ValueError("dimension must be at least 2")
    half = FUNCTIONS[name][1]
    space = SearchSpace.cube(-half, half, dimension)
    if shift is None:
        rng = make_rng(derive_seed(shift_seed, stable_key(name), dimension))
        shift = -0.8 * half + 1.6 * half * rng.random(dimension)
    shift = np.asarray(shift, dtype=float).reshape(-1)
    if shift.size != dimension:
        raise ValueError("shift length must equal the dimension")
    if np.any(shift <= space.lower) or np.any(shift >= space.upper):
        raise ValueError("shift must lie strictly inside the box")
    shift.flags.writeable = False
    return BenchmarkProblem(name, dimension, space, shift)
