"""Error metric, summaries and win/loss/draw comparisons between solvers."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import norm, rankdata

__all__ = [
    "ComparisonCell",
    "compare_means",
    "objective_error",
    "summarize",
    "tally",
    "wilcoxon_ranksum",
]

WIN, LOSS, DRAW = "+", "-", "="


@dataclass(frozen=True)
class ComparisonCell:
    """Outcome for the first sample against the second (lower error wins)."""

    outcome: str
    p_value: float
    medians: tuple

    def __post_init__(self):
        if self.outcome not in (WIN, LOSS, DRAW):
            raise ValueError(f"bad outcome {self.outcome!r}")


def objective_error(found_value: float, optimum_value: float) -> float:
    """Gap between the value reached and the known optimum."""
    return found_value - optimum_value


def summarize(errors: Sequence[float]) -> tuple[float, float]:
    """Mean and sample standard deviation (n - 1); a single value has std 0."""
    x = np.asarray(errors, dtype=float)
    if x.size == 0:
        raise ValueError("no errors to summarize")
    if x.size == 1:
        return float(x[0]), 0.0
    return float(np.mean(x)), float(np.std(x, ddof=1))


def ranksum_pvalue(a: Sequence[float], b: Sequence[float]) -> tuple[float, float]:
    """Two-sided rank-sum p-value and the rank sum of ``a``.

    Normal approximation with midranks, tie-corrected variance and a 0.5
    continuity correction.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n1, n2 = a.size, b.size
    n = n1 + n2
    ranks = rankdata(np.concatenate([a, b]))
    w = float(ranks[:n1].sum())
    expected = n1 * (n + 1) / 2.0
    _, counts = np.unique(ranks, return_counts=True)
    tie_term = float(np.sum(counts ** 3 - counts)) / (n * (n - 1))
    variance = n1 * n2 / 12.0 * ((n + 1) - tie_term)
    if variance <= 0:
        return 1.0, w
    z = max(abs(w - expected) - 0.5, 0.0) / math.sqrt(variance)
    return float(min(1.0, 2.0 * norm.sf(z))), w


def wilcoxon_ranksum(a: Sequence[float], b: Sequence[float], alpha: float = 0.05) -> ComparisonCell:
    """Rank-sum comparison of two error samples.

    A draw when ``p >= alpha``; otherwise the sample with the smaller median
    error wins (mean rank decides if the medians coincide).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size < 2 or b.size < 2:
        raise ValueError("each sample needs at least two values")
    p, w = ranksum_pvalue(a, b)
    medians = (float(np.median(a)), float(np.median(b)))
    if p >= alpha:
        return ComparisonCell(DRAW, p, medians)
    if medians[0] != medians[1]:
        better = medians[0] < medians[1]
    else:
        better = w < a.size * (a.size + b.size + 1) / 2.0
    return ComparisonCell(WIN if better else LOSS, p, medians)


def compare_means(mean_a: float, mean_b: float, rel_tol: float = 1e-2) -> str:
    """Outcome from average errors alone; within ``rel_tol`` of each other is a draw."""
    if abs(mean_a - mean_b) <= rel_tol * max(abs(mean_a), abs(mean_b)):
        return DRAW
    return WIN if mean_a < mean_b else LOSS


def tally(results: Iterable) -> tuple[int, int, int]:
    """(wins, losses, draws) over cells or outcome symbols."""
    counts = {WIN: 0, LOSS: 0, DRAW: 0}
    n = 0
    for cell in results:
        outcome = cell.outcome if isinstance(cell, ComparisonCell) else cell
        counts[outcome] += 1
        n += 1
    if n == 0:
        raise ValueError("nothing to tally")
    return counts[WIN], counts[LOSS], counts[DRAW]
