"""K-means (Lloyd iterations) with silhouette scoring and silhouette-based choice of K."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["ClusterModel", "choose_k", "kmeans", "silhouette_score", "wcss"]


@dataclass
class ClusterModel:
    centroids: np.ndarray
    assignments: np.ndarray
    sizes: np.ndarray
    # WCSS after every (assignment, update) pair, first entry after initialization
    history: list = field(default_factory=list)
    iterations: int = 0

    @property
    def k(self) -> int:
        return self.centroids.shape[0]


def _sq_distances(data: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    diff = data[:, None, :] - centroids[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def wcss(data, centroids, assignments) -> float:
    """Within-cluster sum of squared distances."""
    data = np.asarray(data, dtype=float)
    diff = data - np.asarray(centroids)[assignments]
    return float(np.sum(diff * diff))


def _repair_empty(data, centroids, labels, k):
    """Give each empty cluster the point farthest from its current centroid."""
    sizes = np.bincount(labels, minlength=k)
    for empty in np.flatnonzero(sizes == 0):
        dist = np.sum((data - centroids[labels]) ** 2, axis=1)
        # only donors that keep at least one member
        dist[sizes[labels] < 2] = -1.0
        j = int(np.argmax(dist))
        sizes[labels[j]] -= 1
        labels[j] = empty
        sizes[empty] = 1
        centroids[empty] = data[j]
    return labels


def kmeans(data, k: int, rng: np.random.Generator, max_iters: int = 100, tol: float = 1e-9) -> ClusterModel:
    """Partition ``data`` into ``k`` clusters.

    Centroids start at ``k`` distinct data points drawn uniformly.  Iterates
    assignment and mean update until no centroid moves by ``tol`` or more and
    a final assignment pass changes nothing, or until ``max_iters``.
    """
    data = np.atleast_2d(np.asarray(data, dtype=float))
    n = data.shape[0]
    if k < 1:
        raise ValueError("k must be positive")
    if n < k:
        raise ValueError(f"cannot form {k} clusters from {n} points")
    unique_rows = np.unique(data, axis=0)
    if unique_rows.shape[0] >= k:
        # np.unique sorts rows, so the draw does not depend on input order
        centroids = unique_rows[rng.choice(unique_rows.shape[0], size=k, replace=False)].copy()
    else:
        centroids = data[rng.choice(n, size=k, replace=False)].copy()

    labels = np.argmin(_sq_distances(data, centroids), axis=1)
    labels = _repair_empty(data, centroids, labels, k)
    history = [wcss(data, centroids, labels)]
    it = 0
    while it < max_iters:
        it += 1
        new_centroids = np.zeros_like(centroids)
        np.add.at(new_centroids, labels, data)
        sizes = np.bincount(labels, minlength=k)
        new_centroids /= sizes[:, None]
        shift = float(np.max(np.linalg.norm(new_centroids - centroids, axis=1)))
        centroids = new_centroids
        d2 = _sq_distances(data, centroids)
        new_labels = np.argmin(d2, axis=1)
        # keep the current label on exact distance ties
        keep = d2[np.arange(n), labels] <= d2[np.arange(n), new_labels]
        new_labels = np.where(keep, labels, new_labels)
        new_labels = _repair_empty(data, centroids, new_labels, k)
        history.append(wcss(data, centroids, new_labels))
        changed = bool(np.any(new_labels != labels))
        labels = new_labels
        if shift < tol and not changed:
            break
    sizes = np.bincount(labels, minlength=k)
    return ClusterModel(centroids, labels, sizes, history, it)


def silhouette_score(data, assignments) -> float:
    """Mean silhouette over all points; singleton clusters score 0."""
    data = np.atleast_2d(np.asarray(data, dtype=float))
    labels = np.asarray(assignments)
    clusters = np.unique(labels)
    if clusters.size < 2:
        raise ValueError("silhouette needs at least two clusters")
    diff = data[:, None, :] - data[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    onehot = labels[:, None] == clusters[None, :]
    counts = onehot.sum(axis=0)
    sums = dist @ onehot
    own = np.searchsorted(clusters, labels)
    n = data.shape[0]
    own_count = counts[own]
    # a: mean distance to the other members of the own cluster
    a = np.where(own_count > 1, sums[np.arange(n), own] / np.maximum(own_count - 1, 1), 0.0)
    mean_other = sums / counts[None, :]
    mean_other[np.arange(n), own] = np.inf
    b = mean_other.min(axis=1)
    denom = np.maximum(a, b)
    s = np.where(denom > 0, (b - a) / np.where(denom > 0, denom, 1.0), 0.0)
    s[own_count == 1] = 0.0
    return float(np.mean(s))


def choose_k(data, k_lower: int, k_upper: int, rng: np.random.Generator, max_iters: int = 100) -> int:
    """K in ``[k_lower, k_upper]`` with the highest silhouette; ties go to the smaller K."""
    data = np.atleast_2d(np.asarray(data, dtype=float))
    if not 2 <= k_lower <= k_upper <= data.shape[0]:
        raise ValueError(f"infeasible K range [{k_lower}, {k_upper}] for {data.shape[0]} points")
    if k_lower == k_upper:
        return k_lower
    best_k, best_score = k_lower, -np.inf
    for k in range(k_lower, k_upper + 1):
        model = kmeans(data, k, rng, max_iters=max_iters)
        score = silhouette_score(data, model.assignments)
        if score > best_score:
            best_k, best_score = k, score
    return best_k
