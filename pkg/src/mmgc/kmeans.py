"""Deterministic Lloyd k-means with plus-plus seeding and restarts.

Squared Euclidean metric on unnormalized rows.  Every run is fully
reproducible from its seed; restarts derive child seeds from one root
sequence and the best inertia wins (earliest restart on ties).  Empty
clusters are refilled with the point currently farthest from its
assigned centroid, so no cluster is ever left without members.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class Clustering:
    assignments: np.ndarray
    centroids: np.ndarray
    inertia: float
    iterations: int
    # inertia after the assignment step of each Lloyd iteration; never increases
    inertia_history: list[float] = field(default_factory=list)

    @property
    def k(self) -> int:
        return int(self.centroids.shape[0])


def _squared_distances(x: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    x2 = np.einsum("ij,ij->i", x, x)[:, None]
    c2 = np.einsum("ij,ij->i", centroids, centroids)[None, :]
    d2 = x2 - 2.0 * (x @ centroids.T) + c2
    np.clip(d2, 0.0, None, out=d2)
    return d2


def _plus_plus_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    centroids = np.empty((k, x.shape[1]), dtype=np.float64)
    first = int(rng.integers(n))
    centroids[0] = x[first]
    d2 = np.einsum("ij,ij->i", x - centroids[0], x - centroids[0])
    for j in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            idx = int(rng.integers(n))  # all remaining mass on duplicates
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centroids[j] = x[idx]
        cand = np.einsum("ij,ij->i", x - centroids[j], x - centroids[j])
        np.minimum(d2, cand, out=d2)
    return centroids


def _lloyd(x: np.ndarray, centroids: np.ndarray, max_iters: int):
    n, k = x.shape[0], centroids.shape[0]
    centroids = centroids.copy()
    assignments = np.full(n, -1, dtype=np.int64)
    history: list[float] = []
    iterations = 0
    for _ in range(max_iters):
        iterations += 1
        d2 = _squared_distances(x, centroids)
        new_assign = d2.argmin(axis=1)
        point_d2 = d2[np.arange(n), new_assign]
        counts = np.bincount(new_assign, minlength=k)
        for j in np.flatnonzero(counts == 0):
            far = int(point_d2.argmax())
            centroids[j] = x[far]
            new_assign[far] = j
            point_d2[far] = -np.inf  # a stolen point cannot be stolen twice
        point_d2 = np.maximum(point_d2, 0.0)
        history.append(float(point_d2.sum()))
        if np.array_equal(new_assign, assignments):
            break
        assignments = new_assign
        for j in range(k):
            members = assignments == j
            centroids[j] = x[members].mean(axis=0)
    return assignments, centroids, history[-1], iterations, history


def kmeans_fit(
    x: np.ndarray,
    k: int,
    seed: int = 0,
    n_init: int = 10,
    max_iters: int = 300,
    init_centroids: np.ndarray | None = None,
) -> Clustering:
    """Cluster rows of ``x`` into ``k`` groups.

    ``init_centroids`` bypasses seeding and restarts and runs a single
    Lloyd pass from the given centers (used by equivariance tests).
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("kmeans_fit expects a non-empty 2-d array")
    if not np.isfinite(x).all():
        raise ValueError("kmeans_fit input contains non-finite values")
    n = x.shape[0]
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > n:
        raise ValueError(f"k = {k} exceeds the number of rows ({n})")

    if init_centroids is not None:
        init = np.asarray(init_centroids, dtype=np.float64)
        if init.shape != (k, x.shape[1]):
            raise ValueError("init_centroids must have shape (k, d)")
        assign, cents, inertia, iters, history = _lloyd(x, init, max_iters)
        return Clustering(assign, cents, inertia, iters, history)

    best: Clustering | None = None
    for child in np.random.SeedSequence(seed).spawn(max(1, n_init)):
        rng = np.random.default_rng(child)
        init = _plus_plus_init(x, k, rng)
        assign, cents, inertia, iters, history = _lloyd(x, init, max_iters)
        if best is None or inertia < best.inertia:
            best = Clustering(assign, cents, inertia, iters, history)
    return best
