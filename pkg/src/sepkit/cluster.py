"""k-means over the whitened error set, with k-means++ seeding and a
report of how positively correlated each cluster's members are.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import RngSpec
from .errors import ValidationError


@dataclass(frozen=True)
class Clustering:
    assignments: np.ndarray     # (N,) cluster index in [0, p)
    centroids: np.ndarray       # (p, m)
    p: int

    def members(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == j)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignments, minlength=self.p)


def _kmeanspp_init(points: np.ndarray, p: int, g: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    chosen = np.empty(p, dtype=np.intp)
    chosen[0] = g.integers(n)
    d2 = np.sum((points - points[chosen[0]]) ** 2, axis=1)
    for j in range(1, p):
        total = d2.sum()
        if total <= 0.0:
            # All remaining mass at already-chosen points (duplicates):
            # fall back to a uniform pick among unchosen indices.
            free = np.setdiff1d(np.arange(n), chosen[:j])
            chosen[j] = free[g.integers(free.size)]
        else:
            chosen[j] = g.choice(n, p=d2 / total)
        d2 = np.minimum(d2, np.sum((points - points[chosen[j]]) ** 2, axis=1))
    return points[chosen].copy()


def _assign(points: np.ndarray, centroids: np.ndarray):
    d2 = (
        np.sum(points**2, axis=1)[:, None]
        - 2.0 * points @ centroids.T
        + np.sum(centroids**2, axis=1)[None, :]
    )
    return np.argmin(d2, axis=1), d2


def _lloyd(points: np.ndarray, centroids: np.ndarray, max_iters: int):
    p = centroids.shape[0]
    assignments = None
    for _ in range(max_iters):
        new_assign, d2 = _assign(points, centroids)
        # Re-seed empty clusters at the point currently farthest from its
        # own centroid, stealing it from its cluster.
        counts = np.bincount(new_assign, minlength=p)
        for j in np.flatnonzero(counts == 0):
            dist_own = d2[np.arange(points.shape[0]), new_assign]
            worst = int(np.argmax(dist_own))
            new_assign[worst] = j
            counts = np.bincount(new_assign, minlength=p)
        if assignments is not None and np.array_equal(new_assign, assignments):
            break
        assignments = new_assign
        for j in range(p):
            mask = assignments == j
            if mask.any():
                centroids[j] = points[mask].mean(axis=0)
    _, d2 = _assign(points, centroids)
    wcss = float(d2[np.arange(points.shape[0]), assignments].sum())
    return assignments, centroids, wcss


def kmeans(
    points,
    p: int,
    restarts: int = 10,
    rng: RngSpec = RngSpec(0),
    max_iters: int = 300,
) -> Clustering:
    """Best-of-``restarts`` Lloyd iterations with k-means++ seeding.

    Deterministic given ``rng``: restart r draws from substream r, and the
    restart with the lowest within-cluster sum of squares wins (ties go to
    the lowest restart index).
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] == 0:
        raise ValidationError("points must be a non-empty 2-D matrix")
    if p < 1 or p > points.shape[0]:
        raise ValidationError(f"cluster count {p} must be in [1, {points.shape[0]}]")
    if restarts < 1 or max_iters < 1:
        raise ValidationError("restarts and max_iters must be >= 1")
    best = None
    for r in range(restarts):
        g = rng.child(r).generator()
        init = _kmeanspp_init(points, p, g)
        assignments, centroids, wcss = _lloyd(points, init, max_iters)
        if best is None or wcss < best[0]:
            best = (wcss, assignments, centroids)
    _, assignments, centroids = best
    return Clustering(assignments, centroids, p)


def positive_correlation_report(clustering: Clustering, points) -> np.ndarray:
    """Per-cluster minimum pairwise cosine between members.

    Singletons report +1 by convention; empty clusters report NaN.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.shape[0] != clustering.assignments.shape[0]:
        raise ValidationError("points must align with clustering assignments")
    norms = np.linalg.norm(points, axis=1)
    unit = points / np.where(norms > 0, norms, 1.0)[:, None]
    out = np.full(clustering.p, np.nan)
    for j in range(clustering.p):
        members = unit[clustering.assignments == j]
        if members.shape[0] == 1:
            out[j] = 1.0
        elif members.shape[0] > 1:
            gram = members @ members.T
            out[j] = float(gram[np.triu_indices(members.shape[0], k=1)].min())
    return out
