"""Fisher-discriminant threshold nodes built per error cluster.

Each node is a unit direction ``w`` and a threshold ``c`` in whitened
coordinates: it fires on x when ``<w, x> - c >= 0``. The direction is the
pooled-covariance-inverse times the mean difference between the cluster and
its complement; the threshold is the smallest projection of the cluster's
own members, so every member fires by construction. Candidates whose
threshold does not exceed the filtering level are dropped.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cluster import Clustering
from .errors import NumericalError, ValidationError
from .preprocess import PreprocessModel, transform

RIDGE = 1e-8


@dataclass(frozen=True)
class CorrectorNode:
    w: np.ndarray               # (m,), unit norm
    c: float
    cluster_id: int


def _covariance(rows: np.ndarray) -> np.ndarray:
    # Zero matrix for a single row: the sample covariance is undefined and
    # the Fisher direction then reduces to the whitened mean difference.
    if rows.shape[0] < 2:
        return np.zeros((rows.shape[1], rows.shape[1]))
    centered = rows - rows.mean(axis=0)
    return centered.T @ centered / (rows.shape[0] - 1)


def _fisher_direction(cluster, complement, ridge: float = RIDGE) -> np.ndarray:
    pooled = _covariance(complement) + _covariance(cluster)
    pooled[np.diag_indices_from(pooled)] += ridge
    diff = cluster.mean(axis=0) - complement.mean(axis=0)
    try:
        return np.linalg.solve(pooled, diff)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"singular pooled covariance: {exc}") from None


def fisher_weights(cluster, complement, ridge: float = RIDGE) -> np.ndarray:
    """Unnormalized Fisher direction (pooled covariance)^-1 (mean difference)."""
    cluster = np.atleast_2d(np.asarray(cluster, dtype=np.float64))
    complement = np.atleast_2d(np.asarray(complement, dtype=np.float64))
    if complement.shape[0] < 2:
        raise ValidationError("complement must have at least 2 rows")
    if cluster.shape[0] < 1:
        raise ValidationError("cluster must be non-empty")
    return _fisher_direction(cluster, complement, ridge)


def node_threshold(w, cluster) -> float:
    """Minimum projection of the cluster's members on the unit direction."""
    w = np.asarray(w, dtype=np.float64)
    cluster = np.atleast_2d(np.asarray(cluster, dtype=np.float64))
    norm = np.linalg.norm(w)
    if norm == 0.0:
        raise ValidationError("direction must be nonzero")
    if cluster.shape[0] < 1:
        raise ValidationError("cluster must be non-empty")
    return float((cluster @ (w / norm)).min())


def node_scores(points: np.ndarray, node: CorrectorNode) -> np.ndarray:
    """Raw projections <w, x> for a whitened batch; fires where >= c."""
    return points @ node.w


def build_nodes(whitened: np.ndarray, error_rows: np.ndarray, clustering: Clustering, theta: float):
    """One candidate node per non-empty cluster, retained iff c > theta.

    ``whitened`` is the whole transformed training set (sphere-projected when
    that step is enabled) and ``error_rows`` indexes its error-labeled rows,
    which ``clustering`` partitions. Returns (nodes, rejected) where rejected
    lists (cluster_id, c) for the dropped candidates.

    The complement covariance is derived from whole-set sufficient statistics
    rather than re-scanned per cluster; the result matches
    :func:`fisher_weights` on the explicit matrices.
    """
    whitened = np.asarray(whitened, dtype=np.float64)
    error_rows = np.asarray(error_rows, dtype=np.intp)
    n_total = whitened.shape[0]
    total_sum = whitened.sum(axis=0)
    total_sq = whitened.T @ whitened
    nodes, rejected = [], []
    for j in range(clustering.p):
        members = error_rows[clustering.assignments == j]
        if members.size == 0:
            continue
        cluster = whitened[members]
        n_comp = n_total - members.size
        if n_comp < 2:
            raise ValidationError("complement must have at least 2 rows")
        comp_sum = total_sum - cluster.sum(axis=0)
        comp_mean = comp_sum / n_comp
        comp_sq = total_sq - cluster.T @ cluster
        comp_cov = (comp_sq - np.outer(comp_mean, comp_sum)) / (n_comp - 1)
        pooled = comp_cov + _covariance(cluster)
        pooled[np.diag_indices_from(pooled)] += RIDGE
        try:
            w = np.linalg.solve(pooled, cluster.mean(axis=0) - comp_mean)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"singular pooled covariance: {exc}") from None
        norm = np.linalg.norm(w)
        if norm == 0.0:
            raise NumericalError(f"cluster {j}: degenerate Fisher direction")
        w = w / norm
        # Threshold from the full-batch projection so that later full-batch
        # evaluation reproduces the boundary member's score bit for bit.
        scores = whitened @ w
        c = float(scores[members].min())
        if c > theta:
            nodes.append(CorrectorNode(w, c, j))
        else:
            rejected.append((j, c))
    return nodes, rejected


def node_fire(prep: PreprocessModel, node: CorrectorNode, x) -> bool:
    """Evaluate the node on a raw n-vector; ties at the threshold fire."""
    image = transform(prep, np.asarray(x, dtype=np.float64))
    return bool(image @ node.w >= node.c)
