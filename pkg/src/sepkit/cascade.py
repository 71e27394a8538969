"""Second-stage hyperplanes fit on projections onto a node's boundary.

For a retained node, the correct-labeled points it picks up by mistake are
projected orthogonally onto the node's hyperplane together with the node's
own cluster, and a second hyperplane separates the two groups there. The
pair fires only when the node fires and the second stage agrees, so a pair
never picks up more correct points than its bare node.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import RngSpec
from .errors import ValidationError
from .nodes import CorrectorNode, _covariance, node_scores
from .preprocess import PreprocessModel, transform

METHOD_PERCEPTRON = "perceptron"
METHOD_FISHER = "fisher"
METHOD_VACUOUS = "vacuous"      # no mistaken pickups: second stage always passes

ALWAYS_PASS = float("-inf")


@dataclass(frozen=True)
class CascadePair:
    first: CorrectorNode
    w2: np.ndarray
    c2: float
    method: str


def complementary_set(node: CorrectorNode, correct_whitened) -> np.ndarray:
    """Correct-labeled whitened points the node fires on."""
    points = np.atleast_2d(np.asarray(correct_whitened, dtype=np.float64))
    scores = node_scores(points, node)
    return points[scores >= node.c]


def project_to_hyperplane(node: CorrectorNode, x) -> np.ndarray:
    """Orthogonal projection onto the node's boundary <w, x> = c."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    rows = x[None, :] if single else x
    proj = rows - np.outer(rows @ node.w, node.w) + node.c * node.w
    return proj[0] if single else proj


def _perceptron(points: np.ndarray, targets: np.ndarray, max_epochs: int, g: np.random.Generator):
    # Classic online updates with unit margin target and learning rate 1;
    # convergence means the required sign pattern, checked after each epoch.
    w = np.zeros(points.shape[1])
    c = 0.0
    for _ in range(max_epochs):
        for i in g.permutation(points.shape[0]):
            if targets[i] * (points[i] @ w - c) < 1.0:
                w = w + targets[i] * points[i]
                c = c - targets[i]
        scores = points @ w - c
        if np.all(scores[targets > 0] >= 0.0) and np.all(scores[targets < 0] < 0.0):
            return w, c, True
    return w, c, False


def fit_second_stage(projected_complement, projected_cluster, max_epochs: int = 1000,
                     rng: RngSpec = RngSpec(0)):
    """Separate mistaken pickups from the cluster on the projection plane.

    Tries the perceptron first (negative side: pickups, non-negative side:
    cluster). If it fails to separate within ``max_epochs``, falls back to a
    Fisher direction with the threshold at the cluster's minimum projection.
    An empty pickup set yields an always-pass stage.
    """
    clus = np.asarray(projected_cluster, dtype=np.float64)
    comp = np.asarray(projected_complement, dtype=np.float64)
    if clus.size == 0 and comp.size == 0:
        raise ValidationError("both projected sets are empty")
    if clus.size == 0:
        raise ValidationError("projected cluster must be non-empty")
    clus = np.atleast_2d(clus)
    comp = comp.reshape(-1, clus.shape[1]) if comp.size else np.empty((0, clus.shape[1]))
    if comp.shape[0] == 0:
        mean = clus.mean(axis=0)
        norm = np.linalg.norm(mean)
        w2 = mean / norm if norm > 1e-12 else np.zeros(clus.shape[1])
        return w2, ALWAYS_PASS, METHOD_VACUOUS
    points = np.vstack([comp, clus])
    targets = np.concatenate([-np.ones(comp.shape[0]), np.ones(clus.shape[0])])
    w2, c2, converged = _perceptron(points, targets, max_epochs, rng.generator())
    if converged:
        return w2, float(c2), METHOD_PERCEPTRON
    # Fisher fallback; a 1-row pickup set contributes a zero covariance.
    diff_dir = _fisher_fallback_direction(clus, comp)
    norm = np.linalg.norm(diff_dir)
    if norm == 0.0:
        raise ValidationError("degenerate second-stage direction")
    w2 = diff_dir / norm
    c2 = float((clus @ w2).min())
    return w2, c2, METHOD_FISHER


def _fisher_fallback_direction(cluster: np.ndarray, complement: np.ndarray) -> np.ndarray:
    pooled = _covariance(complement) + _covariance(cluster)
    pooled[np.diag_indices_from(pooled)] += 1e-8
    diff = cluster.mean(axis=0) - complement.mean(axis=0)
    return np.linalg.solve(pooled, diff)


def pair_second_scores(points: np.ndarray, pair: CascadePair) -> np.ndarray:
    """Raw second-stage projections for a whitened batch; passes where >= c2."""
    proj = project_to_hyperplane(pair.first, points)
    return proj @ pair.w2


def pair_fire(prep: PreprocessModel, pair: CascadePair, x) -> bool:
    """True iff the first node fires and the second stage agrees."""
    image = transform(prep, np.asarray(x, dtype=np.float64))
    if image @ pair.first.w < pair.first.c:
        return False
    return bool(project_to_hyperplane(pair.first, image) @ pair.w2 >= pair.c2)
