import numpy as np
import pytest

from sepkit.cluster import Clustering, _kmeanspp_init, _lloyd, kmeans, positive_correlation_report
from sepkit.data import RngSpec
from sepkit.errors import ValidationError


def wcss(points, clustering):
    total = 0.0
    for j in range(clustering.p):
        members = points[clustering.assignments == j]
        if len(members):
            total += ((members - clustering.centroids[j]) ** 2).sum()
    return total


def two_blobs(seed=0, radius=1.0, per_blob=30):
    g = RngSpec(seed).generator()
    left = np.array([-10.0, 0.0]) + radius * g.uniform(-1, 1, size=(per_blob, 2))
    right = np.array([10.0, 0.0]) + radius * g.uniform(-1, 1, size=(per_blob, 2))
    return np.vstack([left, right]), np.r_[np.zeros(per_blob, int), np.ones(per_blob, int)]


class TestKmeans:
    def test_singletons_when_p_equals_count(self):
        points = RngSpec(1).generator().standard_normal(size=(12, 3))
        clustering = kmeans(points, p=12, rng=RngSpec(2))
        assert sorted(clustering.assignments.tolist()) == sorted(range(12))
        assert wcss(points, clustering) == 0.0

    def test_two_blobs_match_brute_force(self):
        points, blobs = two_blobs()
        clustering = kmeans(points, p=2, rng=RngSpec(3))
        # Brute force over both labelings of the two known groups.
        found = clustering.assignments
        same = (found == blobs).all() or (found == 1 - blobs).all()
        assert same
        best = min(
            wcss(points, Clustering(lab, np.array([points[lab == 0].mean(0), points[lab == 1].mean(0)]), 2))
            for lab in (blobs, 1 - blobs)
        )
        assert wcss(points, clustering) == pytest.approx(best, rel=1e-9)

    def test_single_cluster_is_global_mean(self):
        points = RngSpec(4).generator().standard_normal(size=(40, 5))
        clustering = kmeans(points, p=1, rng=RngSpec(5))
        assert np.allclose(clustering.centroids[0], points.mean(axis=0), atol=1e-10)

    def test_centroid_equals_member_mean(self):
        points = RngSpec(6).generator().standard_normal(size=(50, 3))
        clustering = kmeans(points, p=4, rng=RngSpec(7))
        for j in range(4):
            members = points[clustering.assignments == j]
            if len(members):
                assert np.allclose(clustering.centroids[j], members.mean(axis=0), atol=1e-10)

    def test_determinism(self):
        points = RngSpec(8).generator().standard_normal(size=(60, 4))
        a = kmeans(points, p=5, rng=RngSpec(9))
        b = kmeans(points, p=5, rng=RngSpec(9))
        assert np.array_equal(a.assignments, b.assignments)
        assert np.array_equal(a.centroids, b.centroids)

    def test_wcss_non_increasing_over_iterations(self):
        points, _ = two_blobs(seed=10, radius=6.0)
        init = _kmeanspp_init(points, 4, RngSpec(11).generator())
        values = []
        for iters in range(1, 6):
            _, _, value = _lloyd(points, init.copy(), iters)
            values.append(value)
        assert all(b <= a + 1e-9 for a, b in zip(values, values[1:]))

    def test_duplicate_points_tolerated(self):
        points = np.tile([[1.0, 2.0]], (6, 1))
        clustering = kmeans(points, p=3, rng=RngSpec(12))
        assert clustering.p == 3

    def test_validation(self):
        points = np.zeros((3, 2))
        with pytest.raises(ValidationError):
            kmeans(points, p=4, rng=RngSpec(0))
        with pytest.raises(ValidationError):
            kmeans(points, p=0, rng=RngSpec(0))
        with pytest.raises(ValidationError):
            kmeans(np.zeros((0, 2)), p=1, rng=RngSpec(0))


class TestCorrelationReport:
    def test_singleton_is_one(self):
        clustering = Clustering(np.array([0]), np.zeros((1, 2)), 1)
        report = positive_correlation_report(clustering, np.array([[3.0, 4.0]]))
        assert report[0] == 1.0

    def test_orthonormal_pair_is_zero(self):
        clustering = Clustering(np.array([0, 0]), np.zeros((1, 2)), 1)
        report = positive_correlation_report(clustering, np.eye(2))
        assert report[0] == pytest.approx(0.0, abs=1e-12)

    def test_derived_inner_product(self):
        points = np.array([[1.0, 0.0], [1.0 / np.sqrt(2), 1.0 / np.sqrt(2)]])
        clustering = Clustering(np.array([0, 0]), np.zeros((1, 2)), 1)
        report = positive_correlation_report(clustering, points)
        assert report[0] == pytest.approx(np.sqrt(2) / 2, abs=1e-12)

    def test_empty_cluster_is_nan(self):
        clustering = Clustering(np.array([0, 0]), np.zeros((2, 2)), 2)
        report = positive_correlation_report(clustering, np.eye(2))
        assert np.isnan(report[1])
