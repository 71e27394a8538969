import numpy as np
import pytest

from sepkit.data import LabeledDataset, RngSpec, sample_product_cube
from sepkit.errors import NumericalError, ValidationError
from sepkit.preprocess import (
    center,
    fit_preprocess,
    kaiser_guttman_select,
    transform,
)


def dataset(features):
    features = np.asarray(features, dtype=float)
    return LabeledDataset(features, np.zeros(len(features), dtype=int))


# Four points (+-a, +-b) have exact sample covariance diag(4a^2/3, 4b^2/3);
# a = sqrt(3), b = sqrt(3)/2 gives diag(4, 1).
DIAG41 = np.array(
    [
        [np.sqrt(3), np.sqrt(3) / 2],
        [np.sqrt(3), -np.sqrt(3) / 2],
        [-np.sqrt(3), np.sqrt(3) / 2],
        [-np.sqrt(3), -np.sqrt(3) / 2],
    ]
)


class TestCenter:
    def test_arithmetic_oracle(self):
        centered, mean = center(dataset([[0, 0], [2, 0], [1, 3]]))
        assert np.allclose(mean, [1, 1], atol=1e-12)
        assert np.allclose(centered, [[-1, -1], [1, -1], [0, 2]], atol=1e-12)

    def test_zero_mean_fixed_point(self):
        data = np.array([[1.0, -2.0], [-1.0, 2.0]])
        centered, mean = center(data)
        assert np.allclose(mean, 0, atol=1e-12)
        assert np.allclose(centered, data, atol=1e-12)

    def test_repeated_row(self):
        centered, _ = center(np.tile([3.0, -7.0, 2.0], (5, 1)))
        assert np.allclose(centered, 0, atol=1e-12)

    def test_empty(self):
        with pytest.raises(ValidationError):
            center(np.empty((0, 3)))


class TestKaiserGuttman:
    def test_oracle(self):
        assert kaiser_guttman_select([3, 1.5, 0.4, 0.1]).tolist() == [0, 1]

    def test_all_equal_fallback(self):
        assert kaiser_guttman_select([2.0, 2.0, 2.0]).tolist() == [0]

    def test_negative_eigenvalue(self):
        with pytest.raises(NumericalError):
            kaiser_guttman_select([1.0, -1e-6])

    def test_tiny_negative_tolerated(self):
        assert kaiser_guttman_select([1.0, -1e-12]).tolist() == [0]

    def test_not_descending(self):
        with pytest.raises(ValidationError):
            kaiser_guttman_select([1.0, 2.0])


class TestFit:
    def test_diag_4_1(self):
        model = fit_preprocess(dataset(DIAG41))
        assert model.m == 1
        assert np.allclose(np.abs(model.basis[:, 0]), [1, 0], atol=1e-10)
        assert np.allclose(model.whitener, [[0.5]], atol=1e-10)

    def test_condition_rule_keeps_both(self):
        model = fit_preprocess(dataset(DIAG41), max_condition=10.0)
        assert model.m == 2
        model = fit_preprocess(dataset(DIAG41), max_condition=2.0)
        assert model.m == 1

    def test_isotropic_whitener_near_identity(self):
        feats = RngSpec(2).generator().standard_normal(size=(20_000, 4))
        model = fit_preprocess(dataset(feats))
        assert np.allclose(model.whitener, np.eye(model.m), atol=0.05)

    def test_transformed_covariance_is_identity(self):
        feats = RngSpec(3).generator().standard_normal(size=(500, 6)) @ np.diag([5, 4, 3, 2, 1, 0.5])
        model = fit_preprocess(feats)
        image = transform(model, feats)
        cov = np.cov(image, rowvar=False)
        assert np.abs(cov - np.eye(model.m)).max() < 1e-6

    def test_basis_orthonormal(self):
        feats = RngSpec(4).generator().standard_normal(size=(300, 8))
        model = fit_preprocess(feats)
        gram = model.basis.T @ model.basis
        assert np.abs(gram - np.eye(model.m)).max() < 1e-8

    def test_whitener_symmetric_positive(self):
        feats = RngSpec(5).generator().standard_normal(size=(300, 5)) * [3, 2, 1, 1, 1]
        model = fit_preprocess(feats)
        assert np.abs(model.whitener - model.whitener.T).max() < 1e-8
        assert np.linalg.eigvalsh(model.whitener).min() > 0

    def test_refit_on_whitened_is_identity(self):
        g = RngSpec(6).generator()
        feats = g.standard_normal(size=(10_000, 10)) @ g.standard_normal(size=(10, 10))
        first = fit_preprocess(feats)
        image = transform(first, feats)
        second = fit_preprocess(image)
        assert np.abs(second.whitener - np.eye(second.m)).max() < 1e-4

    def test_eig_floor(self):
        feats = 1e-9 * RngSpec(7).generator().standard_normal(size=(50, 3))
        with pytest.raises(NumericalError, match="floor"):
            fit_preprocess(feats)

    def test_needs_two_rows(self):
        with pytest.raises(ValidationError):
            fit_preprocess(np.ones((1, 3)))


class TestTransform:
    def test_mean_maps_to_zero(self):
        model = fit_preprocess(dataset(DIAG41))
        assert np.allclose(transform(model, model.mean), 0, atol=1e-12)

    def test_projection_unit_norm(self):
        feats = RngSpec(8).generator().standard_normal(size=(200, 5))
        model = fit_preprocess(feats, project_to_sphere=True)
        image = transform(model, feats)
        assert np.allclose(np.linalg.norm(image, axis=1), 1.0, atol=1e-12)

    def test_identity_composition(self):
        from sepkit.preprocess import PreprocessModel

        model = PreprocessModel(np.zeros(3), np.eye(3), np.eye(3), False)
        x = np.array([1.0, -2.0, 0.5])
        assert np.array_equal(transform(model, x), x)

    def test_projection_zero_vector_errors(self):
        feats = RngSpec(9).generator().standard_normal(size=(50, 3))
        model = fit_preprocess(feats, project_to_sphere=True)
        with pytest.raises(NumericalError, match="zero vector"):
            transform(model, model.mean)

    def test_projection_preserves_ray(self):
        feats = RngSpec(10).generator().standard_normal(size=(50, 4))
        plain = fit_preprocess(feats, project_to_sphere=False)
        sphere = fit_preprocess(feats, project_to_sphere=True)
        x = feats[7]
        raw = transform(plain, x)
        unit = transform(sphere, x)
        scale = np.linalg.norm(raw)
        assert scale > 0
        assert np.allclose(unit * scale, raw, atol=1e-10)

    def test_dimension_check(self):
        model = fit_preprocess(dataset(DIAG41))
        with pytest.raises(ValidationError):
            transform(model, np.ones(5))
