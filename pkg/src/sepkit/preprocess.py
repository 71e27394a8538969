"""Centering, eigenvalue-based dimension reduction, whitening, and the
optional projection onto the unit sphere.

The fitted model maps an n-vector x to ``W @ H.T @ (x - mean)`` where H holds
the retained covariance eigenvectors and W is the symmetric inverse square
root of the reduced covariance, so the transformed training set has identity
covariance. With ``project_to_sphere`` the image is scaled to unit length.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import LabeledDataset
from .errors import NumericalError, ValidationError

EIG_FLOOR = 1e-10
_PSD_TOL = -1e-8
_ZERO_NORM = 1e-12


@dataclass(frozen=True)
class PreprocessModel:
    mean: np.ndarray            # (n,)
    basis: np.ndarray           # (n, m), orthonormal columns
    whitener: np.ndarray        # (m, m), symmetric positive definite
    project_to_sphere: bool

    @property
    def n(self) -> int:
        return self.basis.shape[0]

    @property
    def m(self) -> int:
        return self.basis.shape[1]


def _features(data) -> np.ndarray:
    if isinstance(data, LabeledDataset):
        return data.features
    return np.asarray(data, dtype=np.float64)


def center(data):
    """Subtract the column mean of the full set; returns (centered, mean)."""
    feats = _features(data)
    if feats.shape[0] == 0:
        raise ValidationError("cannot center an empty dataset")
    mean = feats.mean(axis=0)
    return feats - mean, mean


def _covariance(rows: np.ndarray) -> np.ndarray:
    # Unbiased 1/(N-1) estimator; zero matrix for a single row.
    if rows.shape[0] < 2:
        return np.zeros((rows.shape[1], rows.shape[1]))
    centered = rows - rows.mean(axis=0)
    return centered.T @ centered / (rows.shape[0] - 1)


def kaiser_guttman_select(eigenvalues) -> np.ndarray:
    """Indices of eigenvalues strictly above their mean.

    Input must be sorted descending. When no eigenvalue exceeds the mean
    (all equal), the single largest is retained so the retained basis is
    never empty.
    """
    ev = np.asarray(eigenvalues, dtype=np.float64)
    if ev.ndim != 1 or ev.size < 1:
        raise ValidationError("eigenvalues must be a non-empty 1-D sequence")
    if np.any(np.diff(ev) > 0):
        raise ValidationError("eigenvalues must be sorted descending")
    if ev[-1] < _PSD_TOL:
        raise NumericalError(f"negative eigenvalue {ev[-1]:.3e}: covariance must be PSD")
    retained = np.flatnonzero(ev > ev.mean())
    if retained.size == 0:
        retained = np.array([0])
    return retained


def _condition_select(eigenvalues: np.ndarray, max_condition: float) -> np.ndarray:
    # Largest descending prefix keeping max/min eigenvalue ratio bounded.
    if max_condition < 1:
        raise ValidationError("max_condition must be >= 1")
    if eigenvalues[-1] < _PSD_TOL:
        raise NumericalError(f"negative eigenvalue {eigenvalues[-1]:.3e}: covariance must be PSD")
    top = eigenvalues[0]
    keep = (eigenvalues > 0) & (top <= max_condition * eigenvalues)
    retained = np.flatnonzero(keep)
    if retained.size == 0:
        retained = np.array([0])
    return retained


def fit_preprocess(
    data,
    project_to_sphere: bool = False,
    eig_floor: float = EIG_FLOOR,
    max_condition: float | None = None,
) -> PreprocessModel:
    """Fit center -> eigenvalue selection -> whitening on the full set.

    ``max_condition`` switches the retention rule from the Kaiser-Guttman
    test to a bound on the ratio of the largest retained eigenvalue to the
    smallest. Retained eigenvalues below ``eig_floor`` raise: the whitening
    inverse would be singular.
    """
    feats = _features(data)
    if feats.shape[0] < 2:
        raise ValidationError("need at least 2 rows to fit")
    centered, mean = center(feats)
    cov = centered.T @ centered / (feats.shape[0] - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    eigvals, eigvecs = eigvals[::-1], eigvecs[:, ::-1]
    if max_condition is None:
        retained = kaiser_guttman_select(eigvals)
    else:
        retained = _condition_select(eigvals, max_condition)
    if np.any(eigvals[retained] < eig_floor):
        raise NumericalError(
            f"retained eigenvalue {eigvals[retained].min():.3e} below floor {eig_floor:.3e}"
        )
    basis = eigvecs[:, retained]
    reduced = centered @ basis
    red_cov = reduced.T @ reduced / (feats.shape[0] - 1)
    rvals, rvecs = np.linalg.eigh(red_cov)
    if np.any(rvals < eig_floor):
        raise NumericalError(
            f"reduced covariance eigenvalue {rvals.min():.3e} below floor {eig_floor:.3e}"
        )
    whitener = (rvecs / np.sqrt(rvals)) @ rvecs.T
    return PreprocessModel(mean, basis, whitener, project_to_sphere)


def transform(model: PreprocessModel, x) -> np.ndarray:
    """Map n-vectors (or an (N, n) batch) into whitened coordinates."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    rows = x[None, :] if single else x
    if rows.shape[1] != model.n:
        raise ValidationError(f"expected dimension {model.n}, got {rows.shape[1]}")
    image = (rows - model.mean) @ model.basis @ model.whitener
    if model.project_to_sphere:
        norms = np.linalg.norm(image, axis=1)
        if np.any(norms < _ZERO_NORM):
            raise NumericalError("cannot project a zero vector onto the sphere")
        image = image / norms[:, None]
    return image[0] if single else image
