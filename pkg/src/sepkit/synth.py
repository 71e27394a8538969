"""Synthetic stand-in for a legacy classifier's internal feature vectors.

Class means are drawn on a sphere; samples add bounded uniform noise (kept
uniform, not Gaussian, so the coordinates remain bounded random variables
and the concentration bounds stay applicable). The legacy classifier is
nearest-mean with softmax scores over negative squared distances, so its
error rate is tuned by the noise scale alone.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .data import CORRECT, ERROR, LabeledDataset, RngSpec
from .errors import ValidationError


@dataclass(frozen=True)
class SynthSpec:
    n: int
    classes: int
    per_class: int
    class_separation: float
    noise_scale: float
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.per_class < 1:
            raise ValidationError("n and per_class must be >= 1")
        if self.classes < 2:
            raise ValidationError("need at least 2 classes")
        if not (self.class_separation > 0 and self.noise_scale > 0):
            raise ValidationError("class_separation and noise_scale must be positive")

    @property
    def clip_bound(self) -> float:
        return self.class_separation + self.noise_scale


@dataclass(frozen=True)
class CaseStudy:
    features: np.ndarray        # (N, n)
    scores: np.ndarray          # (N, classes)
    truths: np.ndarray          # (N,)

    def predicted(self) -> np.ndarray:
        return self.scores.argmax(axis=1)

    def error_rate(self) -> float:
        return float((self.predicted() != self.truths).mean())

    def labeled_dataset(self) -> LabeledDataset:
        labels = np.where(self.predicted() != self.truths, ERROR, CORRECT)
        return LabeledDataset(self.features, labels)


def generate_casestudy(spec: SynthSpec) -> CaseStudy:
    """Sample features, legacy scores, and true classes for one spec."""
    g = RngSpec(spec.seed).generator()
    directions = g.standard_normal(size=(spec.classes, spec.n))
    directions /= np.linalg.norm(directions, axis=1)[:, None]
    means = spec.class_separation * directions
    truths = np.repeat(np.arange(spec.classes), spec.per_class)
    noise = g.uniform(-spec.noise_scale, spec.noise_scale, size=(truths.size, spec.n))
    features = np.clip(means[truths] + noise, -spec.clip_bound, spec.clip_bound)
    sq_dist = (
        np.sum(features**2, axis=1)[:, None]
        - 2.0 * features @ means.T
        + np.sum(means**2, axis=1)[None, :]
    )
    logits = -sq_dist / (spec.class_separation**2 / 2.0)
    logits -= logits.max(axis=1, keepdims=True)
    scores = np.exp(logits)
    scores /= scores.sum(axis=1, keepdims=True)
    return CaseStudy(features, scores, truths)


def calibrate_noise_scale(
    spec: SynthSpec,
    target_error_rate: float,
    tol: float = 0.002,
    max_steps: int = 60,
) -> SynthSpec:
    """Bisect the noise scale until the legacy error rate matches the target.

    The error rate is a deterministic, monotone function of the noise scale
    at a fixed seed, so bisection converges; the returned spec reproduces
    the measured rate exactly under the same seed.
    """
    if not 0.0 < target_error_rate < 1.0:
        raise ValidationError("target_error_rate must be in (0, 1)")

    def rate(scale: float) -> float:
        return generate_casestudy(replace(spec, noise_scale=scale)).error_rate()

    lo, hi = spec.noise_scale * 1e-3, spec.noise_scale
    while rate(hi) < target_error_rate:
        lo, hi = hi, hi * 2.0
        if hi > spec.class_separation * 1e3:
            raise ValidationError("cannot reach the target error rate")
    for _ in range(max_steps):
        mid = 0.5 * (lo + hi)
        r = rate(mid)
        if abs(r - target_error_rate) <= tol:
            return replace(spec, noise_scale=mid)
        if r < target_error_rate:
            lo = mid
        else:
            hi = mid
    return replace(spec, noise_scale=0.5 * (lo + hi))
