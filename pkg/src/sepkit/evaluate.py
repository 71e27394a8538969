"""Winner-takes-all evaluation with an abstention threshold.

The decision rule reports the argmax class when its score exceeds gamma and
abstains otherwise; abstentions count as not-reported (false negatives),
wrong reports as false positives, correct ones as true positives. The
companion curve trades the true-positive rate TP/(TP+FN) against the
misclassification rate FP(gamma)/FP(0) as gamma sweeps [0, 1].
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .data import CORRECT, ERROR, LabeledDataset, RngSpec
from .ensemble import RELABEL, CorrectingEnsemble, fire_mask
from .errors import DataFormatError, ValidationError

ABSTAIN = -1


@dataclass(frozen=True)
class ScoredPrediction:
    """Per-class scores for one sample plus its true class."""

    scores: np.ndarray
    true_class: int

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=np.float64)
        if scores.ndim != 1 or scores.size < 2:
            raise ValidationError("scores must be a 1-D vector with >= 2 classes")
        if not np.all(np.isfinite(scores)):
            raise ValidationError("scores must be finite")
        object.__setattr__(self, "scores", scores)


@dataclass(frozen=True)
class PerformanceCurve:
    gammas: np.ndarray
    tpr: np.ndarray
    mr: np.ndarray

    def rows(self):
        return zip(self.gammas, self.tpr, self.mr)


def default_grid(points: int = 101) -> np.ndarray:
    if points < 2:
        raise ValidationError("grid needs at least 2 points")
    return np.linspace(0.0, 1.0, points)


def _winners(scores: np.ndarray, rng: RngSpec) -> np.ndarray:
    """Argmax class per row; exact ties are broken by the seeded stream."""
    maxima = scores.max(axis=1)
    winners = scores.argmax(axis=1)
    tie_rows = np.flatnonzero((scores == maxima[:, None]).sum(axis=1) > 1)
    if tie_rows.size:
        g = rng.generator()
        for i in tie_rows:
            tied = np.flatnonzero(scores[i] == maxima[i])
            winners[i] = tied[g.integers(tied.size)]
    return winners


def decide(pred: ScoredPrediction, gamma: float, rng: RngSpec = RngSpec(0)) -> int:
    """Winner class if its score exceeds gamma, else ABSTAIN (-1)."""
    if not 0.0 <= gamma <= 1.0:
        raise ValidationError("gamma must be in [0, 1]")
    scores = pred.scores[None, :]
    winner = int(_winners(scores, rng)[0])
    return winner if pred.scores[winner] > gamma else ABSTAIN


def _check_pairing(scores: np.ndarray, truths: np.ndarray):
    scores = np.asarray(scores, dtype=np.float64)
    truths = np.asarray(truths, dtype=np.intp)
    if scores.ndim != 2 or scores.shape[1] < 2:
        raise ValidationError("scores must be (N, classes >= 2)")
    if truths.shape != (scores.shape[0],):
        raise ValidationError("truths must align with score rows")
    return scores, truths


def tally(scores, truths, gamma: float, rng: RngSpec = RngSpec(0)) -> tuple[int, int, int]:
    """Counts (TP, FP, FN) at one threshold; the three sum to N."""
    scores, truths = _check_pairing(scores, truths)
    winners = _winners(scores, rng)
    return _tally_decided(scores.max(axis=1), winners, truths, gamma)


def _tally_decided(maxima, winners, truths, gamma: float) -> tuple[int, int, int]:
    reported = maxima > gamma
    tp = int((reported & (winners == truths)).sum())
    fp = int((reported & (winners != truths)).sum())
    fn = int((~reported).sum())
    return tp, fp, fn


def _rates(tp: int, fp: int, fn: int, fp0: int) -> tuple[float, float]:
    tpr = tp / (tp + fn) if tp + fn else 0.0
    mr = fp / fp0 if fp0 else 0.0
    return tpr, mr


def curve(scores, truths, gammas=None, rng: RngSpec = RngSpec(0)) -> PerformanceCurve:
    """Performance curve of the bare scored classifier over a gamma grid."""
    scores, truths = _check_pairing(scores, truths)
    gammas = default_grid() if gammas is None else np.asarray(gammas, dtype=np.float64)
    winners = _winners(scores, rng)
    maxima = scores.max(axis=1)
    fp0 = _tally_decided(maxima, winners, truths, 0.0)[1]
    tprs, mrs = [], []
    for gamma in gammas:
        tp, fp, fn = _tally_decided(maxima, winners, truths, float(gamma))
        tpr, mr = _rates(tp, fp, fn, fp0)
        tprs.append(tpr)
        mrs.append(mr)
    return PerformanceCurve(gammas, np.asarray(tprs), np.asarray(mrs))


def corrected_curve(
    ensemble: CorrectingEnsemble,
    features,
    scores,
    truths,
    gammas=None,
    rng: RngSpec = RngSpec(0),
) -> PerformanceCurve:
    """Performance curve after the ensemble's correcting action.

    Fired samples are either withheld (flag/suppress: they count as not
    reported) or relabeled to the configured target class. The
    misclassification rate stays normalized by the uncorrected FP(0) so
    curves of nested ensembles are comparable.
    """
    scores, truths = _check_pairing(scores, truths)
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] != scores.shape[0]:
        raise ValidationError("features must align row-for-row with predictions")
    gammas = default_grid() if gammas is None else np.asarray(gammas, dtype=np.float64)
    winners = _winners(scores, rng)
    maxima = scores.max(axis=1)
    fp0 = _tally_decided(maxima, winners, truths, 0.0)[1]
    fired = fire_mask(ensemble, features)
    relabel = ensemble.action.kind == RELABEL
    if relabel:
        corrected_winners = np.where(fired, ensemble.action.relabel_target, winners)
    tprs, mrs = [], []
    for gamma in gammas:
        reported = maxima > float(gamma)
        if relabel:
            use_winners = corrected_winners
        else:
            reported = reported & ~fired
            use_winners = winners
        tp = int((reported & (use_winners == truths)).sum())
        fp = int((reported & (use_winners != truths)).sum())
        fn = int((~reported).sum())
        tpr, mr = _rates(tp, fp, fn, fp0)
        tprs.append(tpr)
        mrs.append(mr)
    return PerformanceCurve(gammas, np.asarray(tprs), np.asarray(mrs))


def split_indices(labels, fraction: float, rng: RngSpec) -> tuple[np.ndarray, np.ndarray]:
    """Stratified row split; returns (train_rows, test_rows) in input order."""
    if not 0.0 <= fraction <= 1.0:
        raise ValidationError("fraction must be in [0, 1]")
    labels = np.asarray(labels)
    g = rng.generator()
    train_parts, test_parts = [], []
    for value in (CORRECT, ERROR):
        rows = np.flatnonzero(labels == value)
        if rows.size == 0:
            continue
        order = g.permutation(rows.size)
        n_train = int(round(rows.size * fraction))
        train_parts.append(rows[order[:n_train]])
        test_parts.append(rows[order[n_train:]])
    train = np.sort(np.concatenate(train_parts)) if train_parts else np.empty(0, np.intp)
    test = np.sort(np.concatenate(test_parts)) if test_parts else np.empty(0, np.intp)
    return train, test


def split_train_test(data: LabeledDataset, fraction: float, rng: RngSpec):
    """Stratified dataset split preserving row order within each part."""
    train_rows, test_rows = split_indices(data.labels, fraction, rng)
    train = LabeledDataset(data.features[train_rows], data.labels[train_rows])
    test = LabeledDataset(data.features[test_rows], data.labels[test_rows])
    return train, test


def load_predictions(path):
    """Read a ``true,score0,...,score{C-1}`` CSV; returns (scores, truths)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: empty file") from None
        classes = len(header) - 1
        if classes < 2 or header != ["true"] + [f"score{i}" for i in range(classes)]:
            raise DataFormatError(f"{path}: header must be true,score0,...,score{{C-1}}")
        truths, rows = [], []
        for i, row in enumerate(reader, start=1):
            if len(row) != classes + 1:
                raise DataFormatError(f"{path}: row {i}: expected {classes + 1} fields")
            try:
                truths.append(int(row[0]))
                vals = [float(v) for v in row[1:]]
            except ValueError:
                raise DataFormatError(f"{path}: row {i}: non-numeric value") from None
            if not all(np.isfinite(vals)):
                raise DataFormatError(f"{path}: row {i}: NaN or Inf score")
            rows.append(vals)
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    return np.asarray(rows, dtype=np.float64), np.asarray(truths, dtype=np.intp)


def save_predictions(scores, truths, path) -> None:
    scores, truths = _check_pairing(scores, truths)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["true"] + [f"score{i}" for i in range(scores.shape[1])])
        for t, row in zip(truths, scores):
            writer.writerow([int(t)] + [f"{v:.17g}" for v in row])


def save_curve(curve_: PerformanceCurve, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["gamma", "tpr", "mr"])
        for gamma, tpr, mr in curve_.rows():
            writer.writerow([f"{gamma:.17g}", f"{tpr:.17g}", f"{mr:.17g}"])
