"""End-to-end construction and deployment of correcting ensembles.

A fitted ensemble holds one stage per training iteration; each stage owns
its preprocessing model plus its retained members (bare nodes or cascaded
pairs). A sample is corrected when any member of any stage fires, in which
case the configured correcting action applies.

Fitting and evaluation score members through the same full-batch kernels,
so firing decisions on the training matrix reproduce the construction-time
decisions exactly, including members sitting on their own threshold.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .cascade import (
    ALWAYS_PASS,
    METHOD_FISHER,
    METHOD_PERCEPTRON,
    METHOD_VACUOUS,
    CascadePair,
    fit_second_stage,
    pair_second_scores,
    project_to_hyperplane,
)
from .cluster import kmeans, positive_correlation_report
from .data import LabeledDataset, RngSpec
from .errors import EmptyEnsembleError, ModelFormatError, ValidationError
from .nodes import CorrectorNode, build_nodes, node_scores
from .preprocess import EIG_FLOOR, PreprocessModel, fit_preprocess, transform

ALG1 = "alg1"
ALG2 = "alg2"

FLAG_ERROR = "flag_error"
SUPPRESS_OUTPUT = "suppress_output"
RELABEL = "relabel"
_ACTION_KINDS = (FLAG_ERROR, SUPPRESS_OUTPUT, RELABEL)

MODEL_VERSION = "1"


@dataclass(frozen=True)
class CorrectingAction:
    kind: str = FLAG_ERROR
    relabel_target: int | None = None

    def __post_init__(self):
        if self.kind not in _ACTION_KINDS:
            raise ValidationError(f"unknown action kind {self.kind!r}")
        if (self.relabel_target is not None) != (self.kind == RELABEL):
            raise ValidationError("relabel_target must be set iff kind is relabel")


@dataclass(frozen=True)
class EnsembleStage:
    prep: PreprocessModel
    members: tuple
    algorithm: str


@dataclass(frozen=True)
class CorrectingEnsemble:
    stages: tuple[EnsembleStage, ...]
    action: CorrectingAction = CorrectingAction()

    @property
    def prep(self) -> PreprocessModel:
        return self.stages[0].prep

    @property
    def members(self) -> tuple:
        return self.stages[0].members

    @property
    def algorithm(self) -> str:
        return self.stages[0].algorithm

    @property
    def iteration(self) -> int:
        return len(self.stages)

    @property
    def n(self) -> int:
        return self.stages[0].prep.n


@dataclass
class ClusterReport:
    cluster_id: int
    size: int
    c: float
    beta_hat: float
    retained: bool
    method: str | None = None
    node_pickups: int | None = None
    pair_pickups: int | None = None


@dataclass
class BuildReport:
    algorithm: str
    p: int
    theta: float
    project_to_sphere: bool
    retained_dim: int
    member_count: int
    total_errors: int
    detected_errors: int
    fired_correct: int
    n_rows: int
    clusters: list[ClusterReport] = field(default_factory=list)
    rejected: list[tuple[int, float]] = field(default_factory=list)

    @property
    def detection_rate(self) -> float:
        return self.detected_errors / self.total_errors

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "p": self.p,
            "theta": self.theta,
            "project_to_sphere": self.project_to_sphere,
            "retained_dim": self.retained_dim,
            "member_count": self.member_count,
            "total_errors": self.total_errors,
            "detected_errors": self.detected_errors,
            "detection_rate": self.detection_rate,
            "fired_correct": self.fired_correct,
            "n_rows": self.n_rows,
            "rejected": [{"cluster_id": cid, "c": c} for cid, c in self.rejected],
            "clusters": [
                {
                    "cluster_id": cr.cluster_id,
                    "size": cr.size,
                    "c": cr.c,
                    "beta_hat": cr.beta_hat,
                    "retained": cr.retained,
                    "method": cr.method,
                    "node_pickups": cr.node_pickups,
                    "pair_pickups": cr.pair_pickups,
                }
                for cr in self.clusters
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _fit_stage(
    data: LabeledDataset,
    p: int,
    theta: float,
    algorithm: str,
    project: bool,
    rng: RngSpec,
    restarts: int,
    max_iters: int,
    max_epochs: int,
    eig_floor: float,
    max_condition,
):
    if algorithm not in (ALG1, ALG2):
        raise ValidationError(f"algorithm must be {ALG1!r} or {ALG2!r}")
    if data.n_errors < 1:
        raise ValidationError("dataset has no error-labeled rows to correct")
    if not 1 <= p <= data.n_errors:
        raise ValidationError(f"cluster count {p} must be in [1, {data.n_errors}]")
    prep = fit_preprocess(data, project, eig_floor, max_condition)
    whitened = transform(prep, data.features)
    err_rows = np.flatnonzero(data.error_mask)
    err_whitened = whitened[err_rows]
    clustering = kmeans(err_whitened, p, restarts, rng.child(0), max_iters)
    betas = positive_correlation_report(clustering, err_whitened)
    nodes, rejected = build_nodes(whitened, err_rows, clustering, theta)
    if not nodes:
        raise EmptyEnsembleError(rejected)

    correct_mask = ~data.error_mask
    sizes = clustering.sizes()
    members: list = []
    reports: list[ClusterReport] = []
    fired_any = np.zeros(data.n_rows, dtype=bool)
    for node in nodes:
        scores = node_scores(whitened, node)
        node_fired = scores >= node.c
        node_pickups = int((node_fired & correct_mask).sum())
        member_rows = err_rows[clustering.assignments == node.cluster_id]
        report = ClusterReport(
            cluster_id=node.cluster_id,
            size=int(sizes[node.cluster_id]),
            c=node.c,
            beta_hat=float(betas[node.cluster_id]),
            retained=True,
            node_pickups=node_pickups,
        )
        if algorithm == ALG1:
            members.append(node)
            fired_any |= node_fired
        else:
            proj = project_to_hyperplane(node, whitened)
            pickup_rows = node_fired & correct_mask
            w2, c2, method = fit_second_stage(
                proj[pickup_rows], proj[member_rows], max_epochs, rng.child(1, node.cluster_id)
            )
            pair = CascadePair(node, w2, c2, method)
            s2 = pair_second_scores(whitened, pair)
            if method == METHOD_FISHER:
                # Re-anchor the threshold on the full-batch scores so the
                # boundary member's firing survives re-evaluation bit for bit.
                pair = CascadePair(node, w2, float(s2[member_rows].min()), method)
            elif method == METHOD_PERCEPTRON:
                # Perceptron convergence must hold on the full-batch scores
                # too; on the (pathological) float-path mismatch, demote to
                # the fallback threshold rule.
                separated = np.all(s2[member_rows] >= c2) and np.all(s2[pickup_rows] < c2)
                if not separated:
                    pair = CascadePair(node, w2, float(s2[member_rows].min()), METHOD_FISHER)
            pair_fired = node_fired & (s2 >= pair.c2)
            report.method = pair.method
            report.pair_pickups = int((pair_fired & correct_mask).sum())
            members.append(pair)
            fired_any |= pair_fired
        reports.append(report)
    for cid, c in rejected:
        reports.append(
            ClusterReport(
                cluster_id=cid,
                size=int(sizes[cid]),
                c=c,
                beta_hat=float(betas[cid]),
                retained=False,
            )
        )
    cluster_reports = sorted(reports, key=lambda r: r.cluster_id)
    stage = EnsembleStage(prep, tuple(members), algorithm)
    report = BuildReport(
        algorithm=algorithm,
        p=p,
        theta=theta,
        project_to_sphere=project,
        retained_dim=prep.m,
        member_count=len(members),
        total_errors=int(data.n_errors),
        detected_errors=int(fired_any[err_rows].sum()),
        fired_correct=int((fired_any & correct_mask).sum()),
        n_rows=data.n_rows,
        clusters=cluster_reports,
        rejected=list(rejected),
    )
    return stage, report


def fit_ensemble(
    data: LabeledDataset,
    p: int,
    theta: float = 0.2,
    algorithm: str = ALG1,
    project: bool = True,
    rng: RngSpec = RngSpec(0),
    *,
    restarts: int = 10,
    max_iters: int = 300,
    max_epochs: int = 1000,
    eig_floor: float = EIG_FLOOR,
    max_condition: float | None = None,
    action: CorrectingAction = CorrectingAction(),
):
    """Run the full construction pipeline once; returns (ensemble, report)."""
    stage, report = _fit_stage(
        data, p, theta, algorithm, project, rng,
        restarts, max_iters, max_epochs, eig_floor, max_condition,
    )
    return CorrectingEnsemble((stage,), action), report


def iterate(
    prev: CorrectingEnsemble,
    data: LabeledDataset,
    p: int,
    theta: float = 0.2,
    algorithm: str | None = None,
    project: bool | None = None,
    rng: RngSpec = RngSpec(0),
    **kwargs,
):
    """Fit a further stage on freshly gathered data.

    The combined ensemble corrects a sample when any stage fires; the new
    data is expected to have been collected with ``prev`` deployed.
    """
    algorithm = prev.stages[-1].algorithm if algorithm is None else algorithm
    project = prev.stages[-1].prep.project_to_sphere if project is None else project
    stage, report = _fit_stage(
        data, p, theta, algorithm, project, rng,
        kwargs.pop("restarts", 10), kwargs.pop("max_iters", 300),
        kwargs.pop("max_epochs", 1000), kwargs.pop("eig_floor", EIG_FLOOR),
        kwargs.pop("max_condition", None),
    )
    if kwargs:
        raise ValidationError(f"unknown arguments: {sorted(kwargs)}")
    return CorrectingEnsemble(prev.stages + (stage,), prev.action), report


def fire_mask(ensemble: CorrectingEnsemble, features) -> np.ndarray:
    """Boolean row mask: True where any member of any stage fires."""
    rows = np.asarray(features, dtype=np.float64)
    if rows.ndim != 2:
        raise ValidationError("features must be a 2-D matrix")
    fired = np.zeros(rows.shape[0], dtype=bool)
    for stage in ensemble.stages:
        whitened = transform(stage.prep, rows)
        for member in stage.members:
            if isinstance(member, CascadePair):
                ok = node_scores(whitened, member.first) >= member.first.c
                s2 = pair_second_scores(whitened, member)
                fired |= ok & (s2 >= member.c2)
            else:
                fired |= node_scores(whitened, member) >= member.c
    return fired


def apply(ensemble: CorrectingEnsemble, x) -> CorrectingAction | None:
    """Put one raw n-vector through the ensemble.

    Returns the configured correcting action when any member fires, else
    None (the sample passes unchanged).
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValidationError("x must be a single n-vector")
    if fire_mask(ensemble, x[None, :])[0]:
        return ensemble.action
    return None


def _member_to_dict(member) -> dict:
    if isinstance(member, CascadePair):
        return {
            "w": member.first.w.tolist(),
            "c": member.first.c,
            "cluster_id": member.first.cluster_id,
            "w2": member.w2.tolist(),
            "c2": None if member.c2 == ALWAYS_PASS else member.c2,
            "method": member.method,
        }
    return {"w": member.w.tolist(), "c": member.c, "cluster_id": member.cluster_id}


def _member_from_dict(doc: dict, algorithm: str):
    node = CorrectorNode(np.asarray(doc["w"], dtype=np.float64), float(doc["c"]),
                         int(doc.get("cluster_id", -1)))
    if algorithm == ALG1:
        return node
    method = doc["method"]
    if method not in (METHOD_PERCEPTRON, METHOD_FISHER, METHOD_VACUOUS):
        raise ModelFormatError(f"unknown second-stage method {method!r}")
    c2 = ALWAYS_PASS if doc["c2"] is None else float(doc["c2"])
    return CascadePair(node, np.asarray(doc["w2"], dtype=np.float64), c2, method)


def _stage_to_dict(stage: EnsembleStage) -> dict:
    return {
        "algorithm": stage.algorithm,
        "project_to_sphere": stage.prep.project_to_sphere,
        "mean": stage.prep.mean.tolist(),
        "H": stage.prep.basis.tolist(),
        "W": stage.prep.whitener.tolist(),
        "members": [_member_to_dict(m) for m in stage.members],
    }


def _stage_from_dict(doc: dict) -> EnsembleStage:
    algorithm = doc["algorithm"]
    if algorithm not in (ALG1, ALG2):
        raise ModelFormatError(f"unknown algorithm {algorithm!r}")
    mean = np.asarray(doc["mean"], dtype=np.float64)
    basis = np.asarray(doc["H"], dtype=np.float64)
    whitener = np.asarray(doc["W"], dtype=np.float64)
    if mean.ndim != 1 or basis.ndim != 2 or whitener.ndim != 2:
        raise ModelFormatError("mean/H/W have wrong shapes")
    if basis.shape[0] != mean.shape[0] or whitener.shape != (basis.shape[1],) * 2:
        raise ModelFormatError("mean/H/W shapes are inconsistent")
    prep = PreprocessModel(mean, basis, whitener, bool(doc["project_to_sphere"]))
    members = tuple(_member_from_dict(m, algorithm) for m in doc["members"])
    if not members:
        raise ModelFormatError("stage has no members")
    for member in members:
        w = member.first.w if isinstance(member, CascadePair) else member.w
        if w.shape != (prep.m,):
            raise ModelFormatError("member dimension does not match the whitener")
    return EnsembleStage(prep, members, algorithm)


def save_model(ensemble: CorrectingEnsemble, path) -> None:
    doc = {"version": MODEL_VERSION}
    doc.update(_stage_to_dict(ensemble.stages[0]))
    doc["action"] = {
        "kind": ensemble.action.kind,
        "relabel_target": ensemble.action.relabel_target,
    }
    doc["iterations"] = [_stage_to_dict(s) for s in ensemble.stages[1:]]
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")


def load_model(path) -> CorrectingEnsemble:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ModelFormatError(f"{path}: expected a JSON object")
    version = doc.get("version")
    if version != MODEL_VERSION:
        raise ModelFormatError(f"{path}: unsupported model version {version!r}")
    try:
        stages = [_stage_from_dict(doc)]
        stages.extend(_stage_from_dict(s) for s in doc.get("iterations", []))
        action_doc = doc["action"]
        action = CorrectingAction(action_doc["kind"], action_doc.get("relabel_target"))
    except ModelFormatError:
        raise
    except (KeyError, TypeError, ValueError, ValidationError) as exc:
        raise ModelFormatError(f"{path}: schema violation: {exc}") from None
    return CorrectingEnsemble(tuple(stages), action)
