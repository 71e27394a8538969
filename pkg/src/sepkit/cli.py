"""Command-line driver: fit, apply, eval, theory, synth.

Exit codes: 0 success, 1 I/O or runtime failure, 2 argument validation.
All randomness funnels through --seed; every command is deterministic.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import theory
from .data import RngSpec, load_dataset, save_dataset
from .ensemble import (
    ALG1,
    ALG2,
    RELABEL,
    CorrectingAction,
    fire_mask,
    fit_ensemble,
    load_model,
    save_model,
)
from .errors import SepkitError, ValidationError
from .evaluate import corrected_curve, curve, default_grid, load_predictions, save_curve
from .synth import SynthSpec, calibrate_noise_scale, generate_casestudy
from .evaluate import save_predictions


def _parse_grid(spec: str) -> list[int]:
    """Accepts '100:2000:100' (inclusive), '2,5,10', or a single integer."""
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ValidationError(f"bad grid spec {spec!r}: want start:stop:step")
        start, stop, step = (int(v) for v in parts)
        if step < 1 or stop < start:
            raise ValidationError(f"bad grid spec {spec!r}")
        return list(range(start, stop + 1, step))
    if "," in spec:
        return [int(v) for v in spec.split(",")]
    return [int(spec)]


def _grid_from_args(args) -> list[int]:
    if args.n is not None:
        return [args.n]
    if args.n_grid is not None:
        return _parse_grid(args.n_grid)
    raise ValidationError("one of --n or --n-grid is required")


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in row])


def _cmd_fit(args) -> int:
    data = load_dataset(args.data)
    if args.action == RELABEL and args.relabel_target is None:
        raise ValidationError("--relabel-target is required with --action relabel")
    action = CorrectingAction(args.action, args.relabel_target)
    ensemble, report = fit_ensemble(
        data,
        p=args.clusters,
        theta=args.theta,
        algorithm=args.algorithm,
        project=args.project,
        rng=RngSpec(args.seed),
        restarts=args.restarts,
        max_iters=args.max_iters,
        max_epochs=args.max_epochs,
        action=action,
    )
    save_model(ensemble, args.out)
    print(report.to_json())
    return 0


def _cmd_apply(args) -> int:
    ensemble = load_model(args.model)
    data = load_dataset(args.features)
    if data.n != ensemble.n:
        raise ValidationError(f"model expects dimension {ensemble.n}, data has {data.n}")
    fired = fire_mask(ensemble, data.features)
    _write_csv(args.out, ["row", "fired"], [(i, int(f)) for i, f in enumerate(fired)])
    print(f"fired on {int(fired.sum())} of {data.n_rows} rows")
    return 0


def _cmd_eval(args) -> int:
    scores, truths = load_predictions(args.predictions)
    gammas = default_grid(args.grid)
    rng = RngSpec(args.seed)
    if args.model is None:
        result = curve(scores, truths, gammas, rng)
    else:
        if args.features is None:
            raise ValidationError("--features is required with --model")
        ensemble = load_model(args.model)
        data = load_dataset(args.features)
        if data.n != ensemble.n:
            raise ValidationError(f"model expects dimension {ensemble.n}, data has {data.n}")
        if data.n_rows != scores.shape[0]:
            raise ValidationError("features and predictions have different row counts")
        result = corrected_curve(ensemble, data.features, scores, truths, gammas, rng)
    save_curve(result, args.out)
    print(f"wrote {len(result.gammas)} curve points to {args.out}")
    return 0


def _cmd_theory_bounds(args) -> int:
    rows = []
    for n in _grid_from_args(args):
        cfg = theory.TheoryConfig.cube(n=n, M=args.M, eps=args.eps)
        one = theory.bound_one_element(cfg)
        cascade = theory.bound_cascade(cfg)
        rows.append((n, args.eps, args.M, one.value, int(one.vacuous),
                     cascade.value, int(cascade.vacuous)))
    _write_csv(args.out, ["n", "eps", "M", "bound_one_element", "vacuous_one_element",
                          "bound_cascade", "vacuous_cascade"], rows)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def _cmd_theory_mc(args) -> int:
    rows = []
    for i, n in enumerate(_grid_from_args(args)):
        cfg = theory.TheoryConfig.cube(n=n, M=args.M - 1, eps=args.eps)
        bound = theory.bound_one_element(cfg)
        freq_a, freq_b = theory.mc_separation_frequencies(
            n, args.M, args.trials, args.eps, RngSpec(args.seed, stream=i), args.threads
        )
        stderr = float(np.sqrt(freq_b * (1.0 - freq_b) / args.trials))
        rows.append((n, args.eps, args.M, args.trials, bound.value, freq_a, freq_b, stderr))
    _write_csv(args.out, ["n", "eps", "M", "trials", "bound", "freq_a", "freq_b", "stderr"], rows)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def _cmd_theory_caps(args) -> int:
    rows = []
    for i, n in enumerate(_grid_from_args(args)):
        lower, upper = theory.cap_volume_bounds(n, args.eps)
        estimate = theory.mc_cap_ratio(n, args.eps, args.samples,
                                       RngSpec(args.seed, stream=i), args.threads)
        stderr = float(np.sqrt(estimate * (1.0 - estimate) / args.samples))
        rows.append((n, args.eps, args.samples, lower, upper, estimate, stderr))
    _write_csv(args.out, ["n", "eps", "samples", "lower", "upper", "estimate", "stderr"], rows)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def _cmd_synth(args) -> int:
    spec = SynthSpec(
        n=args.n,
        classes=args.classes,
        per_class=args.per_class,
        class_separation=args.separation,
        noise_scale=args.noise,
        seed=args.seed,
    )
    if args.target_error is not None:
        spec = calibrate_noise_scale(spec, args.target_error)
    study = generate_casestudy(spec)
    save_dataset(study.labeled_dataset(), args.out_features)
    save_predictions(study.scores, study.truths, args.out_predictions)
    print(json.dumps({
        "noise_scale": spec.noise_scale,
        "error_rate": study.error_rate(),
        "rows": int(study.truths.size),
    }, sort_keys=True))
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sepkit")
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit a correcting ensemble from a labeled feature CSV")
    fit.add_argument("--data", required=True)
    fit.add_argument("--clusters", type=int, required=True)
    fit.add_argument("--theta", type=float, default=0.2)
    fit.add_argument("--algorithm", choices=(ALG1, ALG2), default=ALG1)
    fit.add_argument("--project", action="store_true")
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--restarts", type=int, default=10)
    fit.add_argument("--max-iters", type=int, default=300)
    fit.add_argument("--max-epochs", type=int, default=1000)
    fit.add_argument("--action", choices=("flag_error", "suppress_output", "relabel"),
                     default="flag_error")
    fit.add_argument("--relabel-target", type=int, default=None)
    fit.add_argument("--out", required=True)
    fit.set_defaults(func=_cmd_fit)

    apply_ = sub.add_parser("apply", help="mark which rows an ensemble fires on")
    apply_.add_argument("--model", required=True)
    apply_.add_argument("--features", required=True)
    apply_.add_argument("--out", required=True)
    apply_.set_defaults(func=_cmd_apply)

    eval_ = sub.add_parser("eval", help="performance curve, optionally after correction")
    eval_.add_argument("--model", default=None)
    eval_.add_argument("--features", default=None)
    eval_.add_argument("--predictions", required=True)
    eval_.add_argument("--grid", type=int, default=101)
    eval_.add_argument("--seed", type=int, default=0)
    eval_.add_argument("--out", required=True)
    eval_.set_defaults(func=_cmd_eval)

    th = sub.add_parser("theory", help="bound evaluators and Monte Carlo checks")
    th_sub = th.add_subparsers(dest="theory_command", required=True)

    def add_grid(p):
        p.add_argument("--n", type=int, default=None)
        p.add_argument("--n-grid", default=None)
        p.add_argument("--eps", type=float, default=0.2)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", required=True)

    bounds = th_sub.add_parser("bounds", help="closed-form separation bounds over n")
    add_grid(bounds)
    bounds.add_argument("--M", type=int, default=9999)
    bounds.set_defaults(func=_cmd_theory_bounds)

    mc = th_sub.add_parser("mc", help="empirical separation frequencies vs the bound")
    add_grid(mc)
    mc.add_argument("--M", type=int, default=10000)
    mc.add_argument("--trials", type=int, default=100)
    mc.add_argument("--threads", type=int, default=1)
    mc.set_defaults(func=_cmd_theory_mc)

    caps = th_sub.add_parser("caps", help="spherical cap volume bounds vs ball sampling")
    add_grid(caps)
    caps.add_argument("--samples", type=int, default=1_000_000)
    caps.add_argument("--threads", type=int, default=1)
    caps.set_defaults(func=_cmd_theory_caps)

    synth = sub.add_parser("synth", help="synthetic legacy-classifier case study CSVs")
    synth.add_argument("--n", type=int, default=200)
    synth.add_argument("--classes", type=int, default=10)
    synth.add_argument("--per-class", type=int, default=1000)
    synth.add_argument("--separation", type=float, default=3.0)
    synth.add_argument("--noise", type=float, default=1.0)
    synth.add_argument("--target-error", type=float, default=None)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--out-features", required=True)
    synth.add_argument("--out-predictions", required=True)
    synth.set_defaults(func=_cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SepkitError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
