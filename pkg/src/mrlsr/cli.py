"""Command-line interface: ``mrlsr <subcommand> ...``.

Exit codes: 0 on success, 2 for bad input, 3 for numeric failures.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import List, Optional

import numpy as np

from .data import TrainingSet, friedman_synthetic, load_csv
from .estimators import make_estimator
from .exceptions import InputError, NumericalError
from .experiments import (CvProtocol, DEFAULT_FRACTIONS, ExperimentResult, run_accuracy_experiment,
                          run_convergence_experiment, run_equivalence_experiment, write_result)
from .hamming import h_distance
from .kernel import KernelConfig
from .solvers import fit, load_model, save_model
from .stability import clip_targets, scale_targets, stability_series

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


def _bandwidth(text: str):
    return "auto" if text == "auto" else float(text)


def _int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _load(path: str, header: bool) -> TrainingSet:
    return load_csv(path, has_header=header)


def _dataset(args) -> tuple:
    """``(TrainingSet, name)`` from ``--data`` or ``--synthetic``."""
    if args.data is not None:
        return _load(args.data, args.header), os.path.splitext(os.path.basename(args.data))[0]
    return friedman_synthetic(args.synthetic, noise_sd=1.0, seed=args.data_seed), "synthetic"


def _write_json(payload, path: Optional[str]) -> None:
    text = json.dumps(payload, sort_keys=True, indent=1) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


# ---------------------------------------------------------------- commands


def cmd_fit(args) -> int:
    Z = _load(args.train, args.header)
    model = fit(args.algo, args.lam, Z, m=args.m, cfg=KernelConfig("gaussian", args.bandwidth))
    save_model(model, args.model_out)
    return EXIT_OK


def cmd_predict(args) -> int:
    model = load_model(args.model)
    raw = np.loadtxt(args.input, delimiter=",", ndmin=2, skiprows=1 if args.header else 0)
    d = model.training_inputs.shape[1]
    if raw.shape[1] == d + 1:
        raw = raw[:, :d]  # a trailing target column is ignored
    elif raw.shape[1] != d:
        raise InputError(f"model expects {d} features, input has {raw.shape[1]} columns")
    preds = model.predict(raw)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.writelines(f"{p!r}\n" for p in preds.tolist())
    return EXIT_OK


def cmd_equivalence(args) -> int:
    ts, name = _dataset(args)
    report = run_equivalence_experiment(ts, args.m, seed=args.seed, lam=None if args.cv else args.lam)
    result = ExperimentResult.from_equivalence(report, name, args.seed)
    _write_json(json.loads(result.to_json()), args.json)
    return EXIT_OK


def cmd_hamming(args) -> int:
    print(h_distance(_load(args.csv1, args.header), _load(args.csv2, args.header)))
    return EXIT_OK


def cmd_stability(args) -> int:
    ts, _ = _dataset(args)
    if args.scale is not None:
        ts = scale_targets(ts, args.scale)
    elif args.clip is not None:
        ts = clip_targets(ts, args.clip)
    est = make_estimator(args.algo, args.lam, args.m, args.bandwidth)
    report = stability_series(est, ts, args.n_series, samples=args.samples, test_size=args.test_size,
                              seed=args.seed, c_y=args.c_y)
    rows = [{k: r[k] for k in ("n", "lam", "m", "algo", "c_y", "theoretical_beta", "empirical_sup", "seed")}
            for r in report.rows()]
    for r in rows:
        r["lambda"] = r.pop("lam")
    _write_json(rows, args.json)
    return EXIT_OK


def cmd_experiment(args) -> int:
    ts, name = _dataset(args)
    protocol = CvProtocol(folds=args.folds, runs=args.runs)
    if args.kind == "accuracy":
        result = run_accuracy_experiment(ts, protocol, seed=args.seed, name=name)
    elif args.kind == "equivalence":
        report = run_equivalence_experiment(ts, args.m, seed=args.seed, lam=args.lam, protocol=protocol)
        result = ExperimentResult.from_equivalence(report, name, args.seed)
    else:
        result = run_convergence_experiment(ts, args.m, lam=args.lam, fractions=DEFAULT_FRACTIONS,
                                            runs=args.runs, seed=args.seed, protocol=protocol, name=name)
    jpath, cpath = write_result(result, args.out, args.kind)
    print(jpath)
    print(cpath)
    return EXIT_OK


# ------------------------------------------------------------------ parser


def _add_dataset(p, required=True):
    src = p.add_mutually_exclusive_group(required=required)
    src.add_argument("--data", help="CSV file, target in the last column")
    src.add_argument("--synthetic", type=int, metavar="N", help="use N Friedman rows instead of a CSV")
    p.add_argument("--data-seed", type=int, default=0, help="seed of the synthetic generator")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mrlsr", description="M-power regularized least squares toolkit")
    parser.add_argument("--header", action="store_true", help="CSV inputs have a header row")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a model and save it as JSON")
    p.add_argument("--algo", choices=("krr", "mrlsr", "modkrr"), required=True)
    p.add_argument("--m", type=float, default=2.0)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--bandwidth", type=_bandwidth, default="auto")
    p.add_argument("--train", required=True)
    p.add_argument("--model-out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="predict with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("equivalence", help="strong-equivalence check over four splits")
    _add_dataset(p)
    p.add_argument("--m", type=float, required=True)
    lam = p.add_mutually_exclusive_group(required=True)
    lam.add_argument("--lambda", dest="lam", type=float)
    lam.add_argument("--cv", action="store_true", help="choose lambda by 10-fold CV on the first split")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", default="-")
    p.set_defaults(func=cmd_equivalence)

    p = sub.add_parser("hamming", help="generalized Hamming distance between two CSV training sets")
    p.add_argument("csv1")
    p.add_argument("csv2")
    p.set_defaults(func=cmd_hamming)

    p = sub.add_parser("stability", help="leave-one-out stability against the theoretical bound")
    p.add_argument("--algo", choices=("krr", "mrlsr", "modkrr"), required=True)
    p.add_argument("--m", type=float, default=2.0)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--bandwidth", type=_bandwidth, default="auto")
    _add_dataset(p)
    p.add_argument("--n-series", type=_int_list, default=[50, 100, 200])
    p.add_argument("--samples", type=int, default=None, help="removals per n (default: all)")
    p.add_argument("--test-size", type=int, default=50)
    bound = p.add_mutually_exclusive_group()
    bound.add_argument("--scale", type=float, metavar="B", help="map targets affinely onto [-B, B]")
    bound.add_argument("--clip", type=float, metavar="B", help="clip targets to [-B, B]")
    p.add_argument("--c-y", type=float, default=None, help="target bound (default: max |y|)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", default="-")
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("experiment", help="run an experiment and write JSON and CSV results")
    p.add_argument("kind", choices=("accuracy", "equivalence", "convergence"))
    _add_dataset(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--m", type=float, default=None,
                   help="regularization power (equivalence: 1.5, convergence: 0.1 by default)")
    p.add_argument("--lambda", dest="lam", type=float, default=None, help="skip lambda selection")
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--folds", type=int, default=10)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "kind", None) is not None and args.m is None:
        args.m = 1.5 if args.kind == "equivalence" else 0.1
    try:
        return args.func(args)
    except (InputError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericalError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
