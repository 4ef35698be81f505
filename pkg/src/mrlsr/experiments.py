"""Experiment drivers: accuracy with double cross-validation, strong
equivalence across splits, and learning curves.

Every driver is a pure function of ``(dataset, protocol, seed)``. Per-run
seeds come from :func:`mrlsr.data.derive_seed` keyed on the run index, so
adding runs never changes earlier ones. Inside a run the Gaussian bandwidth
is resolved once on the training split and shared by all folds and
candidates, which lets each fold reuse one eigendecomposition for the whole
grid.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .data import SplitPlan, TrainingSet, derive_seed, kfold_indices, make_rng, scaled_rmse, split
from .equivalence import EquivalenceReport, phi_from_spectrum, strong_equivalence_experiment
from .exceptions import InputError, NumericalError
from .kernel import KernelConfig, build_gram, cross_gram, eigendecompose
from .solvers import krr_dual, mrlsr_dual

DEFAULT_FRACTIONS = tuple(round(0.05 * k, 2) for k in range(2, 21))


def _logspace(lo, hi, num) -> Tuple[float, ...]:
    # rounded to 12 significant digits so grid points print cleanly (1e-05, not 9.99...e-06)
    return tuple(float(f"{v:.12g}") for v in np.logspace(lo, hi, num))


def _grid(values, name) -> Tuple[float, ...]:
    out = tuple(float(v) for v in values)
    if not out:
        raise InputError(f"{name} is empty")
    if any(not (math.isfinite(v) and v > 0) for v in out):
        raise InputError(f"{name} must hold positive finite values")
    if any(b <= a for a, b in zip(out, out[1:])):
        raise InputError(f"{name} must be strictly increasing")
    return out


@dataclass(frozen=True)
class CvProtocol:
    """Grids and resampling settings for model selection.

    ``m_stage_lambda`` is the fixed regularization used while selecting
    ``m``; ``runs`` random ``train_fraction`` resplits are averaged.
    """

    m_grid: Tuple[float, ...] = tuple(round(0.1 * k, 1) for k in range(1, 30))
    lambda_grid_mrlsr: Tuple[float, ...] = _logspace(-5, 2, 7)
    lambda_grid_krr: Tuple[float, ...] = _logspace(-7, 3, 25)
    folds: int = 10
    runs: int = 10
    train_fraction: float = 0.7
    m_stage_lambda: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "m_grid", _grid(self.m_grid, "m_grid"))
        object.__setattr__(self, "lambda_grid_mrlsr", _grid(self.lambda_grid_mrlsr, "lambda_grid_mrlsr"))
        object.__setattr__(self, "lambda_grid_krr", _grid(self.lambda_grid_krr, "lambda_grid_krr"))
        if int(self.folds) < 2:
            raise InputError("folds must be at least 2")
        if int(self.runs) < 1:
            raise InputError("runs must be at least 1")
        if not 0 < self.train_fraction < 1:
            raise InputError("train_fraction must lie in (0, 1)")
        if not self.m_stage_lambda > 0:
            raise InputError("m_stage_lambda must be positive")


# ------------------------------------------------------------------ results


def _jsonable(value):
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, np.integer):
        return int(value)
    return value


@dataclass(frozen=True)
class ExperimentResult:
    """Result rows plus plot-ready curve points.

    Each row has at least ``dataset, algo, m, lambda, metric, value, seed``;
    ``curves`` holds ``(x, y, series)`` triples.
    """

    rows: Tuple[dict, ...]
    curves: Tuple[Tuple[float, float, str], ...] = field(default_factory=tuple)
    summary: dict = field(default_factory=dict)

    def to_json(self) -> str:
        rows = [{k: _jsonable(v) for k, v in row.items()} for row in self.rows]
        return json.dumps(rows, sort_keys=True, indent=1) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "y", "series"])
        for x, y, s in self.curves:
            w.writerow([repr(float(x)), repr(float(y)), s])
        return buf.getvalue()

    def select(self, **criteria) -> List[dict]:
        return [r for r in self.rows if all(r.get(k) == v for k, v in criteria.items())]

    def value(self, **criteria) -> float:
        hits = self.select(**criteria)
        if len(hits) != 1:
            raise KeyError(f"{len(hits)} rows match {criteria}")
        return hits[0]["value"]

    @classmethod
    def from_equivalence(cls, report: EquivalenceReport, dataset: str, seed: int) -> "ExperimentResult":
        base = {"dataset": dataset, "m": report.m, "lambda": report.lam, "seed": seed}
        rows = [
            dict(base, algo="mrlsr", metric="c0", value=report.c0, split=1),
            dict(base, algo="krr", metric="lambda2", value=report.lambda2, split=1),
            dict(base, algo="gaussian", metric="bandwidth", value=report.bandwidth, split=None),
        ]
        curves = []
        for s in report.per_split:
            rows.append(dict(base, algo="mrlsr-krr", metric="diff_norm", value=s.diff_norm, split=s.split))
            rows.append(dict(base, algo="mrlsr", metric="rkhs_norm", value=s.mrlsr_norm, split=s.split))
            curves.append((float(s.split), s.diff_norm, "diff_norm"))
        return cls(tuple(rows), tuple(curves), report.to_dict())


# -------------------------------------------------------------- CV machinery

Candidate = Tuple[str, float, float]  # (algo, m, lambda)


class _Workspace:
    """One training split: its Gram matrix and its cross-validation folds."""

    def __init__(self, train: TrainingSet, cfg: KernelConfig, folds: int, seed: int):
        if len(train) < folds:
            raise InputError(f"{folds}-fold CV needs at least {folds} rows, got {len(train)}")
        self.train = train
        self.cfg = cfg.resolve(train.inputs)
        self.K = build_gram(self.cfg, train.inputs)
        self.folds = kfold_indices(len(train), folds, seed)

    def spectrum(self, idx=None):
        if idx is None:
            return eigendecompose(self.K, self.train.targets)
        return eigendecompose(self.K[np.ix_(idx, idx)], self.train.targets[idx])

    def cv_errors(self, candidates: Sequence[Candidate]) -> Dict[Candidate, float]:
        """Mean validation scaled RMSE per candidate; NaN if any fold failed."""
        totals = {c: 0.0 for c in candidates}
        y = self.train.targets
        for tr, va in self.folds:
            spectrum = self.spectrum(tr)
            Kv = self.K[np.ix_(va, tr)]
            for c in candidates:
                if math.isnan(totals[c]):
                    continue
                try:
                    alpha = _dual(spectrum, *c)
                except NumericalError:
                    totals[c] = math.nan
                    continue
                totals[c] += scaled_rmse(y[va], Kv @ alpha)
        return {c: t / len(self.folds) for c, t in totals.items()}

    def test_error(self, test: TrainingSet, alpha) -> float:
        return scaled_rmse(test.targets, cross_gram(self.cfg, test.inputs, self.train.inputs) @ alpha)


def _dual(spectrum, algo, m, lam):
    if algo == "krr":
        return krr_dual(spectrum, lam)
    if algo == "mrlsr":
        return mrlsr_dual(spectrum, lam, m).alpha
    raise InputError(f"cross-validation supports krr and mrlsr, not {algo!r}")


def select_candidate(errors: Dict[Candidate, float]) -> Tuple[Candidate, float]:
    """Lowest finite error; ties go to larger lambda, then smaller m."""
    finite = [(e, -c[2], c[1], c) for c, e in errors.items() if math.isfinite(e)]
    if not finite:
        raise NumericalError("every candidate failed to fit")
    best = min(finite, key=lambda t: t[:3])
    return best[3], best[0]


def _resplit(dataset: TrainingSet, protocol: CvProtocol, seed: int, run: int):
    frac = protocol.train_fraction
    train, test = split(dataset, SplitPlan((frac, 1.0 - frac), derive_seed(seed, run)))
    if len(train) < 2 or len(test) < 1:
        raise InputError(f"{len(dataset)} rows cannot be split {frac:g}/{1 - frac:g}")
    return train, test


def _row(dataset, algo, m, lam, metric, value, seed, **extra) -> dict:
    return dict(dataset=dataset, algo=algo, m=m, metric=metric, value=value, seed=seed, **extra,
                **{"lambda": lam})


def _mean_std(values) -> Tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    return float(arr.mean()), float(arr.std())


# ---------------------------------------------------------------- accuracy


def run_accuracy_experiment(dataset: TrainingSet, protocol: CvProtocol = CvProtocol(), seed: int = 0,
                            name: str = "dataset", cfg: KernelConfig = KernelConfig()) -> ExperimentResult:
    """Two-stage selection for M-RLSR against cross-validated KRR.

    Stage one fixes ``lam = protocol.m_stage_lambda`` and picks the ``m``
    with the lowest CV error averaged over all runs. Stage two selects
    ``lam`` per run by CV at that ``m``. KRR selects its ``lam`` per run on
    its own grid. Reported errors are test-split scaled RMSE over the runs.
    """
    runs = int(protocol.runs)
    m_cands = [("mrlsr", m, protocol.m_stage_lambda) for m in protocol.m_grid]
    krr_cands = [("krr", 2.0, lam) for lam in protocol.lambda_grid_krr]
    rows, curves = [], []

    m_errors = []
    krr_test = []
    for r in range(runs):
        train, test = _resplit(dataset, protocol, seed, r)
        ws = _Workspace(train, cfg, protocol.folds, derive_seed(seed, r, 1))
        errors = ws.cv_errors(m_cands + krr_cands)
        m_errors.append([errors[c] for c in m_cands])
        rows.extend(_row(name, "krr", 2.0, c[2], "cv_scaled_rmse", errors[c], seed, run=r) for c in krr_cands)
        (_, _, lam_k), _ = select_candidate({c: errors[c] for c in krr_cands})
        err = ws.test_error(test, krr_dual(ws.spectrum(), lam_k))
        krr_test.append(err)
        rows.append(_row(name, "krr", 2.0, lam_k, "test_scaled_rmse", err, seed, run=r))

    m_mean = np.mean(np.asarray(m_errors), axis=0)  # NaN where any run failed
    (_, m_best, _), _ = select_candidate({c: float(e) for c, e in zip(m_cands, m_mean)})
    for (_, m, lam), e in zip(m_cands, m_mean):
        rows.append(_row(name, "mrlsr", m, lam, "cv_scaled_rmse_m_stage", float(e), seed, run=None))
        if math.isfinite(e):
            curves.append((m, float(e), "mrlsr_cv_m_stage"))

    lam_cands = [("mrlsr", m_best, lam) for lam in protocol.lambda_grid_mrlsr]
    mrlsr_test = []
    for r in range(runs):
        train, test = _resplit(dataset, protocol, seed, r)
        ws = _Workspace(train, cfg, protocol.folds, derive_seed(seed, r, 1))
        errors = ws.cv_errors(lam_cands)
        rows.extend(_row(name, "mrlsr", m_best, c[2], "cv_scaled_rmse", errors[c], seed, run=r) for c in lam_cands)
        (_, _, lam_m), _ = select_candidate(errors)
        err = ws.test_error(test, mrlsr_dual(ws.spectrum(), lam_m, m_best).alpha)
        mrlsr_test.append(err)
        rows.append(_row(name, "mrlsr", m_best, lam_m, "test_scaled_rmse", err, seed, run=r))

    summary = {}
    for algo, m, errs in (("mrlsr", m_best, mrlsr_test), ("krr", 2.0, krr_test)):
        mean, std = _mean_std(errs)
        rows.append(_row(name, algo, m, None, "scaled_rmse_mean", mean, seed, run=None))
        rows.append(_row(name, algo, m, None, "scaled_rmse_std", std, seed, run=None))
        curves.extend((float(r), e, f"{algo}_test") for r, e in enumerate(errs))
        summary[algo] = {"m": m, "mean": mean, "std": std}
    return ExperimentResult(tuple(rows), tuple(curves), summary)


# ------------------------------------------------------------- equivalence


def select_lambda(train: TrainingSet, m: float, protocol: CvProtocol = CvProtocol(), seed: int = 0,
                  cfg: KernelConfig = KernelConfig()) -> float:
    """M-RLSR ``lam`` chosen by CV on ``train`` at fixed ``m``."""
    folds = min(int(protocol.folds), len(train))
    if folds < 2:
        raise InputError("lambda selection needs at least two rows")
    ws = _Workspace(train, cfg, folds, seed)
    (_, _, lam), _ = select_candidate(ws.cv_errors([("mrlsr", float(m), l) for l in protocol.lambda_grid_mrlsr]))
    return lam


def run_equivalence_experiment(dataset: TrainingSet, m: float, seed: int = 0, lam: Optional[float] = None,
                               protocol: CvProtocol = CvProtocol(),
                               cfg: KernelConfig = KernelConfig()) -> EquivalenceReport:
    """Four equal random splits; ``lam2`` matched on the first, compared on all.

    ``lam`` is chosen by CV on the first split when not given.
    """
    if len(dataset) < 4:
        raise InputError(f"need at least 4 rows for four splits, got {len(dataset)}")
    splits = split(dataset, SplitPlan.equal(4, derive_seed(seed, 0)))
    cfg = cfg.resolve(splits[0].inputs)
    if lam is None:
        lam = select_lambda(splits[0], m, protocol, derive_seed(seed, 1), cfg)
    return strong_equivalence_experiment(splits, lam, m, cfg)


# ------------------------------------------------------------- convergence


def run_convergence_experiment(dataset: TrainingSet, m: float, lam: Optional[float] = None,
                               fractions: Sequence[float] = DEFAULT_FRACTIONS, runs: int = 10,
                               seed: int = 0, protocol: CvProtocol = CvProtocol(), name: str = "dataset",
                               cfg: KernelConfig = KernelConfig()) -> ExperimentResult:
    """Test error against training-set size for M-RLSR and its matched KRR.

    Per run the data are resplit, ``lam`` is chosen by CV on the training
    split when not given, and ``lam2 = Phi(lam, train)`` is computed once on
    the full training split. Each fraction then trains both learners on a
    random subset of the training split of that relative size.
    """
    fractions = tuple(float(f) for f in fractions)
    if not fractions or any(not 0 < f <= 1 for f in fractions):
        raise InputError("fractions must lie in (0, 1]")
    runs = int(runs)
    if runs < 1:
        raise InputError("runs must be at least 1")
    m = float(m)
    errs = {algo: np.zeros((runs, len(fractions))) for algo in ("mrlsr", "krr")}
    rows = []
    for r in range(runs):
        train, test = _resplit(dataset, protocol, seed, r)
        n_train = len(train)
        sizes = [n_train if f == 1 else int(round(f * n_train)) for f in fractions]
        if min(sizes) < 2:
            raise InputError(f"smallest fraction leaves {min(sizes)} training rows; need 2")
        ws = _Workspace(train, cfg, min(int(protocol.folds), n_train), derive_seed(seed, r, 1))
        lam_r = float(lam) if lam is not None else select_candidate(
            ws.cv_errors([("mrlsr", m, l) for l in protocol.lambda_grid_mrlsr]))[0][2]
        lam2, _ = phi_from_spectrum(ws.spectrum(), lam_r, m)
        rows.append(_row(name, "mrlsr", m, lam_r, "lambda2", lam2, seed, run=r))
        Kt = cross_gram(ws.cfg, test.inputs, train.inputs)
        for j, size in enumerate(sizes):
            if size == n_train:
                idx = np.arange(n_train)
            else:
                idx = np.sort(make_rng(derive_seed(seed, r, 2, j)).choice(n_train, size=size, replace=False))
            spectrum = ws.spectrum(idx)
            Kc = Kt[:, idx]
            errs["mrlsr"][r, j] = scaled_rmse(test.targets, Kc @ mrlsr_dual(spectrum, lam_r, m).alpha)
            errs["krr"][r, j] = scaled_rmse(test.targets, Kc @ krr_dual(spectrum, lam2))

    curves = []
    summary = {"fractions": fractions}
    for algo, table in errs.items():
        means = table.mean(axis=0)
        stds = table.std(axis=0)
        summary[algo] = tuple(float(v) for v in means)
        for f, mu, sd in zip(fractions, means, stds):
            m_algo = m if algo == "mrlsr" else 2.0
            rows.append(_row(name, algo, m_algo, lam, "scaled_rmse_mean", float(mu), seed, fraction=f))
            rows.append(_row(name, algo, m_algo, lam, "scaled_rmse_std", float(sd), seed, fraction=f))
            curves.append((f, float(mu), algo))
    return ExperimentResult(tuple(rows), tuple(curves), summary)


def write_result(result: ExperimentResult, out_dir, stem: str) -> Tuple[str, str]:
    """Write ``<stem>.json`` and ``<stem>.csv`` into ``out_dir``."""
    os.makedirs(out_dir, exist_ok=True)
    jpath = os.path.join(out_dir, f"{stem}.json")
    cpath = os.path.join(out_dir, f"{stem}.csv")
    with open(jpath, "w", encoding="utf-8") as fh:
        fh.write(result.to_json())
    with open(cpath, "w", encoding="utf-8") as fh:
        fh.write(result.to_csv())
    return jpath, cpath
