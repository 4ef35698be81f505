"""Kernel ridge regression, m-power regularized least squares and the
modified (lambda / n) ridge learner.

All three learners return a :class:`FittedModel` holding dual coefficients
``alpha`` so that ``f(x) = sum_i alpha_i k(x, x_i)``.

The m-power problem in coefficient space is::

    min_a (Y - K a)^T (Y - K a) + n * lam * (a^T K a)^(m/2)

In the eigenbasis ``K = Q diag(d) Q^T`` its stationary points are
``alpha' = 2 y' / (2 d + lam m n C)`` where ``C`` solves the scalar
fixed-point equation ``F(C) = 0`` (see :func:`f_of_c`).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import List, Mapping, Optional, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .data import TrainingSet
from .exceptions import DegenerateProblemError, InputError, NumericalError, RootFindingError
from .kernel import GramSpectrum, KernelConfig, build_gram, cross_gram, eigendecompose

MAX_ITER = 500
RESIDUAL_TOL = 1e-12
BISECT_WIDTH = 1e-14
NEWTON_STEPS = 10
SCAN_GRID = (1e-12, 1e6, 10_000)
MODEL_FORMAT = "mrlsr-model"
MODEL_VERSION = 1


def _check_lambda(lam) -> float:
    lam = float(lam)
    if not (np.isfinite(lam) and lam > 0):
        raise InputError(f"lambda must be positive, got {lam}")
    return lam


def _check_m(m) -> float:
    m = float(m)
    if not (np.isfinite(m) and m > 0):
        raise InputError(f"m must be positive, got {m}")
    return m


# ---------------------------------------------------------------- fitted models


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FittedModel:
    """``f = sum_i alpha_i k(., x_i)`` with a private copy of the inputs."""

    alpha: np.ndarray
    training_inputs: np.ndarray
    kernel: KernelConfig
    meta: Mapping = field(default_factory=dict)

    def __post_init__(self):
        alpha = _frozen(self.alpha).ravel()
        alpha.setflags(write=False)
        X = _frozen(self.training_inputs)
        if X.ndim == 1:
            X = X[:, None]
            X.setflags(write=False)
        if X.shape[0] != alpha.shape[0]:
            raise InputError(f"{alpha.shape[0]} coefficients for {X.shape[0]} training inputs")
        if not self.kernel.resolved:
            raise InputError("a fitted model needs a resolved kernel bandwidth")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "training_inputs", X)
        object.__setattr__(self, "meta", MappingProxyType(dict(self.meta)))

    def __reduce__(self):
        # MappingProxyType does not pickle; rebuild from a plain dict
        return (type(self), (self.alpha, self.training_inputs, self.kernel, dict(self.meta)))

    @property
    def n(self) -> int:
        return self.alpha.shape[0]

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        return cross_gram(self.kernel, X, self.training_inputs) @ self.alpha

    def gram(self) -> np.ndarray:
        return build_gram(self.kernel, self.training_inputs)

    def rkhs_norm(self) -> float:
        a = self.alpha
        return math.sqrt(max(float(a @ self.gram() @ a), 0.0))

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "kernel": self.kernel.to_dict(),
            "training_inputs": self.training_inputs.tolist(),
            "alpha": self.alpha.tolist(),
            "meta": dict(self.meta),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FittedModel":
        if data.get("format") != MODEL_FORMAT:
            raise InputError("not a model file")
        if data.get("version") != MODEL_VERSION:
            raise InputError(f"unsupported model version {data.get('version')}")
        return cls(
            np.asarray(data["alpha"], dtype=np.float64),
            np.asarray(data["training_inputs"], dtype=np.float64),
            KernelConfig.from_dict(data["kernel"]),
            data.get("meta", {}),
        )


def save_model(model: FittedModel, path) -> None:
    Path(path).write_text(json.dumps(model.to_dict(), sort_keys=True) + "\n")


def load_model(path) -> FittedModel:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid model JSON ({exc})") from None
    return FittedModel.from_dict(data)


def predict(model: FittedModel, x):
    """Evaluate the model at one input vector (returns float) or a matrix of rows."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim <= 1:
        if x.size != model.training_inputs.shape[1]:
            raise InputError(f"expected {model.training_inputs.shape[1]} features, got {x.size}")
        return float(model.predict(x.reshape(1, -1))[0])
    return model.predict(x)


# --------------------------------------------------------- fixed-point function


class _FixedPoint:
    """``F(C) = (sum_i 4 d_i y'_i^2 / (2 d_i + a C)^2)^(m/2 - 1) - C`` with ``a = lam m n``.

    Zero eigenvalues drop out of the sum.
    """

    def __init__(self, spectrum: GramSpectrum, lam: float, m: float, n: int):
        d = spectrum.eigenvalues
        yp = spectrum.rotated_targets
        keep = d > 0
        self.two_d = 2.0 * d[keep]
        self.weights = 4.0 * d[keep] * yp[keep] ** 2
        self.a = lam * m * n
        self.power = m / 2.0 - 1.0
        self.m = m

    def sum_at(self, c):
        return float(np.sum(self.weights / (self.two_d + self.a * c) ** 2))

    def _power_of(self, s):
        if s == 0.0:
            if self.power < 0:
                raise DegenerateProblemError(
                    "F is undefined: every target component lies in the null space of K and m < 2")
            return 1.0 if self.power == 0 else 0.0
        return s ** self.power

    def __call__(self, c: float) -> float:
        return self._power_of(self.sum_at(c)) - c

    def derivative(self, c: float) -> float:
        if self.power == 0:
            return -1.0
        denom = self.two_d + self.a * c
        s = float(np.sum(self.weights / denom ** 2))
        ds = float(np.sum(-2.0 * self.a * self.weights / denom ** 3))
        if s == 0.0:
            return -1.0
        return self.power * s ** (self.power - 1.0) * ds - 1.0

    def values(self, cs: np.ndarray, chunk: int = 512) -> np.ndarray:
        out = np.empty(cs.shape[0])
        for start in range(0, cs.shape[0], chunk):
            block = cs[start:start + chunk]
            denom = self.two_d[None, :] + self.a * block[:, None]
            s = np.sum(self.weights[None, :] / denom ** 2, axis=1)
            out[start:start + chunk] = s ** self.power - block
        return out


def f_of_c(C, spectrum: GramSpectrum, lam, m, n: Optional[int] = None) -> float:
    lam = _check_lambda(lam)
    m = _check_m(m)
    if C < 0:
        raise InputError(f"C must be nonnegative, got {C}")
    return _FixedPoint(spectrum, lam, m, spectrum.n if n is None else n)(float(C))


@dataclass(frozen=True)
class RootFindReport:
    c0: float
    iterations: int
    residual: float
    bracket: Tuple[float, float]


def _refine(fp: _FixedPoint, lo: float, hi: float, flo: float, fhi: float, iterations: int) -> RootFindReport:
    """Bisect a sign-change bracket down to relative width 1e-14, then Newton-polish."""
    while hi - lo > BISECT_WIDTH * max(1.0, hi):
        if iterations >= MAX_ITER:
            raise RootFindingError("root finding exceeded the iteration cap", (lo, hi), iterations)
        mid = 0.5 * (lo + hi)
        fmid = fp(mid)
        iterations += 1
        if fmid == 0.0:
            return RootFindReport(mid, iterations, 0.0, (lo, hi))
        if (fmid > 0) == (flo > 0):
            lo, flo = mid, fmid
        else:
            hi, fhi = mid, fmid
    c, fc = (lo, flo) if abs(flo) <= abs(fhi) else (hi, fhi)
    mid = 0.5 * (lo + hi)
    fmid = fp(mid)
    if abs(fmid) < abs(fc):
        c, fc = mid, fmid
    for _ in range(NEWTON_STEPS):
        if abs(fc) <= 1e-3 * RESIDUAL_TOL * max(1.0, c) or iterations >= MAX_ITER:
            break
        slope = fp.derivative(c)
        if slope == 0.0 or not np.isfinite(slope):
            break
        step = c - fc / slope
        if not lo <= step <= hi:
            break
        fstep = fp(step)
        iterations += 1
        if abs(fstep) >= abs(fc):
            break
        c, fc = step, fstep
    residual = abs(fc)
    if residual > RESIDUAL_TOL * max(1.0, c):
        raise RootFindingError(f"root residual {residual:.3e} above tolerance at C={c:.6g}", (lo, hi), iterations)
    return RootFindReport(c, iterations, residual, (lo, hi))


def find_root(spectrum: GramSpectrum, lam, m, n: Optional[int] = None) -> RootFindReport:
    """Unique positive root of ``F`` for ``m > 1``.

    Bracket ``[0, hi]`` with ``hi`` doubling from 1 until ``F(hi) < 0``,
    bisect, then polish with Newton steps on the analytic derivative.
    """
    lam = _check_lambda(lam)
    m = _check_m(m)
    if m <= 1:
        raise InputError("find_root requires m > 1; use find_roots_scan for m <= 1")
    fp = _FixedPoint(spectrum, lam, m, spectrum.n if n is None else n)
    if fp.sum_at(0.0) == 0.0:
        raise DegenerateProblemError("targets have no component in the range of K")
    lo, flo = 0.0, fp(0.0)
    if not flo > 0:
        raise NumericalError(f"F(0) = {flo} is not positive")
    hi, iterations = 1.0, 0
    fhi = fp(hi)
    iterations += 1
    while fhi > 0:
        if iterations >= MAX_ITER:
            raise RootFindingError("could not bracket the root", (lo, hi), iterations)
        lo, flo = hi, fhi
        hi *= 2.0
        fhi = fp(hi)
        iterations += 1
    if fhi == 0.0:
        return RootFindReport(hi, iterations, 0.0, (lo, hi))
    return _refine(fp, lo, hi, flo, fhi, iterations)


def find_roots_scan(spectrum: GramSpectrum, lam, m, n: Optional[int] = None,
                    grid: Tuple[float, float, int] = SCAN_GRID) -> List[RootFindReport]:
    """All sign changes of ``F`` on a log grid, each refined by bisection.

    Used for ``m <= 1`` where the fixed-point equation can have several roots.
    """
    lam = _check_lambda(lam)
    m = _check_m(m)
    fp = _FixedPoint(spectrum, lam, m, spectrum.n if n is None else n)
    if fp.sum_at(0.0) == 0.0:
        raise DegenerateProblemError("targets have no component in the range of K")
    cs = np.logspace(math.log10(grid[0]), math.log10(grid[1]), int(grid[2]))
    values = fp.values(cs)
    signs = np.sign(values)
    reports = []
    for i in range(cs.shape[0]):
        if signs[i] == 0:
            reports.append(RootFindReport(float(cs[i]), 0, 0.0, (float(cs[i]), float(cs[i]))))
        elif i + 1 < cs.shape[0] and signs[i] * signs[i + 1] < 0:
            reports.append(_refine(fp, float(cs[i]), float(cs[i + 1]), float(values[i]), float(values[i + 1]), 0))
    return reports


# ------------------------------------------------------------- spectral solvers


def mrlsr_objective(spectrum: GramSpectrum, alpha_rot, lam, m, n: Optional[int] = None) -> float:
    """Coefficient-space objective evaluated in the eigenbasis."""
    n = spectrum.n if n is None else n
    d = spectrum.eigenvalues
    a = np.asarray(alpha_rot)
    loss = float(np.sum((spectrum.rotated_targets - d * a) ** 2))
    norm_sq = max(float(np.dot(d, a * a)), 0.0)
    return loss + n * lam * norm_sq ** (m / 2.0)


def objective(K, Y, alpha, lam, m) -> float:
    """``(Y - K a)^T (Y - K a) + n lam (a^T K a)^(m/2)`` evaluated directly."""
    K = np.asarray(K, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64).ravel()
    a = np.asarray(alpha, dtype=np.float64).ravel()
    r = Y - K @ a
    return float(r @ r) + Y.shape[0] * lam * max(float(a @ K @ a), 0.0) ** (m / 2.0)


@dataclass(frozen=True)
class MrlsrSolution:
    alpha: np.ndarray
    c0: Optional[float]
    report: Optional[RootFindReport]
    root_scan: bool = False
    n_roots: int = 1


def krr_dual(spectrum: GramSpectrum, lam, n: Optional[int] = None) -> np.ndarray:
    """KRR coefficients ``Q (y' / (d + n lam))``."""
    lam = _check_lambda(lam)
    n = spectrum.n if n is None else n
    Q = spectrum.rotation
    return Q @ (spectrum.rotated_targets / (spectrum.eigenvalues + n * lam))


def mrlsr_dual(spectrum: GramSpectrum, lam, m, n: Optional[int] = None) -> MrlsrSolution:
    lam = _check_lambda(lam)
    m = _check_m(m)
    n = spectrum.n if n is None else n
    yp = spectrum.rotated_targets
    d = spectrum.eigenvalues
    if not np.any(yp[d > 0]):
        # zero targets, or targets orthogonal to range(K): the zero function is optimal
        return MrlsrSolution(np.zeros(spectrum.n), None, None, root_scan=m <= 1, n_roots=0)
    Q = spectrum.rotation
    a = lam * m * n

    def rotated(c0):
        return 2.0 * yp / (2.0 * d + a * c0)

    if m > 1:
        report = find_root(spectrum, lam, m, n)
        return MrlsrSolution(Q @ rotated(report.c0), report.c0, report)
    reports = find_roots_scan(spectrum, lam, m, n)
    if not reports:
        raise RootFindingError(f"no root of F on the scan grid for m={m}, lambda={lam}")
    scored = [(mrlsr_objective(spectrum, rotated(r.c0), lam, m, n), i) for i, r in enumerate(reports)]
    best = reports[min(scored)[1]]
    return MrlsrSolution(Q @ rotated(best.c0), best.c0, best, root_scan=True, n_roots=len(reports))


# --------------------------------------------------------------- public fitters


def _prepare(Z: TrainingSet, cfg: KernelConfig):
    if len(Z) < 1:
        raise InputError("training set is empty")
    cfg = cfg.resolve(Z.inputs)
    return cfg, build_gram(cfg, Z.inputs)


def _ridge_solve(K: np.ndarray, Y: np.ndarray, shift: float) -> np.ndarray:
    A = K + shift * np.eye(K.shape[0])
    try:
        return cho_solve(cho_factor(A, lower=True), Y)
    except LinAlgError as exc:
        raise NumericalError(f"ridge system is not positive definite: {exc}") from exc


def krr_fit(lam, Z: TrainingSet, cfg: KernelConfig = KernelConfig()) -> FittedModel:
    """Solve ``(K + n lam I) alpha = Y`` by Cholesky factorization."""
    lam = _check_lambda(lam)
    cfg, K = _prepare(Z, cfg)
    alpha = _ridge_solve(K, Z.targets, len(Z) * lam)
    return FittedModel(alpha, Z.inputs, cfg, {"algo": "krr", "m": 2.0, "lambda": lam, "c0": None})


def modified_krr_fit(lam, Z: TrainingSet, cfg: KernelConfig = KernelConfig()) -> FittedModel:
    """KRR with regularizer ``lam / n``: ``(K + lam I) alpha = Y``."""
    lam = _check_lambda(lam)
    cfg, K = _prepare(Z, cfg)
    alpha = _ridge_solve(K, Z.targets, lam)
    return FittedModel(alpha, Z.inputs, cfg, {"algo": "modkrr", "m": 2.0, "lambda": lam, "c0": None})


def mrlsr_fit(lam, m, Z: TrainingSet, cfg: KernelConfig = KernelConfig()) -> FittedModel:
    lam = _check_lambda(lam)
    m = _check_m(m)
    cfg, K = _prepare(Z, cfg)
    sol = mrlsr_dual(eigendecompose(K, Z.targets), lam, m)
    meta = {"algo": "mrlsr", "m": m, "lambda": lam, "c0": sol.c0,
            "root_scan": sol.root_scan, "n_roots": sol.n_roots}
    if sol.report is not None:
        meta["root_iterations"] = sol.report.iterations
        meta["root_residual"] = sol.report.residual
    return FittedModel(sol.alpha, Z.inputs, cfg, meta)


def fit(algo: str, lam, Z: TrainingSet, m=2.0, cfg: KernelConfig = KernelConfig()) -> FittedModel:
    """Dispatch on a learner id: ``krr``, ``mrlsr`` or ``modkrr``."""
    if algo == "krr":
        return krr_fit(lam, Z, cfg)
    if algo == "mrlsr":
        return mrlsr_fit(lam, m, Z, cfg)
    if algo == "modkrr":
        return modified_krr_fit(lam, Z, cfg)
    raise InputError(f"unknown algorithm {algo!r}")
