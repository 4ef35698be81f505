"""Uniform stability: theoretical bounds and leave-one-out estimates.

For M-RLSR with ``m >= 2``, bounded targets ``|y| < C_y`` and
``sup k(x, x) < kappa^2``, the squared loss changes by at most::

    beta = C kappa (2^(m-2) C kappa / (lam n))^(1/(m-1)),
    C    = 2 (C_y + kappa (C_y^2 / lam)^(1/m))

when one training record is removed. Nothing is claimed for ``1 < m < 2``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence, Tuple

import numpy as np
from sklearn.base import clone

from .data import TrainingSet, derive_seed, make_rng
from .estimators import KernelRidgeRegression, ModifiedKernelRidge, MPowerRLSR
from .exceptions import InputError
from .kernel import resolve_bandwidth


def _positive(name, value) -> float:
    value = float(value)
    if not (math.isfinite(value) and value > 0):
        raise InputError(f"{name} must be positive, got {value}")
    return value


@dataclass(frozen=True)
class StabilityBoundInputs:
    m: float
    lam: float
    n: int
    c_y: float
    kappa: float = 1.0

    def __post_init__(self):
        for name in ("m", "lam", "n", "c_y", "kappa"):
            _positive(name, getattr(self, name))
        if self.m < 2:
            raise InputError(f"the stability bound holds for m >= 2 only (stability for m={self.m} is open)")


def lipschitz_c(c_y, kappa, lam, m) -> float:
    c_y = _positive("c_y", c_y)
    kappa = _positive("kappa", kappa)
    lam = _positive("lam", lam)
    m = _positive("m", m)
    return 2.0 * (c_y + kappa * (c_y ** 2 / lam) ** (1.0 / m))


def theoretical_beta(inputs: StabilityBoundInputs) -> float:
    C = lipschitz_c(inputs.c_y, inputs.kappa, inputs.lam, inputs.m)
    ck = C * inputs.kappa
    return ck * (2.0 ** (inputs.m - 2.0) * ck / (inputs.lam * inputs.n)) ** (1.0 / (inputs.m - 1.0))


def modified_krr_beta(c1, c2, lam, n) -> float:
    """Stability of the ``lam / n`` ridge learner; tends to ``c1 / lam``, not 0."""
    c1 = _positive("c1", c1)
    c2 = _positive("c2", c2)
    lam = _positive("lam", lam)
    n = _positive("n", n)
    return c1 * (1.0 + c2 / math.sqrt(lam * n)) / lam


def scale_targets(ts: TrainingSet, bound: float = 1.0) -> TrainingSet:
    """Affinely map targets onto ``[-bound, bound]``."""
    y = ts.targets
    lo, hi = float(y.min()), float(y.max())
    if hi == lo:
        return ts.with_targets(np.zeros_like(y))
    return ts.with_targets(np.clip(bound * (2.0 * (y - lo) / (hi - lo) - 1.0), -bound, bound))


def clip_targets(ts: TrainingSet, bound: float) -> TrainingSet:
    return ts.with_targets(np.clip(ts.targets, -bound, bound))


def _bound_exponent(estimator) -> Optional[float]:
    """Regularization exponent the bound applies to, or None."""
    if isinstance(estimator, MPowerRLSR):
        return float(estimator.m) if float(estimator.m) >= 2 else None
    if isinstance(estimator, KernelRidgeRegression):
        return 2.0
    return None


@dataclass(frozen=True)
class StabilityPoint:
    n: int
    lam: float
    m: Optional[float]
    algo: str
    c_y: float
    theoretical_beta: Optional[float]
    empirical_sup: float
    seed: int


@dataclass(frozen=True)
class StabilityReport:
    theoretical_beta: Optional[float]
    empirical_sup: float
    per_n: Tuple[StabilityPoint, ...] = field(default_factory=tuple)

    def rows(self) -> list:
        return [asdict(p) for p in self.per_n]


def _algo_id(estimator) -> str:
    if isinstance(estimator, MPowerRLSR):
        return "mrlsr"
    if isinstance(estimator, ModifiedKernelRidge):
        return "modkrr"
    if isinstance(estimator, KernelRidgeRegression):
        return "krr"
    return type(estimator).__name__


def empirical_stability(estimator, Z: TrainingSet, test_points: TrainingSet,
                        samples: Optional[int] = None, seed: int = 0,
                        kappa: float = 1.0, c_y: Optional[float] = None,
                        include_removed: bool = True) -> StabilityReport:
    """Largest change of the squared loss on ``test_points`` when one record is removed.

    With ``include_removed`` the removed record ``(x_i, y_i)`` is also an
    evaluation point, since uniform stability takes the sup over all pairs.

    ``estimator`` is an unfitted regressor from :mod:`mrlsr.estimators`.
    ``samples`` removal indices are drawn without replacement (all of them
    when None). An ``"auto"`` bandwidth is resolved on ``Z`` and reused for
    every ``Z^i`` so the hypothesis space stays fixed.
    """
    n = len(Z)
    if n < 2:
        raise InputError("empirical stability needs at least two training records")
    est = clone(estimator)
    if getattr(est, "bandwidth", None) == "auto":
        est.set_params(bandwidth=resolve_bandwidth(Z.inputs))
    base = clone(est).fit(Z.inputs, Z.targets)
    xt, yt = test_points.inputs, test_points.targets
    loss = (yt - base.predict(xt)) ** 2
    if samples is None or samples >= n:
        removals = np.arange(n)
    else:
        removals = np.sort(make_rng(seed).choice(n, size=samples, replace=False))
    worst = 0.0
    for i in removals:
        Zi = Z.without(int(i))
        fitted = clone(est).fit(Zi.inputs, Zi.targets)
        loss_i = (yt - fitted.predict(xt)) ** 2
        worst = max(worst, float(np.max(np.abs(loss - loss_i))))
        if include_removed:
            xi, yi = Z.inputs[i:i + 1], Z.targets[i]
            delta = (yi - base.predict(xi)[0]) ** 2 - (yi - fitted.predict(xi)[0]) ** 2
            worst = max(worst, abs(float(delta)))
    if c_y is None:
        c_y = float(max(np.max(np.abs(Z.targets)), np.max(np.abs(yt), initial=0.0)))
    m = _bound_exponent(est)
    beta = None
    lam = float(est.lam)
    if m is not None and c_y > 0:
        beta = theoretical_beta(StabilityBoundInputs(m, lam, n, c_y, kappa))
    point = StabilityPoint(n, lam, getattr(est, "m", None) if isinstance(est, MPowerRLSR) else None,
                           _algo_id(est), c_y, beta, worst, seed)
    return StabilityReport(beta, worst, (point,))


def stability_series(estimator, dataset: TrainingSet, n_series: Sequence[int],
                     samples: Optional[int] = None, test_size: int = 50, seed: int = 0,
                     kappa: float = 1.0, c_y: Optional[float] = None) -> StabilityReport:
    """:func:`empirical_stability` on disjoint random train/test draws for each ``n``.

    ``c_y`` defaults to ``max |y|`` over the whole dataset.
    """
    if c_y is None:
        c_y = float(np.max(np.abs(dataset.targets)))
    points = []
    for n in n_series:
        if n + test_size > len(dataset):
            raise InputError(f"n={n} plus {test_size} test points exceeds {len(dataset)} rows")
        rng = make_rng(derive_seed(seed, n))
        perm = rng.permutation(len(dataset))
        Z = dataset.subset(np.sort(perm[:n]))
        test = dataset.subset(np.sort(perm[n:n + test_size]))
        rep = empirical_stability(estimator, Z, test, samples, derive_seed(seed, n, 1), kappa, c_y)
        points.append(replace(rep.per_n[0], seed=seed))
    betas = [p.theoretical_beta for p in points]
    beta = None if any(b is None for b in betas) else max(betas)
    return StabilityReport(beta, max(p.empirical_sup for p in points), tuple(points))
