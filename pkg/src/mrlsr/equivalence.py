"""Weak equivalence between M-RLSR and KRR.

On a fixed training set ``Z``, M-RLSR with ``(lam, m)`` returns exactly the
KRR solution for ``lam2 = Phi(lam, Z) = (m lam / 2) C0(Z, m, lam)``. Because
``Phi`` depends on ``Z`` the two learners are not strongly equivalent: the
``lam2`` matched on one split gives different models on other splits.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .data import TrainingSet, derive_seed, make_rng, rmse
from .exceptions import InputError
from .kernel import GramSpectrum, KernelConfig, build_gram, cross_gram, eigendecompose
from .solvers import _check_lambda, _check_m, _ridge_solve, krr_dual, mrlsr_dual


def phi_from_spectrum(spectrum: GramSpectrum, lam: float, m: float) -> Tuple[float, float]:
    """``(lam2, c0)`` for an already diagonalized Gram matrix (any ``m > 0``)."""
    sol = mrlsr_dual(spectrum, lam, m)
    if sol.c0 is None:
        raise InputError("Phi is undefined for targets with no component in the range of K")
    return m * lam / 2.0 * sol.c0, sol.c0


def _spectrum(Z: TrainingSet, cfg: KernelConfig):
    cfg = cfg.resolve(Z.inputs)
    K = build_gram(cfg, Z.inputs)
    return cfg, K, eigendecompose(K, Z.targets)


def phi_map(lam, m, Z: TrainingSet, cfg: KernelConfig = KernelConfig(),
            allow_nonconvex: bool = False) -> Tuple[float, float]:
    """KRR regularization matching M-RLSR(``lam``, ``m``) on ``Z``.

    Returns ``(lam2, c0)``. The mapping is only guaranteed to be a
    bijection for ``m > 1``; pass ``allow_nonconvex=True`` to apply the
    same formula to the best stationary point when ``m <= 1``.
    """
    lam = _check_lambda(lam)
    m = _check_m(m)
    if m <= 1 and not allow_nonconvex:
        raise InputError("phi_map requires m > 1")
    _, _, spectrum = _spectrum(Z, cfg)
    return phi_from_spectrum(spectrum, lam, m)


def _diff_norm(K: np.ndarray, a1: np.ndarray, a2: np.ndarray) -> float:
    delta = a1 - a2
    return math.sqrt(max(float(delta @ K @ delta), 0.0))


def _paired_models(K, spectrum, Y, lam, m, lam2):
    a1 = mrlsr_dual(spectrum, lam, m).alpha
    a2 = _ridge_solve(K, Y, Y.shape[0] * lam2)
    return a1, a2


def verify_weak_equivalence(lam, m, Z: TrainingSet, cfg: KernelConfig = KernelConfig()) -> float:
    """``||f_MRLSR(lam) - f_KRR(Phi(lam, Z))||_H`` on ``Z``; zero up to rounding."""
    lam = _check_lambda(lam)
    m = _check_m(m)
    if m <= 1:
        raise InputError("weak equivalence is established for m > 1 only")
    _, K, spectrum = _spectrum(Z, cfg)
    lam2, _ = phi_from_spectrum(spectrum, lam, m)
    a1, a2 = _paired_models(K, spectrum, Z.targets, lam, m, lam2)
    return _diff_norm(K, a1, a2)


@dataclass(frozen=True)
class SplitDiff:
    split: int
    n: int
    diff_norm: float
    mrlsr_norm: float


@dataclass(frozen=True)
class EquivalenceReport:
    m: float
    lam: float
    c0: float
    lambda2: float
    bandwidth: float
    per_split: Tuple[SplitDiff, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["lambda"] = out.pop("lam")
        out["per_split"] = [asdict(s) for s in self.per_split]
        return out


def strong_equivalence_experiment(splits: Sequence[TrainingSet], lam, m,
                                  cfg: KernelConfig = KernelConfig()) -> EquivalenceReport:
    """Match ``lam2`` on the first split, then compare both learners on every split.

    Both models are refit on each split and compared in that split's RKHS
    span. The kernel bandwidth is resolved once on the first split so all
    splits share one RKHS.
    """
    lam = _check_lambda(lam)
    m = _check_m(m)
    if len(splits) < 2:
        raise InputError("need at least two splits")
    cfg = cfg.resolve(splits[0].inputs)
    lam2 = c0 = None
    rows = []
    for j, Z in enumerate(splits):
        _, K, spectrum = _spectrum(Z, cfg)
        if j == 0:
            lam2, c0 = phi_from_spectrum(spectrum, lam, m)
        a1, a2 = _paired_models(K, spectrum, Z.targets, lam, m, lam2)
        rows.append(SplitDiff(j + 1, len(Z), _diff_norm(K, a1, a2),
                              math.sqrt(max(float(a1 @ K @ a1), 0.0))))
    return EquivalenceReport(m, lam, c0, lam2, cfg.bandwidth, tuple(rows))


@dataclass(frozen=True)
class RegPathResult:
    lambdas: Tuple[float, ...]
    lambdas_krr: Tuple[float, ...]
    errors_mrlsr: Tuple[float, ...]
    errors_krr: Tuple[float, ...]
    max_coef_diff: float

    @property
    def min_err_mrlsr(self) -> float:
        return min(self.errors_mrlsr)

    @property
    def min_err_krr(self) -> float:
        return min(self.errors_krr)

    @property
    def argmin_pair(self) -> Tuple[float, float]:
        i = int(np.argmin(self.errors_mrlsr))
        return self.lambdas[i], self.lambdas_krr[i]


def regpath_compare(lambda_grid: Sequence[float], m, Z_train: TrainingSet, Z_test: TrainingSet,
                    cfg: KernelConfig = KernelConfig(),
                    metric: Callable[[np.ndarray, np.ndarray], float] = rmse) -> RegPathResult:
    """Test errors along the M-RLSR path and along its ``Phi``-image for KRR.

    Each KRR grid point is ``Phi(lam, Z_train)`` for the matching M-RLSR
    point, so the two paths are the same models and their minima coincide.
    """
    if len(lambda_grid) == 0:
        raise InputError("empty lambda grid")
    m = _check_m(m)
    cfg, K, spectrum = _spectrum(Z_train, cfg)
    Kt = cross_gram(cfg, Z_test.inputs, Z_train.inputs)
    lams2, e1, e2 = [], [], []
    worst = 0.0
    for lam in lambda_grid:
        lam = _check_lambda(lam)
        lam2, _ = phi_from_spectrum(spectrum, lam, m)
        a1 = mrlsr_dual(spectrum, lam, m).alpha
        a2 = krr_dual(spectrum, lam2)
        scale = max(1.0, float(np.max(np.abs(a1))))
        worst = max(worst, float(np.max(np.abs(a1 - a2))) / scale)
        lams2.append(lam2)
        e1.append(metric(Z_test.targets, Kt @ a1))
        e2.append(metric(Z_test.targets, Kt @ a2))
    return RegPathResult(tuple(float(x) for x in lambda_grid), tuple(lams2), tuple(e1), tuple(e2), worst)


@dataclass(frozen=True)
class PhiSensitivity:
    n_values: Tuple[int, ...]
    deltas: Tuple[float, ...]
    phis: Tuple[float, ...]


def probe_phi_sensitivity(lam, m, dataset: TrainingSet, n_values: Sequence[int],
                          samples_per_n: int = 10, seed: int = 0,
                          cfg: KernelConfig = KernelConfig()) -> PhiSensitivity:
    """Largest ``|Phi(lam, Z) - Phi(lam, Z^i)|`` over sampled removals, per size ``n``.

    For each ``n`` a size-``n`` subset ``Z`` is drawn; the bandwidth is
    resolved on ``Z`` and kept fixed for its leave-one-out variants.
    """
    lam = _check_lambda(lam)
    m = _check_m(m)
    if m <= 1:
        raise InputError("Phi sensitivity is probed for m > 1 only")
    deltas, phis = [], []
    for n in n_values:
        if n > len(dataset) or n < 2:
            raise InputError(f"subset size {n} not in [2, {len(dataset)}]")
        rng = make_rng(derive_seed(seed, n))
        Z = dataset.subset(np.sort(rng.choice(len(dataset), size=n, replace=False)))
        local = cfg.resolve(Z.inputs)
        phi, _ = phi_from_spectrum(_spectrum(Z, local)[2], lam, m)
        worst = 0.0
        for i in rng.choice(n, size=min(samples_per_n, n), replace=False):
            phi_i, _ = phi_from_spectrum(_spectrum(Z.without(int(i)), local)[2], lam, m)
            worst = max(worst, abs(phi - phi_i))
        deltas.append(worst)
        phis.append(phi)
    return PhiSensitivity(tuple(int(n) for n in n_values), tuple(deltas), tuple(phis))
