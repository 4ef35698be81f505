"""scikit-learn compatible regressors.

The estimators are thin wrappers over :mod:`mrlsr.solvers`; they add input
validation, ``get_params``/``set_params`` and cloning so they drop into
pipelines, ``GridSearchCV`` and friends::

    >>> from mrlsr import MPowerRLSR
    >>> est = MPowerRLSR(lam=1e-2, m=1.5).fit(X, y)      # doctest: +SKIP
    >>> est.predict(X[:3])                                # doctest: +SKIP
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted, validate_data

from .data import TrainingSet
from .exceptions import InputError
from .kernel import KernelConfig
from .solvers import FittedModel, krr_fit, modified_krr_fit, mrlsr_fit


class _KernelRegressor(RegressorMixin, BaseEstimator):
    """Shared fit/predict plumbing; subclasses implement ``_fit_model``."""

    def _kernel_config(self):
        return KernelConfig("gaussian", self.bandwidth)

    def fit(self, X, y):
        X, y = validate_data(self, X, y, y_numeric=True, dtype=np.float64)
        model = self._fit_model(TrainingSet(X, y), self._kernel_config())
        self.model_ = model
        self.dual_coef_ = np.array(model.alpha)
        self.X_fit_ = np.array(model.training_inputs)
        self.bandwidth_ = model.kernel.bandwidth
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        X = validate_data(self, X, reset=False, dtype=np.float64)
        return self.model_.predict(X)

    def rkhs_norm(self) -> float:
        check_is_fitted(self, "model_")
        return self.model_.rkhs_norm()

    @classmethod
    def from_model(cls, model: FittedModel, **params):
        """Wrap an already fitted model (e.g. one loaded from disk)."""
        est = cls(**params)
        est.model_ = model
        est.dual_coef_ = np.array(model.alpha)
        est.X_fit_ = np.array(model.training_inputs)
        est.bandwidth_ = model.kernel.bandwidth
        est.n_features_in_ = model.training_inputs.shape[1]
        return est


class KernelRidgeRegression(_KernelRegressor):
    """Kernel ridge regression with a Gaussian kernel.

    Minimizes ``(1/n) sum (y_i - f(x_i))^2 + lam ||f||_H^2``.

    Parameters
    ----------
    lam : float
        Regularization strength, > 0. The loss is averaged over ``n``, so
        ``lam`` acts like ``n * lam`` in an unnormalized ridge.
    bandwidth : float or "auto"
        Gaussian bandwidth ``mu`` in ``exp(-||x - x'||^2 / mu)``; "auto" uses
        the mean pairwise squared distance of the training inputs.
    """

    def __init__(self, lam=1e-2, bandwidth="auto"):
        self.lam = lam
        self.bandwidth = bandwidth

    def _fit_model(self, Z, cfg):
        return krr_fit(self.lam, Z, cfg)


class ModifiedKernelRidge(_KernelRegressor):
    """Ridge learner whose regularizer is ``lam / n`` instead of ``lam``.

    Same solutions as :class:`KernelRidgeRegression` under ``lam -> lam * n``,
    but its uniform stability does not vanish with ``n``.
    """

    def __init__(self, lam=1.0, bandwidth="auto"):
        self.lam = lam
        self.bandwidth = bandwidth

    def _fit_model(self, Z, cfg):
        return modified_krr_fit(self.lam, Z, cfg)


class MPowerRLSR(_KernelRegressor):
    """Least squares with the RKHS norm raised to the power ``m``.

    Minimizes ``(1/n) sum (y_i - f(x_i))^2 + lam ||f||_H^m``. For ``m = 2``
    this is kernel ridge regression. For ``m <= 1`` the problem is not
    convex; the stationary point with the lowest objective is returned and
    ``root_scan_`` is set.

    Attributes
    ----------
    c0_ : float or None
        Root of the scalar fixed-point equation; None for zero targets.
    lambda_krr_ : float or None
        The KRR regularization giving the identical solution on the
        training set, ``m * lam * c0 / 2``.
    """

    def __init__(self, lam=1e-2, m=2.0, bandwidth="auto"):
        self.lam = lam
        self.m = m
        self.bandwidth = bandwidth

    def _fit_model(self, Z, cfg):
        model = mrlsr_fit(self.lam, self.m, Z, cfg)
        self.c0_ = model.meta["c0"]
        self.root_scan_ = model.meta["root_scan"]
        self.lambda_krr_ = None if self.c0_ is None else float(self.m) * float(self.lam) * self.c0_ / 2.0
        return model


ESTIMATORS = {
    "krr": KernelRidgeRegression,
    "mrlsr": MPowerRLSR,
    "modkrr": ModifiedKernelRidge,
}


def make_estimator(algo: str, lam: float, m: float = 2.0, bandwidth="auto"):
    if algo not in ESTIMATORS:
        raise InputError(f"unknown algorithm {algo!r}; choose from {sorted(ESTIMATORS)}")
    if algo == "mrlsr":
        return MPowerRLSR(lam=lam, m=m, bandwidth=bandwidth)
    return ESTIMATORS[algo](lam=lam, bandwidth=bandwidth)
