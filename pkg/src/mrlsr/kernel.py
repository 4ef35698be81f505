"""Gaussian kernel, Gram matrices and their spectra."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.spatial.distance import cdist, pdist, squareform

from .exceptions import InputError, NonPSDError, NumericalError, ZeroBandwidthError

PSD_TOL = 1e-10
KERNEL_FAMILIES = ("gaussian",)


@dataclass(frozen=True)
class KernelConfig:
    """Kernel family plus bandwidth ``mu`` in ``exp(-||x - x'||^2 / mu)``.

    ``bandwidth="auto"`` is resolved against training inputs by
    :func:`resolve_bandwidth` before any kernel evaluation.
    """

    family: str = "gaussian"
    bandwidth: Union[float, str] = "auto"

    def __post_init__(self):
        if self.family not in KERNEL_FAMILIES:
            raise InputError(f"unknown kernel family {self.family!r}")
        if isinstance(self.bandwidth, str):
            if self.bandwidth != "auto":
                raise InputError(f"bandwidth must be a positive float or 'auto', got {self.bandwidth!r}")
        else:
            mu = float(self.bandwidth)
            if not np.isfinite(mu) or mu <= 0:
                raise InputError(f"bandwidth must be positive, got {self.bandwidth!r}")
            object.__setattr__(self, "bandwidth", mu)

    @property
    def resolved(self) -> bool:
        return not isinstance(self.bandwidth, str)

    def resolve(self, inputs) -> "KernelConfig":
        """Return a config with a numeric bandwidth (no-op if already numeric)."""
        if self.resolved:
            return self
        return KernelConfig(self.family, resolve_bandwidth(inputs))

    def to_dict(self) -> dict:
        return {"family": self.family, "bandwidth": self.bandwidth}

    @classmethod
    def from_dict(cls, data: dict) -> "KernelConfig":
        return cls(data.get("family", "gaussian"), data.get("bandwidth", "auto"))


def _as_2d(inputs) -> np.ndarray:
    X = np.asarray(inputs, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise InputError(f"inputs must be a 2-D array, got shape {X.shape}")
    return X


def _require_resolved(cfg: KernelConfig) -> float:
    if not cfg.resolved:
        raise InputError("kernel bandwidth is unresolved ('auto'); call cfg.resolve(inputs) first")
    return cfg.bandwidth


def kernel_eval(cfg: KernelConfig, x1, x2) -> float:
    mu = _require_resolved(cfg)
    a = np.atleast_1d(np.asarray(x1, dtype=np.float64))
    b = np.atleast_1d(np.asarray(x2, dtype=np.float64))
    if a.shape != b.shape:
        raise InputError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.exp(-np.sum((a - b) ** 2) / mu))


def resolve_bandwidth(inputs) -> float:
    """Mean of all n^2 pairwise squared distances, diagonal included.

    Uses the identity ``(1/n^2) sum_ij ||xi - xj||^2 = 2 * sum_k var(X[:, k])``.
    """
    X = _as_2d(inputs)
    if X.shape[0] == 0:
        raise InputError("cannot resolve bandwidth from zero inputs")
    if X.shape[0] == 1:
        raise ZeroBandwidthError("automatic bandwidth needs two distinct inputs, got n_samples=1")
    # exact check first; the variance formula can leave ulp-sized residue
    if np.all(X == X[0]):
        raise ZeroBandwidthError("all inputs are identical; automatic bandwidth is zero")
    mu = 2.0 * float(np.sum(np.var(X, axis=0)))
    if not mu > 0:
        raise ZeroBandwidthError("automatic bandwidth is not positive")
    return mu


def build_gram(cfg: KernelConfig, inputs) -> np.ndarray:
    """Symmetric Gram matrix ``K_ij = k(x_i, x_j)``.

    An ``"auto"`` bandwidth is resolved on ``inputs``.
    """
    X = _as_2d(inputs)
    if X.shape[0] == 0:
        raise InputError("cannot build a Gram matrix from zero inputs")
    mu = _require_resolved(cfg.resolve(X))
    if X.shape[0] == 1:
        return np.ones((1, 1))
    K = np.exp(-squareform(pdist(X, "sqeuclidean")) / mu)
    np.fill_diagonal(K, 1.0)
    return K


def cross_gram(cfg: KernelConfig, A, B) -> np.ndarray:
    """Rectangular kernel matrix ``k(a_i, b_j)``; bandwidth must be resolved."""
    mu = _require_resolved(cfg)
    A = _as_2d(A)
    B = _as_2d(B)
    if A.shape[1] != B.shape[1]:
        raise InputError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]} features")
    return np.exp(-cdist(A, B, "sqeuclidean") / mu)


@dataclass(frozen=True)
class GramSpectrum:
    """``K = Q diag(d) Q^T`` with eigenvalues in descending order and ``y' = Q^T Y``."""

    rotation: np.ndarray
    eigenvalues: np.ndarray
    rotated_targets: np.ndarray

    @property
    def n(self) -> int:
        return self.eigenvalues.shape[0]

    def with_targets(self, targets) -> "GramSpectrum":
        """Same eigenbasis, different target vector."""
        Y = np.asarray(targets, dtype=np.float64).ravel()
        if Y.shape[0] != self.n:
            raise InputError(f"targets length {Y.shape[0]} does not match Gram size {self.n}")
        return GramSpectrum(self.rotation, self.eigenvalues, _frozen(self.rotation.T @ Y))


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


def eigendecompose(K, Y) -> GramSpectrum:
    K = np.asarray(K, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64).ravel()
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise InputError(f"Gram matrix must be square, got shape {K.shape}")
    if Y.shape[0] != K.shape[0]:
        raise InputError(f"targets length {Y.shape[0]} does not match Gram size {K.shape[0]}")
    scale = max(1.0, float(np.max(np.abs(K)))) if K.size else 1.0
    if not np.allclose(K, K.T, rtol=0.0, atol=1e-12 * scale):
        raise InputError("Gram matrix is not symmetric")
    try:
        d, Q = np.linalg.eigh(K)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed to converge: {exc}") from exc
    d = d[::-1]
    Q = Q[:, ::-1]
    norm = float(np.max(np.abs(d))) if d.size else 0.0
    if d.size and d[-1] < -PSD_TOL * norm:
        raise NonPSDError(f"Gram matrix is not positive semidefinite (min eigenvalue {d[-1]:.3e}, norm {norm:.3e})")
    d = np.clip(d, 0.0, None)
    return GramSpectrum(_frozen(Q), _frozen(d), _frozen(Q.T @ Y))


def rkhs_norm_sq(K, alpha) -> float:
    """``alpha^T K alpha``, the squared RKHS norm of ``sum_i alpha_i k(., x_i)``."""
    K = np.asarray(K, dtype=np.float64)
    a = np.asarray(alpha, dtype=np.float64).ravel()
    if K.ndim != 2 or K.shape != (a.shape[0], a.shape[0]):
        raise InputError(f"dimension mismatch: K {K.shape}, alpha {a.shape}")
    value = float(a @ K @ a)
    # rounding noise scales with the magnitude of the summands
    slack = 1e-12 * max(1.0, float(np.abs(a) @ np.abs(K) @ np.abs(a)))
    if value < -slack:
        raise NonPSDError(f"negative squared RKHS norm {value:.3e}")
    return max(value, 0.0)


def spectral_norm_sq(spectrum: GramSpectrum, alpha_rot) -> float:
    """``sum_i d_i alpha'_i^2`` for coefficients already in the eigenbasis."""
    return float(np.dot(spectrum.eigenvalues, np.asarray(alpha_rot) ** 2))
