"""Training sets, CSV I/O, the Friedman generator, splits and metrics."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .exceptions import InputError


def _frozen(a, ndim) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    if ndim == 2 and a.ndim == 1:
        a = a[:, None]
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TrainingSet:
    """Ordered storage for what is semantically a multiset of ``(x, y)`` records."""

    inputs: np.ndarray
    targets: np.ndarray
    provenance: str = ""

    def __post_init__(self):
        X = _frozen(self.inputs, 2)
        y = _frozen(self.targets, 1).ravel()
        if X.ndim != 2:
            raise InputError(f"inputs must be 2-D, got shape {X.shape}")
        if X.shape[0] != y.shape[0]:
            raise InputError(f"{X.shape[0]} input rows but {y.shape[0]} targets")
        if X.shape[0] and X.shape[1] < 1:
            raise InputError("inputs need at least one feature")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise InputError("training data must be finite")
        y.setflags(write=False)
        object.__setattr__(self, "inputs", X)
        object.__setattr__(self, "targets", y)

    def __len__(self) -> int:
        return self.targets.shape[0]

    @property
    def n_features(self) -> int:
        return self.inputs.shape[1]

    def subset(self, indices, tag: Optional[str] = None) -> "TrainingSet":
        idx = np.asarray(indices, dtype=np.intp)
        return TrainingSet(self.inputs[idx], self.targets[idx], tag if tag is not None else self.provenance)

    def without(self, i: int) -> "TrainingSet":
        """``Z^i``: the set with its i-th record removed."""
        keep = np.ones(len(self), dtype=bool)
        keep[i] = False
        return TrainingSet(self.inputs[keep], self.targets[keep], self.provenance)

    def with_targets(self, targets) -> "TrainingSet":
        return TrainingSet(self.inputs, targets, self.provenance)

    def to_array(self) -> np.ndarray:
        return np.column_stack([self.inputs, self.targets])


# --------------------------------------------------------------------------- CSV


def load_csv(path, has_header: bool = False, target_column: Union[int, str] = "last") -> TrainingSet:
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [row for row in csv.reader(fh) if any(cell.strip() for cell in row)]
    if has_header and rows:
        rows = rows[1:]
    if not rows:
        raise InputError(f"{path}: no data rows")
    width = len(rows[0])
    if width < 2:
        raise InputError(f"{path}: need at least one feature column and one target column")
    values = np.empty((len(rows), width))
    for r, row in enumerate(rows):
        lineno = r + 1 + int(has_header)
        if len(row) != width:
            raise InputError(f"{path}: row {lineno} has {len(row)} columns, expected {width}")
        for c, cell in enumerate(row):
            try:
                values[r, c] = float(cell)
            except ValueError:
                raise InputError(f"{path}: non-numeric cell {cell!r} at row {lineno}, column {c + 1}") from None
    col = width - 1 if target_column == "last" else int(target_column)
    if not -width <= col < width:
        raise InputError(f"{path}: target column {target_column} out of range")
    col %= width
    features = np.delete(values, col, axis=1)
    return TrainingSet(features, values[:, col], f"csv:{path.name}")


def save_csv(ts: TrainingSet, path, header: Optional[Sequence[str]] = None) -> None:
    """Write features then target; floats use ``repr`` so reloading is bit-exact."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        if header is not None:
            writer.writerow(header)
        for x, y in zip(ts.inputs, ts.targets):
            writer.writerow([repr(float(v)) for v in x] + [repr(float(y))])


# --------------------------------------------------------------------- generators


def make_rng(seed) -> np.random.Generator:
    """PCG64 generator; the only RNG used in the package."""
    return np.random.Generator(np.random.PCG64(seed))


def derive_seed(master: int, *keys: int) -> int:
    """Child seed for ``(master, *keys)``; independent of how many siblings exist."""
    return int(np.random.SeedSequence([int(master), *[int(k) for k in keys]]).generate_state(1, np.uint64)[0])


def standard_normal(rng: np.random.Generator, size: int) -> np.ndarray:
    """Box-Muller deviates from the generator's uniform stream.

    Uses ``r = sqrt(-2 log(1 - u1))`` and ``cos(2 pi u2)``, one deviate per
    uniform pair, so the output depends only on ``rng.random``.
    """
    u = rng.random((size, 2))
    return np.sqrt(-2.0 * np.log1p(-u[:, 0])) * np.cos(2.0 * np.pi * u[:, 1])


def friedman_function(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    return (
        10.0 * np.sin(np.pi * X[:, 0] * X[:, 1])
        + 20.0 * (X[:, 2] - 0.5) ** 2
        + 10.0 * X[:, 3]
        + 5.0 * X[:, 4]
    )


def friedman_synthetic(n: int, noise_sd: float = 1.0, seed: int = 0, n_features: int = 10) -> TrainingSet:
    """Friedman #1 regression data with uniform inputs on ``[0, 1]^10``."""
    if n < 1:
        raise InputError("n must be at least 1")
    if n_features < 5:
        raise InputError("the Friedman function needs at least 5 features")
    rng = make_rng(seed)
    X = rng.random((n, n_features))
    y = friedman_function(X)
    if noise_sd:
        y = y + noise_sd * standard_normal(rng, n)
    return TrainingSet(X, y, f"friedman(n={n},noise_sd={noise_sd},seed={seed})")


# ---------------------------------------------------------------------- splitting


@dataclass(frozen=True)
class SplitPlan:
    """Random partition of ``n_rows`` indices; ``fractions`` must sum to one."""

    fractions: Tuple[float, ...]
    seed: int = 0

    def partitions(self, n_rows: int) -> List[np.ndarray]:
        fr = np.asarray(self.fractions, dtype=np.float64)
        if fr.size == 0 or np.any(fr <= 0):
            raise InputError("split fractions must be positive")
        if abs(fr.sum() - 1.0) > 1e-9:
            raise InputError(f"split fractions sum to {fr.sum()}, not 1")
        # largest-remainder rounding keeps sizes within one row of exact
        exact = fr * n_rows
        sizes = np.floor(exact).astype(int)
        short = n_rows - sizes.sum()
        order = sorted(range(fr.size), key=lambda i: (-(exact[i] - sizes[i]), i))
        for i in order[:short]:
            sizes[i] += 1
        perm = make_rng(self.seed).permutation(n_rows)
        bounds = np.concatenate([[0], np.cumsum(sizes)])
        return [np.sort(perm[bounds[i]:bounds[i + 1]]) for i in range(fr.size)]

    @classmethod
    def equal(cls, parts: int, seed: int = 0) -> "SplitPlan":
        return cls(tuple([1.0 / parts] * parts), seed)


def split(ts: TrainingSet, plan: SplitPlan) -> List[TrainingSet]:
    return [ts.subset(idx) for idx in plan.partitions(len(ts))]


def kfold_indices(n: int, k: int, seed: int = 0) -> List[Tuple[np.ndarray, np.ndarray]]:
    if k < 2:
        raise InputError(f"k must be at least 2, got {k}")
    if k > n:
        raise InputError(f"k={k} exceeds the number of rows {n}")
    perm = make_rng(seed).permutation(n)
    folds = np.array_split(perm, k)
    out = []
    for i, val in enumerate(folds):
        train = np.concatenate([f for j, f in enumerate(folds) if j != i])
        out.append((np.sort(train), np.sort(val)))
    return out


def kfold(ts: TrainingSet, k: int, seed: int = 0) -> List[Tuple[TrainingSet, TrainingSet]]:
    return [(ts.subset(tr), ts.subset(va)) for tr, va in kfold_indices(len(ts), k, seed)]


@dataclass
class Standardizer:
    """Zero-mean / unit-variance feature scaling fitted on a training split.

    Constant features keep unit scale.
    """

    mean_: np.ndarray = field(default=None, repr=False)
    scale_: np.ndarray = field(default=None, repr=False)

    def fit(self, ts: TrainingSet) -> "Standardizer":
        self.mean_ = ts.inputs.mean(axis=0)
        sd = ts.inputs.std(axis=0)
        self.scale_ = np.where(sd > 0, sd, 1.0)
        return self

    def transform(self, ts: TrainingSet) -> TrainingSet:
        if self.mean_ is None:
            raise InputError("Standardizer is not fitted")
        return TrainingSet((ts.inputs - self.mean_) / self.scale_, ts.targets, ts.provenance)


# ------------------------------------------------------------------------ metrics


def scaled_rmse(targets, predictions) -> float:
    """RMSE divided by ``max(targets)`` (not ``max |targets|``)."""
    y = np.asarray(targets, dtype=np.float64).ravel()
    p = np.asarray(predictions, dtype=np.float64).ravel()
    if y.shape != p.shape:
        raise InputError(f"length mismatch: {y.shape[0]} targets vs {p.shape[0]} predictions")
    if y.size == 0:
        raise InputError("scaled RMSE of an empty set")
    top = float(y.max())
    if top <= 0:
        raise InputError(f"scaled RMSE is undefined when max target is {top} <= 0")
    return math.sqrt(float(np.mean((y - p) ** 2))) / top


def rmse(targets, predictions) -> float:
    y = np.asarray(targets, dtype=np.float64).ravel()
    p = np.asarray(predictions, dtype=np.float64).ravel()
    if y.shape != p.shape or y.size == 0:
        raise InputError("rmse needs equal, non-empty inputs")
    return math.sqrt(float(np.mean((y - p) ** 2)))
