"""Generalized Hamming distance between training sets viewed as multisets.

The distance counts insertions, deletions and substitutions needed to turn
one set into the other, with reordering free. Production code uses the
closed form ``max(|Z1|, |Z2|) - |Z1 ∩ Z2|`` (multiset intersection);
:func:`h_metric_bruteforce` enumerates subsets and permutations literally
and serves as the test oracle.
"""

from __future__ import annotations

import itertools
import struct
from collections import Counter
from dataclasses import dataclass
from typing import Hashable, Iterable, List, Optional

import numpy as np

from .data import TrainingSet
from .exceptions import InputError

BRUTEFORCE_MAX = 8


def record_key(x, y) -> bytes:
    """Canonical bytes of an ``(input, target)`` pair; equality is bitwise."""
    values = np.append(np.asarray(x, dtype=np.float64).ravel(), float(y))
    return struct.pack(f">I{values.size}d", values.size, *values)


def as_records(Z) -> List[Hashable]:
    """Elements of ``Z`` as hashable keys.

    A :class:`TrainingSet` becomes byte-encoded records; any other iterable
    is taken to already contain hashable elements.
    """
    if isinstance(Z, TrainingSet):
        return [record_key(x, y) for x, y in zip(Z.inputs, Z.targets)]
    return list(Z)


@dataclass(frozen=True)
class MetricResult:
    distance: int
    matched: int
    witness: Optional[str] = None


def _intersection_size(c1: Counter, c2: Counter) -> int:
    return sum((c1 & c2).values())


def g_n(Z1: Iterable, Z2: Iterable) -> int:
    """Hamming distance minimized over reorderings of equal-size sets."""
    a, b = as_records(Z1), as_records(Z2)
    if len(a) != len(b):
        raise InputError(f"g_n needs equal sizes, got {len(a)} and {len(b)}")
    return len(a) - _intersection_size(Counter(a), Counter(b))


def h_metric(Z1: Iterable, Z2: Iterable) -> MetricResult:
    a, b = as_records(Z1), as_records(Z2)
    matched = _intersection_size(Counter(a), Counter(b))
    big, small = max(len(a), len(b)), min(len(a), len(b))
    distance = big - matched
    witness = f"{matched} matched, {small - matched} substituted, {big - small} inserted/deleted"
    return MetricResult(distance, matched, witness)


def h_distance(Z1: Iterable, Z2: Iterable) -> int:
    return h_metric(Z1, Z2).distance


def _hamming(seq1, seq2) -> int:
    return sum(1 for u, v in zip(seq1, seq2) if u != v)


def g_n_bruteforce(Z1: Iterable, Z2: Iterable) -> int:
    a, b = as_records(Z1), as_records(Z2)
    if len(a) != len(b):
        raise InputError(f"g_n needs equal sizes, got {len(a)} and {len(b)}")
    if len(a) > BRUTEFORCE_MAX:
        raise InputError(f"brute force limited to sets of size <= {BRUTEFORCE_MAX}")
    if not a:
        return 0
    return min(_hamming([a[i] for i in perm], b) for perm in itertools.permutations(range(len(a))))


def h_metric_bruteforce(Z1: Iterable, Z2: Iterable) -> int:
    """Literal evaluation: size difference plus the best equal-size subset match."""
    a, b = as_records(Z1), as_records(Z2)
    if max(len(a), len(b)) > BRUTEFORCE_MAX:
        raise InputError(f"brute force limited to sets of size <= {BRUTEFORCE_MAX}")
    if len(a) < len(b):
        a, b = b, a
    best = min(
        g_n_bruteforce([a[i] for i in subset], b)
        for subset in itertools.combinations(range(len(a)), len(b))
    )
    return len(a) - len(b) + best
