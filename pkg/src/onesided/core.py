"""Frequency vectors, stream updates, norms and seeded hashing.

Everything here is shared by the sketches. Items are zero-indexed, so the
universe is ``range(n)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

import numpy as np

INSERTION = "insertion"
STRICT_TURNSTILE = "strict-turnstile"
MODELS = (INSERTION, STRICT_TURNSTILE)

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

# Domain-separation tags so bucket and sign hashes never share a stream.
TAG_BUCKET = 0x42
TAG_SIGN = 0x53


class StrictTurnstileError(ValueError):
    """A frequency went negative where the model forbids it."""


@dataclass(frozen=True)
class StreamUpdate:
    item: int
    delta: int = 1

    def check(self, n: int, model: str = STRICT_TURNSTILE) -> None:
        if not 0 <= self.item < n:
            raise ValueError(f"item {self.item} outside universe [0, {n})")
        if model == INSERTION and self.delta < 1:
            raise ValueError(f"insertion-only stream got delta {self.delta}")


@dataclass
class FrequencyVector:
    """Exact count vector; the ground truth every sketch is compared to."""

    n: int
    counts: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("universe size must be positive")
        if self.counts is None:
            self.counts = np.zeros(self.n, dtype=np.int64)
        else:
            self.counts = np.asarray(self.counts, dtype=np.int64)
            if self.counts.shape != (self.n,):
                raise ValueError("counts must have shape (n,)")

    def update(self, item: int, delta: int = 1) -> None:
        if not 0 <= item < self.n:
            raise ValueError(f"item {item} outside universe [0, {self.n})")
        self.counts[item] += delta

    def check_nonnegative(self) -> None:
        if self.n and self.counts.min() < 0:
            bad = int(np.argmin(self.counts))
            raise StrictTurnstileError(
                f"count of item {bad} is {int(self.counts[bad])} < 0"
            )

    def norm(self, p: float) -> float:
        return norm(self.counts, p)

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, i: int) -> int:
        return int(self.counts[i])

    def __eq__(self, other) -> bool:
        if not isinstance(other, FrequencyVector):
            return NotImplemented
        return self.n == other.n and bool(np.array_equal(self.counts, other.counts))


def norm(x: Union[FrequencyVector, Sequence[float], np.ndarray], p: float) -> float:
    """l_p norm with compensated summation; ``p=math.inf`` gives the max norm."""
    if isinstance(x, FrequencyVector):
        x = x.counts
    a = np.abs(np.asarray(x, dtype=np.float64))
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if not np.all(np.isfinite(a)):
        raise ValueError("vector has non-finite entries")
    if a.size == 0:
        return 0.0
    top = float(a.max())
    if top == 0.0:
        return 0.0
    if math.isinf(p):
        return top
    if p == 1:
        return math.fsum(a.tolist())
    # scale by the max so large counts cannot overflow a**p
    s = math.fsum(((a / top) ** p).tolist())
    return top * s ** (1.0 / p)


def apply_stream(
    updates: Iterable[Union[StreamUpdate, tuple]], n: int, model: str = STRICT_TURNSTILE
) -> FrequencyVector:
    """Fold a stream into its frequency vector, enforcing the stream model."""
    if model not in MODELS:
        raise ValueError(f"unknown stream model {model!r}")
    fv = FrequencyVector(n)
    for u in updates:
        if not isinstance(u, StreamUpdate):
            u = StreamUpdate(*u)
        u.check(n, model)
        fv.counts[u.item] += u.delta
    fv.check_nonnegative()
    return fv


def mix64(z: int) -> int:
    """splitmix64 finalizer on a Python int."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    z = z.astype(np.uint64, copy=True)
    z ^= z >> np.uint64(30)
    z *= np.uint64(0xBF58476D1CE4E5B9)
    z ^= z >> np.uint64(27)
    z *= np.uint64(0x94D049BB133111EB)
    z ^= z >> np.uint64(31)
    return z


def _table_key(seed: int, table: int, tag: int) -> int:
    return mix64(mix64((seed & _MASK64) ^ (tag << 56)) + _GOLDEN * (table + 1))


def hash64(seed: int, table: int, item: int, tag: int = TAG_BUCKET) -> int:
    key = _table_key(seed, table, tag)
    return mix64(key ^ ((item * _GOLDEN) & _MASK64))


def hash64_array(seed: int, table: int, items: np.ndarray, tag: int = TAG_BUCKET) -> np.ndarray:
    key = np.uint64(_table_key(seed, table, tag))
    with np.errstate(over="ignore"):
        z = np.asarray(items, dtype=np.uint64) * np.uint64(_GOLDEN)
        return _mix64_array(z ^ key)


class HashFamily:
    """``t`` seeded hash functions ``[n] -> [k]`` plus matching sign hashes.

    A ``table`` of shape ``(t, n)`` pins the bucket map explicitly, which is
    how tests build hand-checkable or injective sketches.
    """

    def __init__(self, n: int, k: int, t: int, seed: int = 0,
                 table: Optional[np.ndarray] = None):
        if n < 1 or k < 1 or t < 1:
            raise ValueError("n, k and t must be positive")
        self.n = int(n)
        self.k = int(k)
        self.t = int(t)
        self.seed = int(seed) & _MASK64
        self.pinned = table is not None
        if table is not None:
            table = np.asarray(table, dtype=np.int64)
            if table.shape != (self.t, self.n):
                raise ValueError(f"pinned table must have shape ({t}, {n})")
            if table.min() < 0 or table.max() >= self.k:
                raise ValueError("pinned bucket out of range")
            self._buckets = table
        else:
            self._buckets = None
        self._signs = None

    def _check(self, table: int, item: int) -> None:
        if not 0 <= table < self.t:
            raise ValueError(f"table {table} outside [0, {self.t})")
        if not 0 <= item < self.n:
            raise ValueError(f"item {item} outside [0, {self.n})")

    def bucket(self, table: int, item: int) -> int:
        self._check(table, item)
        if self._buckets is not None:
            return int(self._buckets[table, item])
        return hash64(self.seed, table, item) % self.k

    def sign(self, table: int, item: int) -> int:
        self._check(table, item)
        return 1 - 2 * (hash64(self.seed, table, item, TAG_SIGN) >> 63)

    def buckets(self) -> np.ndarray:
        """All bucket indices as a ``(t, n)`` int64 array (cached)."""
        if self._buckets is None:
            items = np.arange(self.n, dtype=np.uint64)
            k = np.uint64(self.k)
            self._buckets = np.stack(
                [(hash64_array(self.seed, l, items) % k).astype(np.int64) for l in range(self.t)]
            )
        return self._buckets

    def signs(self) -> np.ndarray:
        if self._signs is None:
            items = np.arange(self.n, dtype=np.uint64)
            top = [(hash64_array(self.seed, l, items, TAG_SIGN) >> np.uint64(63)).astype(np.int64)
                   for l in range(self.t)]
            self._signs = 1 - 2 * np.stack(top)
        return self._signs

    def same_as(self, other: "HashFamily") -> bool:
        if (self.n, self.k, self.t, self.seed, self.pinned) != (
            other.n, other.k, other.t, other.seed, other.pinned
        ):
            return False
        if self.pinned:
            return bool(np.array_equal(self._buckets, other._buckets))
        return True


def hash_bucket(family: HashFamily, table: int, item: int) -> int:
    return family.bucket(table, item)


def as_count_vector(x) -> np.ndarray:
    """Coerce a frequency vector or array to a 1-d array, keeping integers exact."""
    if isinstance(x, FrequencyVector):
        return x.counts
    a = np.asarray(x)
    if a.ndim != 1:
        raise ValueError("expected a 1-d vector")
    if np.issubdtype(a.dtype, np.integer) or a.dtype == bool:
        return a.astype(np.int64)
    return a.astype(np.float64)
