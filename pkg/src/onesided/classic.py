"""Count-Min and Count-Sketch baselines."""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .core import HashFamily, StreamUpdate, as_count_vector


def cm_params(n: int, eps: float) -> tuple[int, int]:
    """Classic sizing: ``ceil(e/eps)`` buckets, ``ceil(ln n)`` tables (failure 1/n)."""
    if not 0 < eps <= 1:
        raise ValueError("eps must be in (0, 1]")
    k = math.ceil(math.e / eps - 1e-9)
    t = max(1, math.ceil(math.log(max(n, 2)) - 1e-9))
    return k, t


def cs_params(n: int, eps: float) -> tuple[int, int]:
    """``ceil(3/eps^2)`` buckets and an odd number of tables >= ln n."""
    if not 0 < eps <= 1:
        raise ValueError("eps must be in (0, 1]")
    k = math.ceil(3.0 / eps**2 - 1e-9)
    t = max(1, math.ceil(math.log(max(n, 2)) - 1e-9))
    if t % 2 == 0:
        t += 1
    return k, t


class _HashedCounters:
    """A ``t x k`` grid of counters addressed by a :class:`HashFamily`."""

    algo = "base"

    def __init__(self, n: int, k: int, t: int, seed: int = 0,
                 family: Optional[HashFamily] = None):
        self.family = family if family is not None else HashFamily(n, k, t, seed)
        if (self.family.n, self.family.k, self.family.t) != (n, k, t):
            raise ValueError("hash family does not match sketch shape")
        self.n, self.k, self.t = int(n), int(k), int(t)
        self.seed = self.family.seed
        self.counters = np.zeros((self.t, self.k), dtype=np.int64)

    def _check_item(self, item: int) -> None:
        if not 0 <= item < self.n:
            raise ValueError(f"item {item} outside universe [0, {self.n})")

    def _weights(self, item: int) -> np.ndarray:
        return np.ones(self.t, dtype=np.int64)

    def _weight_table(self) -> np.ndarray:
        return np.ones((self.t, self.n), dtype=np.int64)

    def update(self, item, delta: int = 1) -> None:
        if isinstance(item, StreamUpdate):
            item, delta = item.item, item.delta
        self._check_item(item)
        rows = np.arange(self.t)
        cols = self.family.buckets()[:, item]
        self.counters[rows, cols] += self._weights(item) * delta

    def ingest(self, x) -> None:
        """Add a whole frequency vector (equivalent to streaming every item)."""
        x = as_count_vector(x)
        if x.shape != (self.n,):
            raise ValueError("vector length must equal n")
        if x.dtype == np.float64 and self.counters.dtype != np.float64:
            self.counters = self.counters.astype(np.float64)
        b = self.family.buckets()
        w = self._weight_table()
        for l in range(self.t):
            np.add.at(self.counters[l], b[l], w[l] * x)

    def compatible(self, other) -> bool:
        return type(self) is type(other) and self.family.same_as(other.family)

    def _require_compatible(self, other) -> None:
        if not self.compatible(other):
            raise ValueError("cannot merge sketches with different parameters or seeds")

    def merge(self, other):
        self._require_compatible(other)
        out = self.copy()
        out.counters = self.counters + other.counters
        return out

    def copy(self):
        out = object.__new__(type(self))
        out.__dict__.update(self.__dict__)
        out.counters = self.counters.copy()
        return out

    def counter_vector(self) -> np.ndarray:
        """Counters flattened table-major; the image ``A x`` of the sketch matrix."""
        return self.counters.reshape(-1)

    def matrix(self) -> np.ndarray:
        """Dense ``(t*k) x n`` sketch matrix."""
        A = np.zeros((self.t * self.k, self.n))
        b = self.family.buckets()
        w = self._weight_table()
        cols = np.arange(self.n)
        for l in range(self.t):
            A[l * self.k + b[l], cols] = w[l]
        return A

    def with_counter_vector(self, y: np.ndarray):
        """A copy whose state is the given sketch image (used by the adversary)."""
        out = self.copy()
        out.counters = np.asarray(y, dtype=np.float64).reshape(self.t, self.k).copy()
        return out

    def state_bits(self) -> int:
        return 64 * self.t * self.k

    @property
    def size(self) -> int:
        return self.t * self.k


class CountMinSketch(_HashedCounters):
    """Count-Min: ``C_l[b]`` is the total count of items hashed to ``b`` in table ``l``."""

    algo = "cm"

    def __init__(self, n: int, k: int, t: int, seed: int = 0,
                 family: Optional[HashFamily] = None, eps: Optional[float] = None):
        super().__init__(n, k, t, seed, family)
        self.eps = eps

    @classmethod
    def for_error(cls, n: int, eps: float, seed: int = 0) -> "CountMinSketch":
        k, t = cm_params(n, eps)
        return cls(n, k, t, seed, eps=eps)

    def estimate(self, i: int):
        self._check_item(i)
        b = self.family.buckets()[:, i]
        return self.counters[np.arange(self.t), b].min().item()

    def estimate_all(self) -> np.ndarray:
        b = self.family.buckets()
        return np.take_along_axis(self.counters, b, axis=1).min(axis=0)


class CountSketch(_HashedCounters):
    """Count-Sketch: signed counters, median-of-tables estimate."""

    algo = "cs"

    def __init__(self, n: int, k: int, t: int, seed: int = 0,
                 family: Optional[HashFamily] = None, eps: Optional[float] = None):
        if t % 2 == 0:
            raise ValueError("Count-Sketch needs an odd number of tables")
        super().__init__(n, k, t, seed, family)
        self.eps = eps

    @classmethod
    def for_error(cls, n: int, eps: float, seed: int = 0) -> "CountSketch":
        k, t = cs_params(n, eps)
        return cls(n, k, t, seed, eps=eps)

    def _weights(self, item: int) -> np.ndarray:
        return self.family.signs()[:, item]

    def _weight_table(self) -> np.ndarray:
        return self.family.signs()

    def estimate(self, i: int):
        self._check_item(i)
        b = self.family.buckets()[:, i]
        s = self.family.signs()[:, i]
        vals = np.sort(s * self.counters[np.arange(self.t), b])
        return vals[self.t // 2].item()

    def estimate_all(self) -> np.ndarray:
        b = self.family.buckets()
        vals = self.family.signs() * np.take_along_axis(self.counters, b, axis=1)
        return np.sort(vals, axis=0)[self.t // 2]
