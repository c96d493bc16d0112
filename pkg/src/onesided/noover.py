"""No-overestimation l_p point query.

Each of ``t`` independent copies hashes the universe into ``k`` buckets and
runs the deterministic one-sided point query of :mod:`onesided.detpq` on
every bucket.  Per copy the estimate never exceeds ``x_i`` and loses at
most ``2/9`` of the *other* mass in ``i``'s bucket; the final answer is the
max over copies, clamped at zero.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .core import HashFamily, StreamUpdate, as_count_vector
from .detpq import MU_TARGET, DetPQSketch, IncoherentMatrix, build_incoherent


def no_params(n: int, p: float, eps: float) -> tuple[int, int]:
    """``k = ceil(4 n^{1-1/p}/eps)`` buckets, ``t`` = least integer with ``(3/4)^t <= eps^p/10``."""
    if p < 1:
        raise ValueError("p must be >= 1")
    if not 0 < eps < 1:
        raise ValueError("eps must be in (0, 1)")
    k = max(1, math.ceil(4.0 / eps * float(n) ** (1.0 - 1.0 / p) * (1 - 1e-12)))
    t = math.ceil(math.log(10.0 * eps ** (-p)) / math.log(4.0 / 3.0) * (1 - 1e-12))
    return k, max(1, t)


class NoOverSketch:
    """Hash-partitioned deterministic point queries; never overestimates on ``x >= 0``."""

    algo = "noover"

    def __init__(self, n: int, p: float, eps: float, seed: int = 0,
                 k: Optional[int] = None, t: Optional[int] = None,
                 family: Optional[HashFamily] = None,
                 matrix: Optional[IncoherentMatrix] = None):
        if k is None or t is None:
            k0, t0 = no_params(n, p, eps)
            k = k0 if k is None else k
            t = t0 if t is None else t
        self.n, self.p, self.eps = int(n), float(p), float(eps)
        self.k, self.t = int(k), int(t)
        self.family = family if family is not None else HashFamily(n, k, t, seed)
        if (self.family.n, self.family.k, self.family.t) != (self.n, self.k, self.t):
            raise ValueError("hash family does not match sketch shape")
        self.seed = self.family.seed
        # one matrix over the whole universe, shared by every bucket
        self.matrix = matrix if matrix is not None else build_incoherent(max(n, 2), MU_TARGET)
        q = self.matrix.q
        self.counts = np.zeros((self.t, self.k, q, q), dtype=np.int64)
        self.mass = np.zeros((self.t, self.k), dtype=np.int64)

    def _check_item(self, item: int) -> None:
        if not 0 <= item < self.n:
            raise ValueError(f"item {item} outside universe [0, {self.n})")

    def update(self, item, delta: int = 1) -> None:
        if isinstance(item, StreamUpdate):
            item, delta = item.item, item.delta
        self._check_item(item)
        b = self.family.buckets()[:, item]
        q = self.matrix.q
        ev = self.matrix.evaluations[item]
        for l in range(self.t):
            self.counts[l, b[l], np.arange(q), ev] += delta
        self.mass[np.arange(self.t), b] += delta

    def _flat_rows(self, items: np.ndarray) -> np.ndarray:
        """Flat counter indices, shape ``(t, len(items), q)``."""
        q = self.matrix.q
        b = self.family.buckets()[:, items]
        start = (np.arange(self.t)[:, None] * self.k + b) * (q * q)
        return start[:, :, None] + self.matrix.rows[items][None, :, :]

    def ingest(self, x) -> None:
        x = as_count_vector(x)
        if x.shape != (self.n,):
            raise ValueError("vector length must equal n")
        if x.dtype == np.float64 and self.counts.dtype != np.float64:
            self.counts = self.counts.astype(np.float64)
            self.mass = self.mass.astype(np.float64)
        items = np.flatnonzero(x)
        if items.size == 0:
            return
        q = self.matrix.q
        idx = self._flat_rows(items)
        w = np.broadcast_to(x[items][None, :, None], idx.shape)
        np.add.at(self.counts.reshape(-1), idx.reshape(-1), w.reshape(-1))
        b = self.family.buckets()[:, items]
        for l in range(self.t):
            np.add.at(self.mass[l], b[l], x[items])

    def copy_estimates(self, items: Optional[np.ndarray] = None) -> np.ndarray:
        """Per-copy one-sided estimates, shape ``(t, len(items))``."""
        if items is None:
            items = np.arange(self.n)
        q = self.matrix.q
        mu = self.matrix.mu_target
        raw = self.counts.reshape(-1)[self._flat_rows(items)].sum(axis=2) / q
        b = self.family.buckets()[:, items]
        m = np.take_along_axis(self.mass, b, axis=1)
        return (raw - mu * m) / (1.0 - mu)

    def estimate_all(self) -> np.ndarray:
        return np.maximum(0.0, self.copy_estimates().max(axis=0))

    def estimate(self, i: int) -> float:
        self._check_item(i)
        return float(np.maximum(0.0, self.copy_estimates(np.array([i])).max()))

    def bucket_sketch(self, copy: int, bucket: int) -> DetPQSketch:
        """The deterministic point query of one bucket (counts are a live view)."""
        return DetPQSketch(self.matrix, self.counts[copy, bucket], self.mass[copy, bucket].item())

    def compatible(self, other) -> bool:
        return (
            isinstance(other, NoOverSketch)
            and (self.p, self.eps) == (other.p, other.eps)
            and self.family.same_as(other.family)
            and self.matrix == other.matrix
        )

    def merge(self, other: "NoOverSketch") -> "NoOverSketch":
        if not self.compatible(other):
            raise ValueError("cannot merge sketches with different parameters or seeds")
        out = self.copy()
        out.counts = self.counts + other.counts
        out.mass = self.mass + other.mass
        return out

    def copy(self) -> "NoOverSketch":
        out = object.__new__(NoOverSketch)
        out.__dict__.update(self.__dict__)
        out.counts = self.counts.copy()
        out.mass = self.mass.copy()
        return out

    def counter_vector(self) -> np.ndarray:
        return np.concatenate([self.counts.reshape(-1), self.mass.reshape(-1)])

    def state_bits(self) -> int:
        return 64 * self.size

    @property
    def size(self) -> int:
        return self.t * self.k * (self.matrix.m + 1)
