"""Deterministic l_1 point query from an incoherent matrix, and its one-sided variant.

The matrix comes from a polynomial-evaluation (Reed-Solomon) code over the
prime field GF(q).  Item ``i`` is read as a polynomial of degree below ``d``
whose coefficients are the base-``q`` digits of ``i``; its column has one
entry ``1/sqrt(q)`` in each of ``q`` blocks, at row ``(a, p_i(a))``.  Two
distinct polynomials agree on at most ``d - 1`` points, so the coherence is
at most ``(d - 1) / q``.

The accumulator is kept as exact integer counts ``C[a, v]`` (the total
frequency of items whose polynomial takes value ``v`` at ``a``); the real
sketch is ``y = C / sqrt(q)``.  Keeping integers makes the state bit-exact
under merges and serialization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np

from .core import StreamUpdate, as_count_vector

MU_TARGET = 0.1


def is_prime(q: int) -> bool:
    if q < 2:
        return False
    if q % 2 == 0:
        return q == 2
    f = 3
    while f * f <= q:
        if q % f == 0:
            return False
        f += 2
    return True


def _degree_for(q: int, n: int) -> int:
    """Least ``d >= 1`` with ``q**d >= n``."""
    d, cap = 1, q
    while cap < n:
        d += 1
        cap *= q
    return d


def choose_field(n: int, mu_target: float = MU_TARGET) -> tuple[int, int]:
    """Smallest prime ``q`` admitting a degree ``d`` with ``q^d >= n`` and ``(d-1)/q <= mu``."""
    if n < 2:
        raise ValueError("n must be at least 2")
    if not 0 < mu_target < 1:
        raise ValueError("mu_target must be in (0, 1)")
    q = 2
    while True:
        if is_prime(q):
            d = _degree_for(q, n)
            if d - 1 <= mu_target * q:
                return q, d
        q += 1


@dataclass(frozen=True)
class IncoherentMatrix:
    """Unit-norm columns with pairwise inner products at most ``(d-1)/q``.

    Only the evaluation table is stored; :meth:`dense` materializes the
    ``q^2 x n`` matrix when a test wants it.
    """

    n: int
    q: int
    d: int
    mu_target: float = MU_TARGET

    def __post_init__(self):
        if not is_prime(self.q):
            raise ValueError(f"q={self.q} is not prime")
        if self.q ** self.d < self.n:
            raise ValueError("q^d must cover the universe")

    @property
    def m(self) -> int:
        return self.q * self.q

    @property
    def mu(self) -> float:
        return (self.d - 1) / self.q

    @cached_property
    def evaluations(self) -> np.ndarray:
        """``(n, q)`` table: ``evaluations[i, a] = p_i(a) mod q``."""
        q = self.q
        items = np.arange(self.n, dtype=np.int64)
        coeffs = np.empty((self.d, self.n), dtype=np.int64)
        rest = items.copy()
        for j in range(self.d):
            coeffs[j] = rest % q
            rest //= q
        points = np.arange(q, dtype=np.int64)
        # Horner's rule, highest coefficient first
        acc = np.zeros((self.n, q), dtype=np.int64)
        for j in range(self.d - 1, -1, -1):
            acc = (acc * points[None, :] + coeffs[j][:, None]) % q
        return acc

    @cached_property
    def rows(self) -> np.ndarray:
        """``(n, q)`` row indices of the nonzero entries of each column."""
        return np.arange(self.q, dtype=np.int64)[None, :] * self.q + self.evaluations

    def column(self, i: int) -> np.ndarray:
        if not 0 <= i < self.n:
            raise ValueError(f"column {i} outside [0, {self.n})")
        col = np.zeros(self.m)
        col[self.rows[i]] = 1.0 / math.sqrt(self.q)
        return col

    def dense(self) -> np.ndarray:
        out = np.zeros((self.m, self.n))
        out[self.rows, np.arange(self.n)[:, None]] = 1.0 / math.sqrt(self.q)
        return out

    def agreements(self) -> np.ndarray:
        """Exact ``(n, n)`` matrix of shared evaluation points, i.e. ``q * <col_i, col_j>``."""
        ev = self.evaluations
        out = np.zeros((self.n, self.n), dtype=np.int64)
        for a in range(self.q):
            col = ev[:, a]
            out += col[:, None] == col[None, :]
        return out

    def coherence(self) -> float:
        """Measured max ``|<col_i, col_j>|`` over distinct columns, by exhaustive check."""
        if self.n < 2:
            return 0.0
        agree = self.agreements()
        np.fill_diagonal(agree, 0)
        return int(agree.max()) / self.q


def build_incoherent(n: int, mu_target: float = MU_TARGET) -> IncoherentMatrix:
    q, d = choose_field(n, mu_target)
    return IncoherentMatrix(n, q, d, mu_target)


class DetPQSketch:
    """Linear sketch ``(Phi x, ||x||_1)`` for nonnegative ``x``.

    ``estimate_raw`` satisfies ``|x~_i - x_i| <= mu (||x||_1 - x_i)``;
    ``estimate`` shifts and rescales it so it never exceeds ``x_i`` and
    loses at most ``2 mu/(1 - mu) (||x||_1 - x_i)``, which is ``2/9`` of the
    remaining mass at ``mu = 0.1``.
    """

    algo = "detpq"

    def __init__(self, matrix: IncoherentMatrix, counts: Optional[np.ndarray] = None,
                 mass: int = 0):
        self.matrix = matrix
        q = matrix.q
        if counts is None:
            counts = np.zeros((q, q), dtype=np.int64)
        elif counts.shape != (q, q):
            raise ValueError("counts must have shape (q, q)")
        self.counts = counts
        self.mass = mass

    @classmethod
    def for_universe(cls, n: int, mu_target: float = MU_TARGET) -> "DetPQSketch":
        return cls(build_incoherent(n, mu_target))

    @property
    def n(self) -> int:
        return self.matrix.n

    @property
    def y(self) -> np.ndarray:
        """The real sketch vector ``Phi x`` of length ``q^2``."""
        return self.counts.reshape(-1) / math.sqrt(self.matrix.q)

    def update(self, item, delta: int = 1) -> None:
        if isinstance(item, StreamUpdate):
            item, delta = item.item, item.delta
        if not 0 <= item < self.n:
            raise ValueError(f"item {item} outside universe [0, {self.n})")
        self.counts[np.arange(self.matrix.q), self.matrix.evaluations[item]] += delta
        self.mass += delta

    def ingest(self, x) -> None:
        x = as_count_vector(x)
        if x.shape != (self.n,):
            raise ValueError("vector length must equal n")
        if x.dtype == np.float64 and self.counts.dtype != np.float64:
            self.counts = self.counts.astype(np.float64)
        np.add.at(self.counts.reshape(-1), self.matrix.rows.reshape(-1), np.repeat(x, self.matrix.q))
        self.mass = self.mass + x.sum().item()

    def _raw_all(self) -> np.ndarray:
        q = self.matrix.q
        gathered = self.counts.reshape(-1)[self.matrix.rows]
        return gathered.sum(axis=1) / q

    def estimate_raw(self, i: int) -> float:
        """``<col_i, y>``."""
        if not 0 <= i < self.n:
            raise ValueError(f"item {i} outside universe [0, {self.n})")
        q = self.matrix.q
        return float(self.counts.reshape(-1)[self.matrix.rows[i]].sum()) / q

    def estimate_raw_all(self) -> np.ndarray:
        return self._raw_all()

    def _shift(self, raw):
        mu = self.matrix.mu_target
        return (raw - mu * self.mass) / (1.0 - mu)

    def estimate(self, i: int) -> float:
        return float(self._shift(self.estimate_raw(i)))

    def estimate_all(self) -> np.ndarray:
        return self._shift(self._raw_all())

    def compatible(self, other) -> bool:
        return isinstance(other, DetPQSketch) and self.matrix == other.matrix

    def merge(self, other: "DetPQSketch") -> "DetPQSketch":
        if not self.compatible(other):
            raise ValueError("cannot merge sketches over different matrices")
        return DetPQSketch(self.matrix, self.counts + other.counts, self.mass + other.mass)

    def copy(self) -> "DetPQSketch":
        return DetPQSketch(self.matrix, self.counts.copy(), self.mass)

    def state_bits(self) -> int:
        return 64 * (self.matrix.m + 1)

    @property
    def size(self) -> int:
        return self.matrix.m + 1
