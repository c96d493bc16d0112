"""Blackboard simulation of the Mostly Set-Disjointness protocol built from a
no-underestimation point-query algorithm.

Players feed their sets into one streaming algorithm in turn, posting its
state after each.  The last player thresholds the estimates at ``c k`` with
``c = e/4``.  No candidate means NO; one candidate is settled by having all
players reveal their bit for it; several candidates mean the algorithm
failed on this run, so everybody starts over with fresh randomness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .nounder import NoUnderSketch

YES = "YES"
NO = "NO"
ABORT = "ABORT"
C_THRESHOLD = math.e / 4


@dataclass
class DisjInstance:
    n: int
    k: int
    l: int
    case: str
    X: np.ndarray
    D: Optional[np.ndarray] = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.int8)
        if self.X.shape != (self.k, self.n):
            raise ValueError("X must have shape (k, n)")
        if self.case not in (YES, NO):
            raise ValueError(f"case must be YES or NO, got {self.case!r}")

    def column_sums(self) -> np.ndarray:
        return self.X.sum(axis=0, dtype=np.int64)

    def validate(self) -> None:
        sums = self.column_sums()
        if self.case == NO:
            if sums.max(initial=0) > 1:
                raise ValueError("NO instance has a column with more than one 1")
        else:
            big = np.flatnonzero(sums > 1)
            if len(big) != 1 or sums[big[0]] != self.l:
                raise ValueError("YES instance needs exactly one column summing to l")

    def player_items(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.X[j])

    def frequencies(self) -> np.ndarray:
        return self.column_sums()


def sample_eta0(n: int, k: int, seed: int = 0, l: int = 2) -> DisjInstance:
    """NO instance: each column gets one uniform player holding a uniform bit."""
    if k < 2:
        raise ValueError("need at least two players")
    rng = np.random.default_rng(seed)
    D = rng.integers(0, k, size=n)
    bits = rng.integers(0, 2, size=n)
    X = np.zeros((k, n), dtype=np.int8)
    X[D, np.arange(n)] = bits
    return DisjInstance(n, k, l, NO, X, D)


def plant_yes(n: int, k: int, l: int, i: int, seed: int = 0) -> DisjInstance:
    """YES instance: an eta0 draw with column ``i`` replaced by ``l`` random players."""
    if not 1 < l <= k:
        raise ValueError("need 1 < l <= k")
    if not 0 <= i < n:
        raise ValueError(f"planted column {i} outside [0, {n})")
    base = sample_eta0(n, k, seed, l)
    rng = np.random.default_rng([seed, 1])
    X = base.X.copy()
    X[:, i] = 0
    X[rng.choice(k, size=l, replace=False), i] = 1
    return DisjInstance(n, k, l, YES, X, base.D)


def players_for(n: int, p: float, eps: float) -> int:
    """``4 eps n^{1/p}`` rounded to the nearest integer."""
    return int(round(4 * eps * n ** (1.0 / p)))


def threshold(k: int) -> float:
    return C_THRESHOLD * k


def yes_overlap(k: int) -> int:
    """Smallest integer overlap ``l`` that clears the ``c k`` threshold."""
    return math.ceil(threshold(k))


class ExactCounter:
    """Exact frequency counter: the trivial algorithm that never errs."""

    def __init__(self, n: int):
        self.n = n
        self.counts = np.zeros(n, dtype=np.int64)

    def update(self, item: int, delta: int = 1) -> None:
        self.counts[item] += delta

    def estimate_all(self) -> np.ndarray:
        return self.counts.copy()

    def state_bits(self) -> int:
        return 64 * self.n


@dataclass
class Post:
    round: int
    player: int
    kind: str  # "state", "index", "bit", "restart"
    bits: int
    value: object = None


@dataclass
class ProtocolTranscript:
    answer: str
    rounds: int
    bits: int
    trace: list = field(default_factory=list)
    candidates: list = field(default_factory=list)

    @property
    def aborted(self) -> bool:
        return self.answer == ABORT


def nounder_factory(n: int, p: float, eps: float) -> Callable[[int], NoUnderSketch]:
    return lambda seed: NoUnderSketch(n, p, eps, seed=seed)


def run_protocol(inst: DisjInstance, algo: Callable[[int], object], eps: float, p: float,
                 max_restarts: Optional[int] = None, passes: int = 1,
                 seed: int = 0) -> ProtocolTranscript:
    """Run the protocol to a verdict or to ``max_restarts`` runs (then ``ABORT``).

    ``algo(seed)`` must build a fresh streaming algorithm with ``update``,
    ``estimate_all`` and ``state_bits``; it is assumed never to underestimate.
    """
    n, k = inst.n, inst.k
    if not 0 < eps < 1:
        raise ValueError("eps must be in (0, 1)")
    if k != players_for(n, p, eps):
        raise ValueError(f"{k} players do not match 4*eps*n^(1/p) = {4 * eps * n ** (1 / p):g}")
    ck = threshold(k)
    if not ck > 1:
        raise ValueError("parameters violate c*k > 1 (need eps > 1/(e n^(1/p)))")
    if inst.case == YES and inst.l < ck:
        raise ValueError(f"YES overlap l={inst.l} is below the threshold c*k={ck:.3f}")
    if max_restarts is None:
        max_restarts = 64 * k
    index_bits = max(1, math.ceil(math.log2(n)))
    streams = [inst.player_items(j) for j in range(k)]  # identical on every restart

    trace: list[Post] = []
    bits = 0
    rng = np.random.default_rng(seed)
    for r in range(1, max_restarts + 1):
        sketch = algo(int(rng.integers(0, 2**63)))
        for _ in range(passes):
            for j in range(k):
                for item in streams[j]:
                    sketch.update(int(item), 1)
                size = sketch.state_bits()
                trace.append(Post(r, j, "state", size))
                bits += size
        est = np.asarray(sketch.estimate_all())
        cand = np.flatnonzero(est >= ck)
        if cand.size == 0:
            return ProtocolTranscript(NO, r, bits, trace, [])
        if cand.size == 1:
            i = int(cand[0])
            trace.append(Post(r, k - 1, "index", index_bits, i))
            bits += index_bits
            total = 0
            for j in range(k):
                bit = int(inst.X[j, i])
                trace.append(Post(r, j, "bit", 1, bit))
                bits += 1
                total += bit
            if total >= ck:
                return ProtocolTranscript(YES, r, bits, trace, [i])
            if total <= 1:
                return ProtocolTranscript(NO, r, bits, trace, [i])
            raise ValueError(f"column {i} sums to {total}: input violates the promise")
        trace.append(Post(r, k - 1, "restart", 1))
        bits += 1
    return ProtocolTranscript(ABORT, max_restarts, bits, trace, [])


def geometric_entropy(p_success: float) -> float:
    """Entropy in bits of a geometric variable: ``H(p)/p``."""
    p = float(p_success)
    if not 0 < p <= 1:
        raise ValueError("success probability must lie in (0, 1]")
    if p == 1.0:
        return 0.0
    h = p * math.log2(1 / p) + (1 - p) * math.log2(1 / (1 - p))
    return h / p


def empirical_entropy(samples) -> float:
    _, counts = np.unique(np.asarray(samples), return_counts=True)
    freq = counts / counts.sum()
    return float(-(freq * np.log2(freq)).sum())
