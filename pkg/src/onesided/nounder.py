"""No-underestimation l_p point query with O(n^{1-1/p}/eps) counters.

Structurally this is Count-Min, sized for the l_p guarantee: ``k`` buckets
per table with ``k = ceil(4 n^{1-1/p} / eps)`` and only a constant number of
tables for fixed ``p``.  Because every counter is a sum of nonnegative
counts that includes ``x_i``, the estimate can never fall below ``x_i``.

Quantization rounds every counter *up* to a power of ``1 + eps_q``, which is
what lets a distributed party ship each counter in O(log log n) bits
without losing the no-underestimation property.
"""

from __future__ import annotations

import math
import warnings
from typing import Optional

import numpy as np

from .classic import CountMinSketch
from .core import HashFamily

ZERO_EXPONENT = np.iinfo(np.int32).min


class RegimeWarning(UserWarning):
    """eps is too small for the guaranteed parameter window (eps^-1 > n^{1/p})."""


def _pow_n(n: int, e: float) -> float:
    return float(n) ** e


def in_guarantee_regime(n: int, p: float, eps: float) -> bool:
    """True when ``1 <= 1/eps <= n^{1/p}``; the constant ``c`` is left to the caller."""
    return 1.0 / eps <= _pow_n(n, 1.0 / p) * (1 + 1e-12)


def nu_buckets(n: int, p: float, eps: float) -> int:
    raw = 4.0 / eps * _pow_n(n, 1.0 - 1.0 / p)
    return max(1, math.ceil(raw * (1 - 1e-12)))


def nu_params(n: int, p: float, eps: float) -> tuple[int, int]:
    """Return ``(k, t)`` for a no-underestimation sketch.

    ``t = max(3, ceil(2p/(p-1)))``.  Outside the regime ``1/eps <= n^{1/p}``
    the bucket count is capped at ``n`` and a :class:`RegimeWarning` is issued.
    """
    if not p > 1:
        raise ValueError("p must exceed 1; use Count-Min for l_1")
    if not 0 < eps <= 1:
        raise ValueError("eps must be in (0, 1]")
    if n < 1:
        raise ValueError("n must be positive")
    k = nu_buckets(n, p, eps)
    if math.isinf(p):
        t = 3
    else:
        t = max(3, math.ceil(2 * p / (p - 1) * (1 - 1e-12)))
    if not in_guarantee_regime(n, p, eps):
        warnings.warn(
            f"1/eps = {1 / eps:g} exceeds n^(1/p) = {_pow_n(n, 1 / p):g}; capping k at n",
            RegimeWarning,
            stacklevel=2,
        )
        k = min(k, n)
    return k, t


def quantize_up(values: np.ndarray, base: float) -> tuple[np.ndarray, np.ndarray]:
    """Round each positive value up to the least power of ``base`` that is >= it.

    Returns ``(rounded, exponents)``; zeros stay zero and get :data:`ZERO_EXPONENT`.
    """
    if not base > 1:
        raise ValueError("quantization base must exceed 1")
    v = np.asarray(values, dtype=np.float64)
    if np.any(v < 0):
        raise ValueError("cannot quantize negative counters")
    pos = v > 0
    e = np.full(v.shape, ZERO_EXPONENT, dtype=np.int64)
    if pos.any():
        guess = np.ceil(np.log(v[pos]) / math.log(base)).astype(np.int64)
        # log is approximate; settle on the exact least power under float pow
        while True:
            low = np.power(base, guess.astype(np.float64)) < v[pos]
            if not low.any():
                break
            guess[low] += 1
        while True:
            high = np.power(base, (guess - 1).astype(np.float64)) >= v[pos]
            if not high.any():
                break
            guess[high] -= 1
        e[pos] = guess
    return exponent_values(e, base), e


def exponent_values(exponents: np.ndarray, base: float) -> np.ndarray:
    e = np.asarray(exponents, dtype=np.int64)
    out = np.zeros(e.shape, dtype=np.float64)
    nz = e != ZERO_EXPONENT
    out[nz] = np.power(base, e[nz].astype(np.float64))
    return out


class NoUnderSketch(CountMinSketch):
    """Count-Min sized for the l_p error guarantee.

    Estimates never underestimate on nonnegative vectors.  With
    probability at least ``1 - 1/n`` over the seed every estimate is within
    ``eps * ||x||_p`` of the truth (inside the parameter regime).
    """

    algo = "nounder"

    def __init__(self, n: int, p: float, eps: float, seed: int = 0,
                 k: Optional[int] = None, t: Optional[int] = None,
                 family: Optional[HashFamily] = None):
        if k is None or t is None:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RegimeWarning)
                k0, t0 = nu_params(n, p, eps)
            k = k0 if k is None else k
            t = t0 if t is None else t
        super().__init__(n, k, t, seed, family, eps=eps)
        self.p = float(p)
        self.in_regime = in_guarantee_regime(n, p, eps)
        self.quant_base: Optional[float] = None
        self.exponents: Optional[np.ndarray] = None

    @property
    def quantized(self) -> bool:
        return self.quant_base is not None

    def _dequantize(self) -> None:
        self.quant_base = None
        self.exponents = None

    def update(self, item, delta: int = 1) -> None:
        if self.quantized:
            self._dequantize()
        super().update(item, delta)

    def ingest(self, x) -> None:
        if self.quantized:
            self._dequantize()
        super().ingest(x)

    def copy(self):
        out = super().copy()
        if self.exponents is not None:
            out.exponents = self.exponents.copy()
        return out

    def compatible(self, other) -> bool:
        return super().compatible(other) and (self.p, self.eps) == (other.p, other.eps)

    def quantize(self, eps_q: float) -> "NoUnderSketch":
        """New sketch with every nonzero counter rounded up to a power of ``1 + eps_q``."""
        if not eps_q > 0:
            raise ValueError("eps_q must be positive")
        return self._quantized_copy(1.0 + eps_q)

    def _quantized_copy(self, base: float) -> "NoUnderSketch":
        out = self.copy()
        out.counters, out.exponents = quantize_up(self.counters, base)
        out.exponents = out.exponents.astype(np.int64)
        out.quant_base = base
        return out

    def merge(self, other: "NoUnderSketch") -> "NoUnderSketch":
        """Counter-wise sum.  If either side is quantized the sum is re-quantized."""
        self._require_compatible(other)
        bases = {s.quant_base for s in (self, other) if s.quantized}
        if len(bases) > 1:
            raise ValueError("cannot merge sketches quantized with different bases")
        out = self.copy()
        out._dequantize()
        out.counters = self.counters + other.counters
        if bases:
            return out._quantized_copy(bases.pop())
        return out

    def with_counter_vector(self, y):
        out = super().with_counter_vector(y)
        out._dequantize()
        return out

    def state_bits(self) -> int:
        if self.quantized:
            # one exponent per counter; its width is what quantization buys
            nz = self.exponents[self.exponents != ZERO_EXPONENT]
            span = int(nz.max() - min(nz.min(), 0)) + 2 if nz.size else 2
            return self.t * self.k * max(1, math.ceil(math.log2(span)))
        return super().state_bits()

