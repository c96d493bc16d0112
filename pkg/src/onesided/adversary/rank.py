"""Executable rank lower bounds.

``rank_bound_trace_frobenius`` uses ``2 rk(R) >= tr(R)^2 / ||R||_F^2``
(symmetrize, then Cauchy-Schwarz on the eigenvalues).
``greedy_rank_certificate`` finds a large well-conditioned principal block
by greedy max-pivoting and dyadic banding of the pivot magnitudes, then
applies the same bound to each band.  Both are valid for every square
matrix; the interesting case is ``|M_ii| >= 1`` with row l1 sums ``<= T``,
where the best band certifies rank ``Omega(n/T)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


def rank_bound_trace_frobenius(R) -> float:
    R = np.asarray(R, dtype=np.float64)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise ValueError("matrix must be square")
    fro2 = float(np.sum(R * R))
    if fro2 == 0.0:
        return 0.0
    tr = float(np.trace(R))
    return tr * tr / (2.0 * fro2)


def numerical_rank(M, rel: float = 1e-8) -> int:
    M = np.asarray(M, dtype=np.float64)
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rel * s[0]))


def greedy_pivots(M) -> tuple[np.ndarray, np.ndarray]:
    """Permutations ``(i_t), (j_t)``: each step takes the largest ``|M_ij|`` among unused rows/cols."""
    A = np.abs(np.asarray(M, dtype=np.float64))
    n = A.shape[0]
    work = A.copy()
    rows = np.empty(n, dtype=np.int64)
    cols = np.empty(n, dtype=np.int64)
    for t in range(n):
        flat = int(np.argmax(work))
        i, j = divmod(flat, n)
        rows[t], cols[t] = i, j
        work[i, :] = -1.0
        work[:, j] = -1.0
    return rows, cols


@dataclass
class RankCertificate:
    bound: float
    level: float = 0.0  # band is |pivot| in [level, 2 * level)
    rows: list = field(default_factory=list)
    cols: list = field(default_factory=list)
    trace: float = 0.0
    frobenius_sq: float = 0.0
    bands: dict = field(default_factory=dict)  # level exponent -> band size


def greedy_rank_certificate(M) -> RankCertificate:
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("matrix must be square")
    if M.shape[0] == 0:
        return RankCertificate(0.0)
    pi, pj = greedy_pivots(M)
    piv = M[pi, pj]
    mags = np.abs(piv)
    best = RankCertificate(0.0)
    levels: dict[int, list[int]] = {}
    for t in np.flatnonzero(mags > 0):
        e = math.floor(math.log2(mags[t]))
        # floor(log2) can land one off for values next to a power of two
        if 2.0 ** (e + 1) <= mags[t]:
            e += 1
        elif 2.0 ** e > mags[t]:
            e -= 1
        levels.setdefault(e, []).append(int(t))
    best.bands = {e: len(ts) for e, ts in sorted(levels.items())}
    for e, ts in levels.items():
        r_idx, c_idx = pi[ts], pj[ts]
        R = M[np.ix_(r_idx, c_idx)] * np.sign(piv[ts])[:, None]
        bound = rank_bound_trace_frobenius(R)
        if bound > best.bound:
            best.bound = bound
            best.level = 2.0 ** e
            best.rows = r_idx.tolist()
            best.cols = c_idx.tolist()
            best.trace = float(np.trace(R))
            best.frobenius_sq = float(np.sum(R * R))
    return best
