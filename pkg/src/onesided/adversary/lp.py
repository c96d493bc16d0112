"""Dense two-phase primal simplex with Bland's rule.

Solves ``max c.x  s.t.  A x = b, x >= 0`` and returns a complementary dual
``y`` (``A^T y >= c``, ``b.y = c.x`` at optimality).  The same code runs
in float64 or, with ``exact=True``, over :class:`fractions.Fraction`; the
exact path is meant for small instances and for validating the float one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Optional

import numpy as np

OPTIMAL = "optimal"
UNBOUNDED = "unbounded"
INFEASIBLE = "infeasible"


class LPError(RuntimeError):
    """The solver failed to certify an answer (iteration cap or numerical breakdown)."""


@dataclass
class LPResult:
    status: str
    x: Optional[np.ndarray] = None
    y: Optional[np.ndarray] = None
    value: float = float("nan")
    ray: Optional[np.ndarray] = None
    basis: list = field(default_factory=list)
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def _as_exact(a) -> np.ndarray:
    arr = np.asarray(a, dtype=object)
    out = np.empty(arr.shape, dtype=object)
    for idx, v in np.ndenumerate(arr):
        out[idx] = v if isinstance(v, Fraction) else Fraction(v)
    return out


class _Tableau:
    def __init__(self, A, b, exact: bool, tol: float):
        self.exact = exact
        self.tol = 0 if exact else tol
        m, n = A.shape
        self.m, self.n = m, n
        if exact:
            A, b = _as_exact(A), _as_exact(b)
            zero, one = Fraction(0), Fraction(1)
            eye = np.full((m, m), zero, dtype=object)
            for r in range(m):
                eye[r, r] = one
        else:
            A, b = np.asarray(A, dtype=np.float64), np.asarray(b, dtype=np.float64)
            eye = np.eye(m)
        self.signs = np.where(np.array([v < 0 for v in b], dtype=bool), -1, 1)
        A = A * self.signs[:, None]
        b = b * self.signs
        self.T = np.concatenate([A, eye, b[:, None]], axis=1)
        self.basis = list(range(n, n + m))
        self.rows = list(range(m))  # original row index of each tableau row
        scale = max([1.0] + [abs(float(v)) for v in np.ravel(A)]) if A.size else 1.0
        self.snap = 0 if exact else 1e-12 * scale
        self.d = None
        self.iterations = 0

    def set_cost(self, c_full) -> None:
        """Reduced cost row (with objective value in the last slot) for cost on all columns."""
        cB = np.array([c_full[j] for j in self.basis], dtype=self.T.dtype)
        full = np.concatenate([np.asarray(c_full, dtype=self.T.dtype),
                               np.array([0], dtype=self.T.dtype)])
        self.d = full - cB @ self.T
        if not self.exact:
            self.d[np.abs(self.d) < self.snap] = 0.0

    def pivot(self, r: int, j: int) -> None:
        T = self.T
        T[r] = T[r] / T[r, j]
        col = T[:, j].copy()
        col[r] = 0
        T -= np.outer(col, T[r])
        self.d = self.d - self.d[j] * T[r]
        if not self.exact:
            T[np.abs(T) < self.snap] = 0.0
            self.d[np.abs(self.d) < self.snap] = 0.0
        self.basis[r] = j
        self.iterations += 1

    def entering(self, allowed: int) -> Optional[int]:
        for j in range(allowed):
            if self.d[j] > self.tol:
                return j
        return None

    def leaving(self, j: int) -> Optional[int]:
        T = self.T
        best, best_ratio = None, None
        for r in range(T.shape[0]):
            a = T[r, j]
            if a > self.tol:
                ratio = T[r, -1] / a
                if best is None:
                    best, best_ratio = r, ratio
                    continue
                slack = 0 if self.exact else self.tol * (1 + abs(best_ratio))
                if ratio < best_ratio - slack:
                    best, best_ratio = r, ratio
                elif ratio <= best_ratio + slack and self.basis[r] < self.basis[best]:
                    best, best_ratio = r, min(ratio, best_ratio)
        return best

    def run(self, allowed: int, max_iter: int) -> Optional[int]:
        """Iterate to optimality; returns the unbounded entering column, if any."""
        while True:
            if self.iterations > max_iter:
                raise LPError("simplex iteration cap exceeded")
            j = self.entering(allowed)
            if j is None:
                return None
            r = self.leaving(j)
            if r is None:
                return j
            self.pivot(r, j)

    def drop_row(self, r: int) -> None:
        self.T = np.delete(self.T, r, axis=0)
        del self.basis[r]
        del self.rows[r]


def lp_solve(c, A_eq, b_eq, exact: bool = False, tol: float = 1e-9,
             max_iter: Optional[int] = None) -> LPResult:
    """Maximize ``c.x`` subject to ``A_eq x = b_eq`` and ``x >= 0``."""
    A = np.atleast_2d(np.asarray(A_eq, dtype=object if exact else np.float64))
    m, n = A.shape
    c = np.asarray(c, dtype=object if exact else np.float64).reshape(-1)
    b = np.asarray(b_eq, dtype=object if exact else np.float64).reshape(-1)
    if c.shape != (n,) or b.shape != (m,):
        raise ValueError("objective/right-hand side shapes do not match A")
    if not exact and not (np.all(np.isfinite(A)) and np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
        raise ValueError("LP data must be finite")
    if exact:
        A, c, b = _as_exact(A), _as_exact(c), _as_exact(b)
    if max_iter is None:
        max_iter = 200 * (m + n) + 1000

    tab = _Tableau(A, b, exact, tol)
    zero = Fraction(0) if exact else 0.0
    one = Fraction(1) if exact else 1.0

    # phase one: drive the artificial variables to zero
    tab.set_cost([zero] * n + [-one] * m)
    tab.run(n + m, max_iter)
    infeas = tab.d[-1]  # sum of artificials still in the basis
    bscale = 1.0 + max([abs(float(v)) for v in b] + [0.0])
    if infeas > (0 if exact else tol * bscale * max(1, m)):
        return LPResult(INFEASIBLE, iterations=tab.iterations)

    # pivot leftover artificials out, dropping rows that turn out redundant
    r = 0
    while r < len(tab.basis):
        if tab.basis[r] >= n:
            row = tab.T[r, :n]
            cand = [j for j in range(n) if abs(row[j]) > (0 if exact else tol)]
            if cand:
                j = max(cand, key=lambda j: abs(row[j]))
                tab.pivot(r, j)
            else:
                tab.drop_row(r)
                continue
        r += 1

    # phase two on the structural columns; artificial columns stay for the dual
    tab.set_cost(list(c) + [zero] * m)
    unbounded_col = tab.run(n, max_iter)

    x = np.array([zero] * n, dtype=object if exact else np.float64)
    for r, j in enumerate(tab.basis):
        x[j] = tab.T[r, -1]
    if not exact:
        x[np.abs(x) < tab.snap] = 0.0

    if unbounded_col is not None:
        ray = np.array([zero] * n, dtype=x.dtype)
        ray[unbounded_col] = one
        for r, j in enumerate(tab.basis):
            ray[j] = -tab.T[r, unbounded_col]
        return LPResult(UNBOUNDED, x=x, ray=ray, value=float("inf"),
                        basis=list(tab.basis), iterations=tab.iterations)

    # reduced costs of the artificial columns are -y (in flipped-row coordinates)
    y = np.array([zero] * m, dtype=x.dtype)
    for art in range(m):
        y[art] = -tab.d[n + art] * int(tab.signs[art])
    value = sum((c[j] * x[j] for j in range(n)), zero)
    if not exact:
        value = float(value)
    return LPResult(OPTIMAL, x=x, y=y, value=value, basis=list(tab.basis),
                    iterations=tab.iterations)


def enumerate_vertices(c, A_eq, b_eq, tol: float = 1e-9) -> tuple[float, Optional[np.ndarray]]:
    """Brute-force optimum over all basic feasible solutions.

    Independent of :func:`lp_solve`: every column subset of size
    ``rank(A)`` with a nonsingular basis is solved directly.  Only
    meaningful for bounded feasible LPs; returns ``(-inf, None)`` when no
    basic feasible solution exists.
    """
    A = np.atleast_2d(np.asarray(A_eq, dtype=np.float64))
    b = np.asarray(b_eq, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    m, n = A.shape
    # keep a maximal independent set of rows
    keep: list[int] = []
    for r in range(m):
        if np.linalg.matrix_rank(A[keep + [r]]) > len(keep):
            keep.append(r)
    A, b = A[keep], b[keep]
    rank = len(keep)
    best, arg = -np.inf, None
    if rank == 0:
        return (0.0, np.zeros(n)) if np.all(c <= 0) else (np.inf, None)
    scale = 1.0 + np.abs(b).max()
    for cols in combinations(range(n), rank):
        B = A[:, cols]
        if abs(np.linalg.det(B)) < 1e-12:
            continue
        xb = np.linalg.solve(B, b)
        if xb.min() < -tol * scale:
            continue
        x = np.zeros(n)
        x[list(cols)] = np.maximum(xb, 0.0)
        val = float(c @ x)
        if val > best:
            best, arg = val, x
    return best, arg
