"""Fooling vectors and dual certificates for one-sided linear sketches.

For a sketch matrix ``A`` and a reference vector ``v`` every nonnegative
``x`` with ``Ax = Av`` is indistinguishable from ``v``.  A sketch that
never underestimates must therefore report at least ``max x_i`` for
``v_i``; one that never overestimates can report at most ``min x_i``.
Both extremes are linear programs.  When the LP optimum is small, the dual
returns a row-space vector ``z`` that proves no fooling vector exists.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from .lp import OPTIMAL, UNBOUNDED, LPError, lp_solve

NO_UNDER = "no-under"
NO_OVER = "no-over"
TOL = 1e-9


@dataclass
class FoolingCertificate:
    kind: str
    index: int
    status: str
    x: np.ndarray
    value: float
    reference: np.ndarray
    z: Optional[np.ndarray] = None
    ray: Optional[np.ndarray] = None
    T: Optional[float] = None
    residuals: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        out = asdict(self)
        for key in ("x", "reference", "z", "ray"):
            if out[key] is not None:
                out[key] = [float(v) for v in out[key]]
        out["value"] = float(self.value)
        return out


def uniform_reference(n: int) -> np.ndarray:
    return np.full(n, 1.0 / n)


def spike_reference(n: int, i: int, T: float) -> np.ndarray:
    """``v^(i)``: coordinate ``i`` is 1, every other coordinate is ``1/T``."""
    v = np.full(n, 1.0 / T)
    v[i] = 1.0
    return v


def _matrix(A) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def fool_no_under(A, i: int, exact: bool = False, target: Optional[float] = None) -> FoolingCertificate:
    """Maximize ``x_i`` over ``{x >= 0 : Ax = Av}`` with ``v`` the uniform vector.

    If the LP is unbounded the returned ``x`` is moved along the ray until
    ``x_i >= target`` (default ``1``), so it is still a concrete fooling vector.
    """
    A = _matrix(A)
    n = A.shape[1]
    if not 0 <= i < n:
        raise ValueError(f"index {i} outside [0, {n})")
    v = uniform_reference(n)
    c = np.zeros(n)
    c[i] = 1.0
    res = lp_solve(c, A, A @ v, exact=exact)
    if res.status == OPTIMAL:
        x = np.asarray(res.x, dtype=np.float64)
        z = A.T @ np.asarray(res.y, dtype=np.float64)
        cert = FoolingCertificate(NO_UNDER, i, OPTIMAL, x, float(res.value), v, z=z)
    elif res.status == UNBOUNDED:
        x = np.asarray(res.x, dtype=np.float64)
        ray = np.asarray(res.ray, dtype=np.float64)
        goal = 1.0 if target is None else float(target)
        if x[i] < goal:
            x = x + (goal - x[i]) / ray[i] * ray
        cert = FoolingCertificate(NO_UNDER, i, UNBOUNDED, x, float("inf"), v, ray=ray)
    else:
        # x = v is always feasible, so this is a numerical failure
        raise LPError(f"fooling LP for index {i} reported {res.status}")
    cert.residuals = verify_certificate(A, cert)
    return cert


def zero_threshold(A: np.ndarray, v: np.ndarray) -> float:
    return TOL * (1.0 + float(np.abs(A @ v).max(initial=0.0)))


def fool_no_over_index(A, i: int, T: float, exact: bool = False) -> FoolingCertificate:
    """Minimize ``x_i`` over ``{x >= 0 : Ax = A v^(i)}``."""
    A = _matrix(A)
    n = A.shape[1]
    v = spike_reference(n, i, T)
    c = np.zeros(n)
    c[i] = -1.0
    res = lp_solve(c, A, A @ v, exact=exact)
    if res.status != OPTIMAL:
        # the objective is bounded by 0 and v is feasible
        raise LPError(f"no-over LP for index {i} reported {res.status}")
    x = np.asarray(res.x, dtype=np.float64)
    z = A.T @ np.asarray(res.y, dtype=np.float64)
    cert = FoolingCertificate(NO_OVER, i, OPTIMAL, x, -float(res.value), v, z=z, T=T)
    cert.residuals = verify_certificate(A, cert)
    return cert


def fool_no_over(A, T: float, exact: bool = False) -> tuple[list[int], list[FoolingCertificate]]:
    """Indices ``i`` whose spike vector can be faked with ``x_i = 0``, plus every certificate."""
    A = _matrix(A)
    n = A.shape[1]
    if not 1 <= T <= n / 2:
        raise ValueError("T must satisfy 1 <= T <= n/2")
    certs = [fool_no_over_index(A, i, T, exact) for i in range(n)]
    S = [c.index for c in certs if c.value <= zero_threshold(A, c.reference)]
    return S, certs


def dual_certificate_under(A, i: int, T: float, exact: bool = False) -> Optional[np.ndarray]:
    """Row-space vector ``z >= e_i`` with ``sum(z) <= T``, if the LP optimum is at most ``T/n``."""
    A = _matrix(A)
    n = A.shape[1]
    cert = fool_no_under(A, i, exact=exact)
    if cert.status != OPTIMAL or cert.value * n > T * (1 + TOL):
        return None
    return cert.z


def _rowspan_residual(A: np.ndarray, z: np.ndarray) -> float:
    w, *_ = np.linalg.lstsq(A.T, z, rcond=None)
    return float(np.abs(A.T @ w - z).max(initial=0.0))


def verify_certificate(A, cert: FoolingCertificate, tol: float = TOL) -> dict:
    """Recheck a certificate from scratch; never trusts solver internals.

    Returns the residuals and an ``ok`` flag.  All tolerances are relative
    to the scale of ``A`` and of the vectors involved.
    """
    A = _matrix(A)
    n = A.shape[1]
    x, v = cert.x, cert.reference
    fro = float(np.linalg.norm(A)) or 1.0
    xscale = max(1.0, float(np.abs(x).max(initial=0.0)))
    out = {
        "feasibility": float(np.abs(A @ x - A @ v).max(initial=0.0)),
        "feasibility_limit": tol * fro * xscale,
        "min_entry": float(x.min(initial=0.0)),
    }
    ok = out["feasibility"] <= out["feasibility_limit"] and out["min_entry"] >= -tol * xscale
    e = np.zeros(n)
    e[cert.index] = 1.0 if cert.kind == NO_UNDER else -1.0
    if cert.status == OPTIMAL:
        objective = x[cert.index]
        ok = ok and abs(objective - cert.value) <= tol * (1 + abs(cert.value)) * xscale
    if cert.z is not None:
        z = cert.z
        zscale = max(1.0, float(np.abs(z).max(initial=0.0)))
        out["dual_slack"] = float((z - e).min())
        out["rowspan_residual"] = _rowspan_residual(A, z)
        # strong duality: z.v equals the primal objective (negated for no-over)
        sign = 1.0 if cert.kind == NO_UNDER else -1.0
        out["duality_gap"] = float(abs(z @ v - sign * cert.value))
        ok = (
            ok
            and out["dual_slack"] >= -tol * zscale
            and out["rowspan_residual"] <= tol * zscale * fro
            and out["duality_gap"] <= tol * zscale * (1 + float(np.abs(v).sum()))
        )
        if cert.kind == NO_UNDER:
            out["dual_mass"] = float(z.sum())
    if cert.ray is not None:
        r = cert.ray
        rscale = max(1.0, float(np.abs(r).max()))
        out["ray_residual"] = float(np.abs(A @ r).max(initial=0.0))
        ok = ok and out["ray_residual"] <= tol * fro * rscale and r.min() >= -tol * rscale
        ok = ok and r[cert.index] > 0
    out["ok"] = bool(ok)
    return out


def verify_dual_under(A, z: np.ndarray, i: int, T: float, tol: float = TOL) -> dict:
    A = _matrix(A)
    e = np.zeros(A.shape[1])
    e[i] = 1.0
    zscale = max(1.0, float(np.abs(z).max()))
    out = {
        "dual_slack": float((z - e).min()),
        "rowspan_residual": _rowspan_residual(A, z),
        "mass": float(z.sum()),
        "T": float(T),
    }
    out["ok"] = bool(
        out["dual_slack"] >= -tol * zscale
        and out["rowspan_residual"] <= tol * zscale * max(1.0, float(np.linalg.norm(A)))
        and out["mass"] <= T + tol * zscale * A.shape[1]
    )
    return out


@dataclass
class AttackRecord:
    n: int
    rows: int
    T: float
    threshold: float
    index: int
    optimum: float
    forced_estimate: float
    true_value: float
    gap: float
    measured_c: float
    optima: np.ndarray
    certificate: FoolingCertificate


def attack_sketch(builder: Callable[[int, int], object], n: int, k_total: int) -> AttackRecord:
    """Fool a concrete linear sketch on the uniform vector.

    ``builder(n, k_total)`` must return a sketch exposing ``matrix()``,
    ``with_counter_vector(y)`` and ``estimate(i)``.  The sketch sees only
    ``A v``; since it never underestimates it must answer at least ``x_i``
    for every fooling vector ``x``, hence at least the LP optimum.
    """
    sketch = builder(n, k_total)
    A = sketch.matrix()
    rows = A.shape[0]
    certs = [fool_no_under(A, i) for i in range(n)]
    optima = np.array([c.value for c in certs])
    best = int(np.argmax(optima))
    cert = certs[best]
    v = uniform_reference(n)
    forced = float(sketch.with_counter_vector(A @ v).estimate(best))
    T = n / rows
    return AttackRecord(
        n=n,
        rows=rows,
        T=T,
        threshold=T / n,
        index=best,
        optimum=float(optima[best]),
        forced_estimate=forced,
        true_value=float(v[best]),
        gap=forced - float(v[best]),
        measured_c=rows * float(optima[best]),
        optima=optima,
        certificate=cert,
    )
