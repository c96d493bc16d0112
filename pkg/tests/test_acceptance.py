"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``python3 -m pytest tests/test_acceptance.py -v``; the lines
bypass pytest's output capture.
"""

import functools
import sys
import time
import warnings

import numpy as np
import pytest

from onesided.adversary import (
    OPTIMAL,
    enumerate_vertices,
    fool_no_over,
    fool_no_over_index,
    fool_no_under,
    greedy_rank_certificate,
    lp_solve,
    numerical_rank,
    rank_bound_trace_frobenius,
    verify_certificate,
)
from onesided.bench import SketchConfig, bench_error, random_frequencies
from onesided.detpq import build_incoherent, DetPQSketch
from onesided.nounder import NoUnderSketch, RegimeWarning
from onesided.protocol import (
    geometric_entropy,
    nounder_factory,
    plant_yes,
    players_for,
    run_protocol,
    sample_eta0,
    threshold,
    yes_overlap,
)


def report(capsys, num: int, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {detail}"
    with capsys.disabled():
        print("\n" + line, flush=True)


# 1 -------------------------------------------------------------------------

@functools.cache
def criterion_1():
    start = time.perf_counter()
    rng = np.random.default_rng(1001)
    grid = [(n, eps) for n in (64, 1024, 4096) for eps in (0.1, 0.25, 0.5)]
    dists = ("zipf(1.1)", "uniform", "one-heavy", "zipf(2.0)")
    streams = exceptions = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RegimeWarning)
        for s in range(10_000):
            n, eps = grid[s % len(grid)]
            length = int(rng.integers(1, 20 * n))
            x = random_frequencies(n, dists[s % len(dists)], rng, length)
            sk = NoUnderSketch(n, 2, eps, seed=int(rng.integers(0, 2**63)))
            if s % 50 == 0:
                # a slice of the streams goes through item-by-item updates
                for i in np.flatnonzero(x):
                    sk.update(int(i), int(x[i]))
            else:
                sk.ingest(x)
            exceptions += int(np.sum(sk.estimate_all() < x))
            streams += 1
    elapsed = time.perf_counter() - start
    ok = exceptions == 0 and elapsed < 120
    return ok, f"{streams} streams, {exceptions} underestimates, {elapsed:.1f}s (< 120s)"


def test_criterion_1_no_underestimation(capsys):
    ok, detail = criterion_1()
    report(capsys, 1, ok, detail)
    assert ok, detail


# 2 -------------------------------------------------------------------------

@functools.cache
def criterion_2():
    rep = bench_error(SketchConfig("nounder", 4096, 2, 0.25, seed=2002), 200, "zipf(1.1)")
    ok = rep.failure_fraction <= 0.05 and rep.one_sided_violations == 0 and rep.wall_time < 300
    return ok, (f"failure fraction {rep.failure_fraction:.3f} (<= 0.05), "
                f"violations {rep.one_sided_violations}, {rep.wall_time:.1f}s")


def test_criterion_2_nounder_error_tail(capsys):
    ok, detail = criterion_2()
    report(capsys, 2, ok, detail)
    assert ok, detail


# 3 -------------------------------------------------------------------------

def corpus_vector(rng, n, kind):
    if kind == 0:
        return rng.integers(0, 5, size=n)
    if kind == 1:
        return random_frequencies(n, "zipf(1.1)", rng, int(rng.integers(1, 50 * n)))
    if kind == 2:
        return random_frequencies(n, "one-heavy", rng, int(rng.integers(2, 20 * n)))
    if kind == 3:
        x = np.zeros(n, dtype=np.int64)
        x[rng.integers(n)] = rng.integers(1, 10**9)
        return x
    if kind == 4:
        return rng.integers(0, 10**6, size=n) * (rng.random(n) < 0.05)
    return (rng.random(n) * 1000).round(3)  # nonnegative reals


@functools.cache
def criterion_3():
    rng = np.random.default_rng(3003)
    matrices = {}
    band_exceptions = 0
    ns = rng.integers(2, 513, size=1000)
    ns[:3] = (2, 100, 512)
    for v, n in enumerate(ns):
        n = int(n)
        if n not in matrices:
            matrices[n] = build_incoherent(n)
        x = corpus_vector(rng, n, v % 6)
        sk = DetPQSketch(matrices[n])
        sk.ingest(x)
        s = float(np.sum(x))
        est = sk.estimate_all()
        tol = 1e-9 * s
        band_exceptions += int(np.sum(est > x + tol))
        band_exceptions += int(np.sum(est < x - 2 / 9 * (s - x) - tol))
    coherence_bad = 0
    for mat in matrices.values():
        if not mat.coherence() <= (mat.d - 1) / mat.q:
            coherence_bad += 1
    ok = band_exceptions == 0 and coherence_bad == 0
    return ok, (f"1000 vectors, {band_exceptions} band exceptions; "
                f"{len(matrices)} matrices checked exhaustively, {coherence_bad} over (d-1)/q")


def test_criterion_3_deterministic_band(capsys):
    ok, detail = criterion_3()
    report(capsys, 3, ok, detail)
    assert ok, detail


# 4 -------------------------------------------------------------------------

@functools.cache
def criterion_4():
    rep = bench_error(SketchConfig("noover", 4096, 2, 0.25, seed=4004), 200, "zipf(1.1)")
    ok = rep.one_sided_violations == 0 and rep.failure_fraction <= 0.15
    return ok, (f"violations {rep.one_sided_violations}, failure fraction "
                f"{rep.failure_fraction:.3f} (<= 0.15), {rep.wall_time:.1f}s")


def test_criterion_4_noover_tail(capsys):
    ok, detail = criterion_4()
    report(capsys, 4, ok, detail)
    assert ok, detail


# 5 -------------------------------------------------------------------------

def random_lp(rng, s):
    k, n = int(rng.integers(1, 6)), int(rng.integers(2, 13))
    if s % 2:
        A = rng.integers(-3, 4, size=(k, n)).astype(float)
        A[0] = np.abs(A[0]) + 1
        x0 = rng.integers(0, 3, size=n) * (rng.random(n) < 0.5)
        c = rng.integers(-4, 5, size=n).astype(float)
    else:
        A = rng.normal(size=(k, n))
        A[0] = np.abs(A[0]) + 0.05
        x0 = rng.random(n) * (rng.random(n) < 0.6)
        c = rng.normal(size=n)
    return c, A, A @ x0


@functools.cache
def criterion_5():
    rng = np.random.default_rng(5005)
    mismatches = 0
    worst = 0.0
    certs = bad_certs = 0
    for s in range(200):
        c, A, b = random_lp(rng, s)
        res = lp_solve(c, A, b)
        best, _ = enumerate_vertices(c, A, b)
        rel = abs(res.value - best) / max(1.0, abs(best)) if res.status == OPTIMAL else np.inf
        worst = max(worst, rel)
        mismatches += rel > 1e-8
        # fooling certificates for the same matrix, each rechecked from scratch
        n = A.shape[1]
        i = int(rng.integers(n))
        for cert in (fool_no_under(A, i), fool_no_over_index(A, i, max(1.0, n / 4))):
            certs += 1
            bad_certs += not verify_certificate(A, cert, tol=1e-9)["ok"]
    ok = mismatches == 0 and bad_certs == 0
    return ok, (f"200 LPs, {mismatches} mismatches (worst rel {worst:.1e} <= 1e-8); "
                f"{certs} certificates, {bad_certs} failed verification at 1e-9")


def test_criterion_5_lp_oracle(capsys):
    ok, detail = criterion_5()
    report(capsys, 5, ok, detail)
    assert ok, detail


# 6 -------------------------------------------------------------------------

def nested_ensemble(n, k, seed=6006):
    """All-ones mass row plus the first k-1 rows of one fixed Gaussian matrix."""
    G = np.random.default_rng(seed).normal(size=(n, n))
    return np.vstack([np.ones(n), G[: k - 1]])


@functools.cache
def criterion_6():
    n, T = 128, 8
    means, cs = [], []
    bad = 0
    for k in (1, 2, 4, 8, 16, 32):
        A = nested_ensemble(n, k)
        certs = [fool_no_under(A, i) for i in range(n)]
        bad += sum(not c.residuals["ok"] for c in certs)
        vals = np.array([c.value for c in certs])
        means.append(float(vals.mean()))
        cs.append(k * float(vals.max()))
    monotone = all(b <= a + 1e-12 for a, b in zip(means, means[1:]))
    sizes = {}
    for k in (1, 2):
        S, certs = fool_no_over(nested_ensemble(n, k), T)
        bad += sum(not c.residuals["ok"] for c in certs)
        sizes[k] = len(S)
    S_id, certs = fool_no_over(np.eye(n), T)
    bad += sum(not c.residuals["ok"] for c in certs)
    ok = monotone and means[0] == 1.0 and all(v >= n / 2 for v in sizes.values()) and not S_id and bad == 0
    detail = (f"means {[round(m, 3) for m in means]} (non-increasing, k=1 exactly {means[0]}); "
              f"|S| k=1,2: {sizes[1]},{sizes[2]} (>= 64), identity {len(S_id)}; "
              f"measured c = k*max opt {[round(c, 2) for c in cs]}; {bad} bad certificates")
    return ok, detail


def test_criterion_6_witness_shape(capsys):
    ok, detail = criterion_6()
    report(capsys, 6, ok, detail)
    assert ok, detail


# 7 -------------------------------------------------------------------------

def random_square(rng, s):
    n = int(rng.integers(1, 65))
    kind = s % 4
    if kind == 0:
        return rng.normal(size=(n, n))
    if kind == 1:
        r = int(rng.integers(1, n + 1))
        return rng.normal(size=(n, r)) @ rng.normal(size=(r, n))
    if kind == 2:
        return rng.normal(size=(n, n)) * (rng.random((n, n)) < 0.1)
    return rng.integers(-2, 3, size=(n, n)).astype(float)


def row_sum_matrix(rng):
    n = int(rng.integers(2, 65))
    T = float(rng.uniform(1, 16))
    M = rng.normal(size=(n, n)) * (rng.random((n, n)) < rng.uniform(0.05, 1))
    np.fill_diagonal(M, 0)
    rows = np.abs(M).sum(axis=1, keepdims=True)
    diag = rng.uniform(1, max(1.0, T / 2), size=n)
    room = (T - diag)[:, None] * rng.random((n, 1))
    M = np.where(rows > 0, M / np.where(rows > 0, rows, 1) * room, 0.0)
    np.fill_diagonal(M, diag * rng.choice([-1, 1], n))
    return M, T


@functools.cache
def criterion_7():
    rng = np.random.default_rng(7007)
    bad = 0
    for s in range(1000):
        M = random_square(rng, s)
        rk = numerical_rank(M)
        bad += rank_bound_trace_frobenius(M) > rk + 1e-9
        bad += greedy_rank_certificate(M).bound > rk + 1e-9
    hyp_bad = 0
    for _ in range(1000):
        M, T = row_sum_matrix(rng)
        assert np.all(np.abs(np.diag(M)) >= 1) and np.all(np.abs(M).sum(axis=1) <= T + 1e-9)
        rk = numerical_rank(M)
        hyp_bad += rank_bound_trace_frobenius(M) > rk + 1e-9
        hyp_bad += greedy_rank_certificate(M).bound > rk + 1e-9
    ident = all(greedy_rank_certificate(np.eye(n)).bound == n / 2 for n in (1, 2, 7, 16, 64))
    ok = bad == 0 and hyp_bad == 0 and ident
    return ok, (f"{bad} unsound bounds on 1000 random, {hyp_bad} on 1000 row-sum matrices; "
                f"greedy(I_n) = n/2: {ident}")


def test_criterion_7_rank_soundness(capsys):
    ok, detail = criterion_7()
    report(capsys, 7, ok, detail)
    assert ok, detail


# 8 -------------------------------------------------------------------------

@functools.cache
def criterion_8():
    n, p = 64, 2
    parts = []
    ok = True
    for eps in (0.125, 0.25):
        k = players_for(n, p, eps)
        l = yes_overlap(k)
        assert k >= 4 and k == 4 * eps * n ** (1 / p) and threshold(k) > 1
        algo = nounder_factory(n, p, eps)
        rng = np.random.default_rng(8008 + k)
        wrong = aborts = 0
        rounds = []
        for t in range(1000):
            s = int(rng.integers(0, 2**62))
            for inst in (sample_eta0(n, k, s, l), plant_yes(n, k, l, int(rng.integers(n)), s)):
                tr = run_protocol(inst, algo, eps, p, max_restarts=64 * k, seed=s)
                wrong += tr.answer not in (inst.case, "ABORT")
                aborts += tr.aborted
                rounds.append(tr.rounds)
        mean_r = float(np.mean(rounds))
        ok = ok and wrong == 0 and aborts == 0 and mean_r <= 2
        parts.append(f"k={k} l={l}: {wrong} wrong, {aborts} aborts, mean rounds {mean_r:.3f}")
    h = geometric_entropy(0.5)
    ok = ok and h == 2.0
    return ok, "; ".join(parts) + f"; geometric_entropy(1/2) = {h}"


def test_criterion_8_protocol(capsys):
    ok, detail = criterion_8()
    report(capsys, 8, ok, detail)
    assert ok, detail


# 9 -------------------------------------------------------------------------

def test_criterion_9_substitute(capsys):
    # asymptotic lower bounds are not measurable; criteria 5-8 stand in for them
    results = {num: fn()[0] for num, fn in ((5, criterion_5), (6, criterion_6), (7, criterion_7), (8, criterion_8))}
    ok = all(results.values())
    report(capsys, 9, ok, f"substitute suites 5-8 all pass: {results}")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
