"""Monte-Carlo error benchmark: random streams, every estimate checked against exact counts."""

from __future__ import annotations

import re
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .classic import CountMinSketch, CountSketch
from .core import norm
from .detpq import DetPQSketch
from .noover import NoOverSketch
from .nounder import NoUnderSketch, RegimeWarning

ALGOS = ("cm", "cs", "nounder", "noover", "detpq")
# the side each algorithm must never err on
ONE_SIDED = {"cm": "under", "nounder": "under", "noover": "over", "detpq": "over", "cs": None}
# norm each algorithm's guarantee is stated in; None means the configured p
GUARANTEE_NORM = {"cm": 1.0, "cs": 2.0, "nounder": None, "noover": None, "detpq": None}
ROUNDOFF = 1e-9


@dataclass(frozen=True)
class SketchConfig:
    algo: str
    n: int
    p: float = 2.0
    eps: float = 0.25
    seed: int = 0
    eps_q: Optional[float] = None

    def __post_init__(self):
        if self.algo not in ALGOS:
            raise ValueError(f"algo must be one of {ALGOS}, got {self.algo!r}")
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.eps_q is not None and self.algo != "nounder":
            raise ValueError("eps_q applies to the nounder sketch only")

    def build(self, seed: Optional[int] = None):
        """Fresh empty sketch; ``seed`` overrides the configured hash seed."""
        s = self.seed if seed is None else seed
        if self.algo == "cm":
            return CountMinSketch.for_error(self.n, self.eps, s)
        if self.algo == "cs":
            return CountSketch.for_error(self.n, self.eps, s)
        if self.algo == "nounder":
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RegimeWarning)
                return NoUnderSketch(self.n, self.p, self.eps, s)
        if self.algo == "noover":
            return NoOverSketch(self.n, self.p, self.eps, s)
        return DetPQSketch.for_universe(self.n)


@dataclass
class BenchReport:
    algo: str
    params: dict
    trials: int
    failure_fraction: float
    max_error_ratio: float
    one_sided_violations: Optional[int]
    wall_time: float = field(compare=False)
    counters: int = 0

    def to_record(self) -> dict:
        return asdict(self)


_ZIPF = re.compile(r"^zipf\(([0-9.eE+-]+)\)$")


def parse_distribution(dist: str) -> tuple[str, float]:
    if dist in ("uniform", "one-heavy"):
        return dist, 0.0
    m = _ZIPF.match(dist)
    if m is None:
        raise ValueError(f"distribution must be zipf(s), uniform or one-heavy, got {dist!r}")
    s = float(m.group(1))
    if not s > 0:
        raise ValueError("zipf exponent must be positive")
    return "zipf", s


def random_frequencies(n: int, dist: str, rng: np.random.Generator,
                       length: Optional[int] = None) -> np.ndarray:
    """Counts of an insertion stream of ``length`` draws (default ``8n``)."""
    kind, s = parse_distribution(dist)
    length = 8 * n if length is None else int(length)
    if kind == "zipf":
        w = 1.0 / np.arange(1, n + 1, dtype=np.float64) ** s
        w = w[rng.permutation(n)]
        return rng.multinomial(length, w / w.sum()).astype(np.int64)
    if kind == "uniform" or n == 1:
        return rng.multinomial(length, np.full(n, 1.0 / n)).astype(np.int64)
    heavy = int(rng.integers(n))
    x = np.zeros(n, dtype=np.int64)
    x[heavy] = length // 2
    rest = np.delete(np.arange(n), heavy)
    x[rest] = rng.multinomial(length - length // 2, np.full(n - 1, 1.0 / (n - 1)))
    return x


def _trial(config: SketchConfig, dist: str, length: Optional[int], seq: np.random.SeedSequence):
    rng = np.random.default_rng(seq)
    sketch_seed = int(seq.generate_state(1, dtype=np.uint64)[0])
    x = random_frequencies(config.n, dist, rng, length)
    sk = config.build(sketch_seed)
    sk.ingest(x)
    if config.eps_q is not None:
        sk = sk.quantize(config.eps_q)
    est = np.asarray(sk.estimate_all(), dtype=np.float64)
    err = est - x
    l1 = float(x.sum())
    xp = norm(x, config.p)
    gp = GUARANTEE_NORM[config.algo] or config.p
    xg = xp if gp == config.p else norm(x, gp)
    side = ONE_SIDED[config.algo]
    slack = ROUNDOFF * max(l1, 1.0)
    if side == "under":
        violations = int(np.sum(err < -slack))
    elif side == "over":
        violations = int(np.sum(err > slack))
    else:
        violations = 0
    if config.algo == "detpq":
        mu = sk.matrix.mu_target
        lower = x - 2 * mu / (1 - mu) * (l1 - x) - slack
        failed = bool(np.any(est < lower))
    elif config.algo == "noover":
        failed = bool(np.max(-err) > config.eps * xg)
    elif side == "under":
        failed = bool(np.max(err) > config.eps * xg)
    else:
        failed = bool(np.max(np.abs(err)) > config.eps * xg)
    ratio = float(np.max(np.abs(err)) / xp) if xp > 0 else 0.0
    return failed, ratio, violations, int(sk.size)


def bench_error(config: SketchConfig, trials: int, distribution: str = "zipf(1.1)",
                length: Optional[int] = None, workers: int = 1) -> BenchReport:
    """Run ``trials`` independent streams; identical ``config.seed`` gives an identical report.

    Failure means an error beyond ``eps`` times the norm the algorithm's
    guarantee uses (l1 for Count-Min, l2 for Count-Sketch, ``p`` otherwise) on
    the guaranteed side, or leaving the incoherence band for ``detpq``.
    ``max_error_ratio`` is always relative to ``||x||_p``.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    parse_distribution(distribution)
    config.build(config.seed)  # surface parameter errors before any work
    seqs = np.random.SeedSequence(config.seed).spawn(trials)
    start = time.perf_counter()
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_trial, [config] * trials, [distribution] * trials,
                                    [length] * trials, seqs))
    else:
        results = [_trial(config, distribution, length, s) for s in seqs]
    wall = time.perf_counter() - start
    fails = sum(r[0] for r in results)
    violations = sum(r[2] for r in results)
    return BenchReport(
        algo=config.algo,
        params={"n": config.n, "p": config.p, "eps": config.eps, "seed": config.seed,
                "eps_q": config.eps_q, "distribution": distribution},
        trials=trials,
        failure_fraction=fails / trials,
        max_error_ratio=max(r[1] for r in results),
        one_sided_violations=None if ONE_SIDED[config.algo] is None else violations,
        wall_time=wall,
        counters=results[0][3],
    )
