"""Command-line entry point.

Exit codes: 0 success, 2 invalid input or parameters, 3 a certificate or
correctness check failed.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from typing import Optional, Sequence

import numpy as np

from .adversary import (
    LPError,
    dual_certificate_under,
    fool_no_over,
    fool_no_under,
    greedy_rank_certificate,
    numerical_rank,
    rank_bound_trace_frobenius,
)
from .bench import ALGOS, SketchConfig, bench_error
from .core import apply_stream
from .formats import format_records, load_sketch, read_matrix, read_stream, save_sketch
from .nounder import NoUnderSketch, RegimeWarning
from .protocol import nounder_factory, plant_yes, players_for, run_protocol, sample_eta0, yes_overlap

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_CERT = 3


class CertificationError(RuntimeError):
    pass


def _num(v) -> str:
    v = float(v)
    return str(int(v)) if v.is_integer() else repr(v)


def _emit(obj, path: Optional[str] = None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_build(args) -> int:
    n, model, updates = read_stream(args.input)
    if n != args.n:
        raise ValueError(f"--n {args.n} does not match the stream header n={n}")
    if args.algo == "detpq" and args.eps is not None:
        raise ValueError("detpq takes no --eps")
    cfg = SketchConfig(args.algo, n, args.p, 0.25 if args.eps is None else args.eps, args.seed)
    x = apply_stream(updates, n, model).counts
    sk = cfg.build()
    sk.ingest(x)
    save_sketch(sk, args.out)
    print(f"{args.algo} sketch: n={n} counters={sk.size} updates={len(updates)} -> {args.out}")
    return EXIT_OK


def cmd_query(args) -> int:
    sk = load_sketch(args.sketch)
    if args.all:
        for i, v in enumerate(np.asarray(sk.estimate_all())):
            print(f"{i} {_num(v)}")
    else:
        print(_num(sk.estimate(args.item)))
    return EXIT_OK


def cmd_merge(args) -> int:
    a, b = load_sketch(args.a), load_sketch(args.b)
    if type(a) is not type(b):
        raise ValueError(f"cannot merge {a.algo} with {b.algo}")
    save_sketch(a.merge(b), args.out)
    print(f"merged {a.algo} sketches -> {args.out}")
    return EXIT_OK


def cmd_quantize(args) -> int:
    sk = load_sketch(args.sketch)
    if not isinstance(sk, NoUnderSketch):
        raise ValueError("only nounder sketches can be quantized")
    out = sk.quantize(args.eps_q)
    save_sketch(out, args.out)
    print(f"quantized to base {out.quant_base!r}: {out.state_bits()} bits -> {args.out}")
    return EXIT_OK


def cmd_fool(args) -> int:
    A = read_matrix(args.matrix)
    n = A.shape[1]
    if args.kind == "under":
        certs = [fool_no_under(A, i) for i in range(n)]
        optima = np.array([c.value for c in certs])
        summary = {
            "kind": "under",
            "rows": int(A.shape[0]),
            "n": n,
            "max_optimum": float(optima.max()),
            "mean_optimum": float(optima.mean()),
            "measured_c": float(A.shape[0] * optima.max()),
        }
        if args.T is not None:
            duals = [i for i in range(n) if dual_certificate_under(A, i, args.T) is not None]
            summary["T"] = args.T
            summary["dual_certified"] = duals
    else:
        if args.T is None:
            raise ValueError("fool over needs --T")
        S, certs = fool_no_over(A, args.T)
        summary = {"kind": "over", "rows": int(A.shape[0]), "n": n, "T": args.T,
                   "S": S, "size_S": len(S)}
    records = [c.to_record() for c in certs]
    bad = [c.index for c in certs if not c.residuals.get("ok")]
    summary["failed_verification"] = bad
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(format_records(records))
    _emit(summary)
    if bad:
        raise CertificationError(f"{len(bad)} certificates failed verification")
    return EXIT_OK


def cmd_rank(args) -> int:
    M = read_matrix(args.matrix)
    if M.shape[0] != M.shape[1]:
        raise ValueError("rank certificates need a square matrix")
    cert = greedy_rank_certificate(M)
    tf = rank_bound_trace_frobenius(M)
    rk = numerical_rank(M)
    _emit({
        "numerical_rank": rk,
        "trace_frobenius_bound": tf,
        "greedy_bound": cert.bound,
        "greedy_level": cert.level,
        "greedy_rows": cert.rows,
        "bands": {str(k): v for k, v in cert.bands.items()},
    })
    if max(tf, cert.bound) > rk + 1e-9:
        raise CertificationError("a rank bound exceeds the numerical rank")
    return EXIT_OK


def cmd_simulate(args) -> int:
    k = players_for(args.n, args.p, args.eps)
    if args.players != k:
        raise ValueError(f"--players {args.players} but 4*eps*n^(1/p) rounds to {k}")
    l = yes_overlap(k)
    algo = nounder_factory(args.n, args.p, args.eps)
    rng = np.random.default_rng(args.seed)
    wrong = aborts = 0
    rounds, bits = [], []
    for trial in range(args.trials):
        s = int(rng.integers(0, 2**62))
        for inst in (sample_eta0(args.n, k, s, l), plant_yes(args.n, k, l, int(rng.integers(args.n)), s)):
            tr = run_protocol(inst, algo, args.eps, args.p, max_restarts=args.max_restarts, seed=s)
            wrong += tr.answer not in (inst.case, "ABORT")
            aborts += tr.aborted
            rounds.append(tr.rounds)
            bits.append(tr.bits)
    _emit({
        "n": args.n, "players": k, "overlap": l, "trials": args.trials,
        "wrong": wrong, "aborts": aborts,
        "mean_rounds": float(np.mean(rounds)), "max_rounds": int(max(rounds)),
        "mean_bits": float(np.mean(bits)),
    })
    if wrong or aborts:
        raise CertificationError("protocol produced wrong answers or aborts")
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = SketchConfig(args.algo, args.n, args.p, args.eps, args.seed, args.eps_q)
    rep = bench_error(cfg, args.trials, args.dist, workers=args.workers)
    _emit(rep.to_record())
    if rep.one_sided_violations:
        raise CertificationError("one-sided guarantee violated")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="onesided", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="sketch a stream file")
    b.add_argument("--algo", choices=ALGOS, required=True)
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--p", type=float, default=2.0)
    b.add_argument("--eps", type=float)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--input", required=True)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_build)

    q = sub.add_parser("query", help="point queries on a saved sketch")
    q.add_argument("--sketch", required=True)
    g = q.add_mutually_exclusive_group(required=True)
    g.add_argument("--item", type=int)
    g.add_argument("--all", action="store_true")
    q.set_defaults(func=cmd_query)

    m = sub.add_parser("merge", help="add two compatible sketches")
    m.add_argument("--a", required=True)
    m.add_argument("--b", required=True)
    m.add_argument("--out", required=True)
    m.set_defaults(func=cmd_merge)

    z = sub.add_parser("quantize", help="round nounder counters up to powers of 1+eps_q")
    z.add_argument("--sketch", required=True)
    z.add_argument("--eps-q", type=float, required=True)
    z.add_argument("--out", required=True)
    z.set_defaults(func=cmd_quantize)

    f = sub.add_parser("fool", help="fooling vectors for a sketch matrix")
    f.add_argument("kind", choices=("under", "over"))
    f.add_argument("--matrix", required=True)
    f.add_argument("--T", type=float)
    f.add_argument("--report")
    f.set_defaults(func=cmd_fool)

    r = sub.add_parser("rank-cert", help="rank lower bounds for a square matrix")
    r.add_argument("--matrix", required=True)
    r.set_defaults(func=cmd_rank)

    s = sub.add_parser("simulate", help="run the disjointness protocol")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--players", type=int, required=True)
    s.add_argument("--eps", type=float, required=True)
    s.add_argument("--p", type=float, default=2.0)
    s.add_argument("--trials", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--max-restarts", type=int)
    s.set_defaults(func=cmd_simulate)

    be = sub.add_parser("bench", help="Monte-Carlo error benchmark")
    be.add_argument("--algo", choices=ALGOS, required=True)
    be.add_argument("--n", type=int, required=True)
    be.add_argument("--p", type=float, default=2.0)
    be.add_argument("--eps", type=float, default=0.25)
    be.add_argument("--trials", type=int, default=100)
    be.add_argument("--dist", default="zipf(1.1)")
    be.add_argument("--seed", type=int, default=0)
    be.add_argument("--eps-q", type=float)
    be.add_argument("--workers", type=int, default=1)
    be.set_defaults(func=cmd_bench)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RegimeWarning)
            return args.func(args)
    except (CertificationError, LPError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CERT
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
