"""Command-line front end: ``gleeful {hist,records,reps,verify,bench}``."""

from __future__ import annotations

import argparse
import json
import sys
import time
from decimal import Decimal, InvalidOperation

import numpy as np

from . import stats as st
from .oracle import OracleCapError, f_values_bruteforce, representations_of
from .pqueue import QueueCorruption, run_pq
from .puzzle import CounterOverflow, PuzzleConfig, run_puzzle

INT64_MAX = 2**63 - 1
ALGOS = ("puzzle", "pq-sieve", "pq-test", "oracle")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(ValueError):
    pass


def parse_int(text: str) -> int:
    """Exact integer from '1000', '1e6', '2.5e3' or '1_000'; rejects fractions."""
    try:
        d = Decimal(text.replace("_", ""))
    except InvalidOperation:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not d.is_finite() or d != d.to_integral_value():
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    n = int(d)
    if n > INT64_MAX:
        raise argparse.ArgumentTypeError(f"{text} exceeds 2^63-1")
    return n


def _positive(text: str) -> int:
    n = parse_int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return n


def bounds_of(args) -> tuple[int, int]:
    """Half-open [x1, x2) from --x or --x1/--x2."""
    if args.x is not None:
        if args.x1 is not None or args.x2 is not None:
            raise UsageError("give either --x or --x1/--x2, not both")
        x1, x2 = 1, args.x + 1
    elif args.x1 is not None and args.x2 is not None:
        x1, x2 = args.x1, args.x2
    else:
        raise UsageError("a bound is required: --x or --x1 and --x2")
    if not 1 <= x1 < x2 or x2 - 1 > INT64_MAX:
        raise UsageError("need 1 <= x1 < x2")
    return x1, x2


def compute(algo: str, x1: int, x2: int, sink=None, delta=None, interval_len=None,
            workers: int = 1, prime_bound=None, queue_impl: str = "heap", info: dict | None = None):
    """Histogram over [x1, x2) with the chosen algorithm; f blocks go to ``sink`` in order."""
    info = {} if info is None else info
    x = x2 - 1
    if algo == "oracle":
        f = f_values_bruteforce(x)[x1:x2].astype(np.uint8)
        if sink is not None:
            sink(x1, f)
        info["memory_bytes"] = 4 * (x + 1)
        return st.Histogram.from_f(f, x1)
    if algo == "puzzle":
        cfg = PuzzleConfig(x, delta, workers, start=x1)
        h = run_puzzle(cfg, sink=sink, stats=info)
        info["memory_bytes"] = cfg.delta + 8 * info["prime_list_len"]
        info.pop("m_cutoffs", None)
        return h
    if algo in ("pq-sieve", "pq-test"):
        return run_pq(x, interval_len, algo[3:], workers, queue_impl, prime_bound,
                      sink=sink, stats=info, start=x1)
    raise UsageError(f"unknown algorithm {algo!r}")


def _write(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _summary(lines, to_stderr: bool) -> None:
    print("\n".join(lines), file=sys.stderr if to_stderr else sys.stdout)


def _algo_kwargs(args) -> dict:
    return dict(delta=args.delta, interval_len=args.interval_len, workers=args.workers,
                prime_bound=args.prime_bound_B)


def cmd_hist(args) -> int:
    x1, x2 = bounds_of(args)
    checkpoints = []
    if args.density_out:
        c = 10
        while c < x2:
            if c >= x1:
                checkpoints.append(c)
            c *= 10
        if not checkpoints or checkpoints[-1] != x2 - 1:
            checkpoints.append(x2 - 1)
    sink = st.BlockSink(checkpoints, records=False) if x1 == 1 and checkpoints else None
    info = {}
    t0 = time.perf_counter()
    h = compute(args.algo, x1, x2, sink=sink, info=info, **_algo_kwargs(args))
    wall = time.perf_counter() - t0
    if h.total() != x2 - x1:
        print(f"internal error: histogram covers {h.total()} values, expected {x2 - x1}", file=sys.stderr)
        return EXIT_FAIL
    text = st.histogram_json(h) if args.format == "json" else st.histogram_csv(h)
    _write(text, args.out)
    if args.density_out:
        if sink is None:
            raise UsageError("--density-out needs a range starting at 1")
        _write(st.density_csv(sink.density), args.density_out)
    if args.poisson_out:
        _write(st.poisson_csv(st.poisson_table(h, max(h.kmax(), 1), x2 - x1)), args.poisson_out)
    lines = [f"algorithm {args.algo}", f"range [{x1}, {x2})", f"sum_h {h.total()}",
             f"mean_f {h.weighted_total() / h.total():.6f}", f"wall_seconds {wall:.3f}"]
    if "peak_queue" in info:
        lines.append(f"peak_queue {info['peak_queue']}")
    if "segment_bytes" in info:
        lines.append(f"segment_bytes {info['segment_bytes']}")
    _summary(lines, args.out in (None, "-"))
    return EXIT_OK


def cmd_records(args) -> int:
    x1, x2 = bounds_of(args)
    sink = st.BlockSink()
    t0 = time.perf_counter()
    compute(args.algo, x1, x2, sink=sink, **_algo_kwargs(args))
    table = sink.records
    for k, n in sorted(table.entries.items()):
        reps = representations_of(n)
        if len(reps) != k:
            print(f"record check failed: n={n} has {len(reps)} representations, expected {k}", file=sys.stderr)
            return EXIT_FAIL
        table.reps[k] = reps
    wall = time.perf_counter() - t0
    text = st.records_json(table) if args.format == "json" else st.records_csv(table)
    _write(text, args.out)
    _summary([f"algorithm {args.algo}", f"range [{x1}, {x2})", f"records {len(table.entries)}",
              f"wall_seconds {wall:.3f}"], args.out in (None, "-"))
    return EXIT_OK


def cmd_reps(args) -> int:
    reps = representations_of(args.n)
    if args.format == "json":
        text = json.dumps([[r.length, r.pmin, r.pmax] for r in reps]) + "\n"
    else:
        text = st.representations_csv(reps, header=False)
    _write(text, args.out)
    return EXIT_OK


class _Collect:
    def __init__(self, x1, x2):
        self.x1 = x1
        self.f = np.zeros(x2 - x1, dtype=np.uint8)

    def __call__(self, n0, f):
        self.f[n0 - self.x1:n0 - self.x1 + len(f)] = f


def cmd_verify(args) -> int:
    x = args.x_cap
    runs = [("oracle", {}), ("puzzle", {}), ("pq-sieve", {}), ("pq-sieve", {"queue_impl": "map"}),
            ("pq-test", {})]
    results = []
    for algo, extra in runs:
        sink = _Collect(1, x + 1)
        t0 = time.perf_counter()
        h = compute(algo, 1, x + 1, sink=sink, workers=args.workers, **extra)
        name = algo + ("/" + extra["queue_impl"] if extra else "")
        print(f"{name:14s} {time.perf_counter() - t0:8.3f}s  h={h.as_list()}")
        results.append((name, h, sink.f))
    ok = True
    ref_name, ref_h, ref_f = results[0]
    for name, h, f in results[1:]:
        if h != ref_h or not np.array_equal(f, ref_f):
            ok = False
            diff = np.flatnonzero(f != ref_f)
            where = f"first divergent n = {int(diff[0]) + 1}: {name} f={int(f[diff[0]])}, " \
                    f"{ref_name} f={int(ref_f[diff[0]])}" if len(diff) else "histograms differ"
            print(f"MISMATCH {name}: {where}")
        if h.weighted_total() != ref_h.weighted_total():
            ok = False
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_bench(args) -> int:
    rows = ["algorithm,x,param,wall_seconds,memory_bytes"]
    for x in args.x:
        for algo in args.algo:
            if algo == "puzzle":
                params = args.delta or [None]
            elif algo.startswith("pq"):
                params = args.interval_len or [None]
            else:
                params = [None]
            for p in params:
                info = {}
                kw = {"delta": p} if algo == "puzzle" else {"interval_len": p}
                t0 = time.perf_counter()
                compute(algo, 1, x + 1, info=info, workers=args.workers, **kw)
                wall = time.perf_counter() - t0
                if p is None:
                    p = info.get("segment_bytes", x) if algo == "puzzle" else x
                rows.append(f"{algo},{x},{p},{wall:.3f},{info.get('memory_bytes', 0)}")
                print(rows[-1], file=sys.stderr)
    _write("\n".join(rows) + "\n", args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gleeful", description="Counts of representations of n as sums of consecutive primes.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, bounds=True):
        if bounds:
            sp.add_argument("--x", type=_positive, help="upper bound (inclusive), range [1, x]")
            sp.add_argument("--x1", type=_positive, help="range start (inclusive)")
            sp.add_argument("--x2", type=_positive, help="range end (exclusive)")
            sp.add_argument("--algo", choices=ALGOS, default="pq-sieve")
            sp.add_argument("--delta", type=_positive, help="puzzle segment length (default x^(2/3))")
            sp.add_argument("--interval-len", type=_positive, help="pq interval length (default: one interval)")
            sp.add_argument("--prime-bound-B", type=_positive, dest="prime_bound_B",
                            help="pq: primes below B come from a stored list")
        sp.add_argument("--workers", type=_positive, default=1)
        sp.add_argument("--out", help="output file (default stdout)")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")

    sp = sub.add_parser("hist", help="histogram h(k) of f(n)")
    common(sp)
    sp.add_argument("--density-out", help="write running mean of f at powers of ten as CSV")
    sp.add_argument("--poisson-out", help="write observed vs Poisson(ln 2) counts as CSV")
    sp.set_defaults(func=cmd_hist)

    sp = sub.add_parser("records", help="smallest n with f(n) = k")
    common(sp)
    sp.set_defaults(func=cmd_records)

    sp = sub.add_parser("reps", help="list the representations of one n")
    sp.add_argument("n", type=_positive)
    common(sp, bounds=False)
    sp.set_defaults(func=cmd_reps)

    sp = sub.add_parser("verify", help="cross-check every algorithm against the oracle")
    sp.add_argument("x_cap", type=_positive)
    common(sp, bounds=False)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("bench", help="time algorithms over a grid")
    sp.add_argument("--x", type=_positive, nargs="+", required=True)
    sp.add_argument("--algo", choices=ALGOS, nargs="+", default=["puzzle", "pq-sieve", "pq-test"])
    sp.add_argument("--delta", type=_positive, nargs="+")
    sp.add_argument("--interval-len", type=_positive, nargs="+")
    sp.add_argument("--workers", type=_positive, default=1)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, OracleCapError) as exc:
        print(f"gleeful: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"gleeful: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (QueueCorruption, CounterOverflow, OverflowError, AssertionError) as exc:
        print(f"gleeful: failure: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
