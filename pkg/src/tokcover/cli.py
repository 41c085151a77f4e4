"""Command-line interface: select, verify, and bench subcommands."""

import argparse
import os
import statistics
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import _kernels
from .core import CoverageConfig, Mode
from .dumpio import ResultRecord, read_dump
from .errors import TokcoverError
from .pipeline import QWEN_PROFILE_TAU_T, select_tokens, synth_sample
from .verification import run_verify

EXIT_OK = 0
EXIT_DATA = 1
EXIT_USAGE = 2


def _build_parser():
    p = argparse.ArgumentParser(
        prog="tokcover",
        description="Maximum-coverage vision-token selection engine")
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("select", help="select tokens for embedding dumps")
    ps.add_argument("--input", action="append", required=True, metavar="PATH",
                    help="embedding dump (repeatable)")
    ps.add_argument("--budget", type=int, default=None)
    ps.add_argument("--budget-ratio", type=float, default=None)
    ps.add_argument("--max-tokens", type=int, default=None)
    ps.add_argument("--mode", choices=["tv", "vv", "mm"], default="mm")
    ps.add_argument("--tau-t", type=float, default=None)
    ps.add_argument("--tau-v", type=float, default=0.2)
    ps.add_argument("--alpha", type=float, default=0.5)
    ps.add_argument("--adaptive", choices=["off", "bisect", "grid"],
                    default="off")
    ps.add_argument("--grid-k", type=int, default=2)
    ps.add_argument("--pooling", default="none",
                    choices=["none", "pre-mean", "pre-max", "pre-first",
                             "post-mean", "post-max", "post-first"])
    ps.add_argument("--profile", choices=["default", "qwen"], default="default")
    ps.add_argument("--output", default=None, metavar="PATH",
                    help="line-delimited records (default: stdout)")
    ps.add_argument("--threads", type=int, default=1)
    ps.add_argument("--emit-timings", action="store_true",
                    help="include wall-time fields (breaks byte determinism)")

    pv = sub.add_parser("verify", help="run the oracle verification suite")
    pv.add_argument("--trials", type=int, default=200)
    pv.add_argument("--seed", type=int, default=0)
    pv.add_argument("--max-n", type=int, default=12)
    pv.add_argument("--max-k", type=int, default=4)
    pv.add_argument("--chains", type=int, default=10_000)

    pb = sub.add_parser("bench", help="benchmark the selection pipeline")
    pb.add_argument("--n", type=int, default=576)
    pb.add_argument("--m", type=int, default=40)
    pb.add_argument("--dim", type=int, default=4096)
    pb.add_argument("--dim-pre", type=int, default=1024)
    pb.add_argument("--budget", type=int, default=64)
    pb.add_argument("--reps", type=int, default=3)
    pb.add_argument("--threads", type=int, default=1)
    pb.add_argument("--seed", type=int, default=0)
    return p


def _select_config(args):
    if (args.budget is None) == (args.budget_ratio is None):
        raise UsageError("exactly one of --budget / --budget-ratio is required")
    if args.budget_ratio is not None:
        if args.max_tokens is None:
            raise UsageError("--budget-ratio requires --max-tokens")
        if not 0 < args.budget_ratio <= 1:
            raise UsageError("--budget-ratio must be in (0, 1]")
        budget = int(args.max_tokens * args.budget_ratio)
    else:
        budget = args.budget
    tau_t = args.tau_t
    if tau_t is None:
        tau_t = QWEN_PROFILE_TAU_T if args.profile == "qwen" else 0.02
    return CoverageConfig(
        budget=budget,
        tau_t=tau_t,
        tau_v=args.tau_v,
        alpha=args.alpha,
        mode=Mode(args.mode),
        adaptive=args.adaptive,
        grid_k=args.grid_k,
        pooling=args.pooling,
    )


class UsageError(Exception):
    pass


def _run_select(args):
    cfg = _select_config(args)
    params = {
        "tau_t": cfg.tau_t,
        "tau_v": cfg.tau_v,
        "alpha": cfg.alpha,
        "budget": cfg.budget,
        "mode": cfg.mode.value,
        "adaptive": cfg.adaptive,
        "pooling": cfg.pooling,
        "profile": args.profile,
    }

    def process(path):
        timings = {}
        sample = read_dump(path)
        result = select_tokens(sample, cfg, timings=timings)
        return ResultRecord.from_selection(
            Path(path).stem, result, params=params, timing_ns=timings)

    paths = args.input
    threads = max(1, args.threads)
    try:
        if threads == 1:
            records = [process(p) for p in paths]
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                records = list(pool.map(process, paths))
    except (TokcoverError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA

    lines = [r.to_json(emit_timings=args.emit_timings) for r in records]
    text = "\n".join(lines) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _run_verify(args):
    return run_verify(trials=args.trials, seed=args.seed, max_n=args.max_n,
                      max_k=args.max_k, chains=args.chains)


def _percentiles(values):
    ms = sorted(v / 1e6 for v in values)
    mean = statistics.fmean(ms)
    p50 = ms[len(ms) // 2]
    p95 = ms[min(len(ms) - 1, int(0.95 * (len(ms) - 1)))]
    return mean, p50, p95


def _run_bench(args):
    from .coverage import greedy_select_fused, lazy_greedy_select_fused
    from .similarity import build_tv, build_vv, calibrate
    from .core import normalize

    sample = synth_sample(args.n, args.m, 0, args.dim_pre, args.dim,
                          seed=args.seed)
    cfg = CoverageConfig(budget=args.budget)

    print(f"backend: {_kernels.BACKEND} "
          f"(available: {', '.join(_kernels.available_backends())})")
    print(f"instance: n={args.n} m={args.m} dim={args.dim} "
          f"dim_pre={args.dim_pre} k={args.budget} reps={args.reps}")

    stage_times = {}
    for _ in range(args.reps):
        timings = {}
        result = select_tokens(sample, cfg, timings=timings)
        for k, v in timings.items():
            stage_times.setdefault(k, []).append(v)
    for stage, values in stage_times.items():
        mean, p50, p95 = _percentiles(values)
        print(f"{stage:>14s}: mean {mean:8.2f} ms  p50 {p50:8.2f} ms  "
              f"p95 {p95:8.2f} ms")

    # Eager vs lazy gain-evaluation counts on the calibrated matrices.
    vpre = normalize(sample.vision_pre)
    vpost = normalize(sample.vision_post)
    text = normalize(sample.text)
    M_tv = calibrate(build_tv(text, vpost), cfg.tau_t)
    M_vv = calibrate(build_vv(vpre), cfg.tau_v)
    t0 = time.perf_counter_ns()
    eager = greedy_select_fused(M_tv, M_vv, cfg.alpha, cfg.budget)
    t1 = time.perf_counter_ns()
    lazy = lazy_greedy_select_fused(M_tv, M_vv, cfg.alpha, cfg.budget)
    t2 = time.perf_counter_ns()
    match = "identical" if eager.selected == lazy.selected else "DIFFERENT"
    print(f"eager greedy: {eager.gain_evaluations} evals, "
          f"{(t1 - t0) / 1e6:.2f} ms")
    print(f"lazy greedy:  {lazy.gain_evaluations} evals, "
          f"{(t2 - t1) / 1e6:.2f} ms ({match} selections)")

    # Backend comparison on the greedy stage, when both are built.
    for name in _kernels.available_backends():
        kern = _kernels.get_backend(name)
        t0 = time.perf_counter_ns()
        kern.greedy(M_tv.data, 1.0, M_vv.data, cfg.alpha, cfg.budget, True)
        t1 = time.perf_counter_ns()
        print(f"lazy greedy [{name}]: {(t1 - t0) / 1e6:.2f} ms")
    return EXIT_OK


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "select":
            return _run_select(args)
        if args.command == "verify":
            return _run_verify(args)
        if args.command == "bench":
            return _run_bench(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
