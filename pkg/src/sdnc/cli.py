"""Command line entry point: ``sdnc {equiv,gradcheck,bench,gen-weights}``.

Exit status is 0 when every check passed, 1 when a check failed and 2 on
usage or I/O errors.
"""
import argparse
import math
import sys
import time
from dataclasses import replace
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import weights
from .attention import causal_self_attention
from .controller import init_params
from .engine import SdncEngine
from .equivalence import (
    EquivConfig,
    check_causality,
    check_cross_equivalence,
    check_self_equivalence,
)
from .grad import finite_diff_check
from .memory import WriteOnceMemory
from .report import equivalence_fields, format_line, gradcheck_fields

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _seed(text):
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive_float(text):
    value = float(text)
    if not (value > 0 and math.isfinite(value)):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def _add_dims(p, seq_len, d_model, heads):
    p.add_argument("--seq-len", type=_positive_int, default=seq_len, help="sequence length T")
    p.add_argument("--d-model", type=_positive_int, default=d_model)
    p.add_argument("--d-k", type=_positive_int, default=None, help="default d_model / heads")
    p.add_argument("--d-v", type=_positive_int, default=None, help="default d_model / heads")
    p.add_argument("--heads", type=_positive_int, default=heads)


def build_parser():
    parser = argparse.ArgumentParser(prog="sdnc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("equiv", help="compare streamed sDNC reads with batched attention")
    _add_dims(p, seq_len=8, d_model=8, heads=1)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--seeds", type=_positive_int, default=1, help="run seeds seed..seed+N-1")
    p.add_argument("--tol", type=_positive_float, default=1e-10)
    p.add_argument("--mode", choices=("self", "cross", "paper-restricted"), default="self")
    p.add_argument("--enc-len", type=_positive_int, default=None, help="encoder length S (cross)")
    p.add_argument(
        "--scale-variant",
        choices=("dk", "dv"),
        default="dk",
        help="streamed read scale 1/sqrt(d_k) or 1/sqrt(d_v)",
    )
    p.add_argument("--causality", action="store_true", help="also sweep causality at every position")
    p.add_argument("--parallel", action="store_true", help="run seeds concurrently; output order is unchanged")

    p = sub.add_parser("gradcheck", help="analytic gradients vs. central finite differences")
    _add_dims(p, seq_len=6, d_model=4, heads=2)
    p.add_argument("--seed", type=_seed, default=42)
    p.add_argument("--eps", type=_positive_float, default=1e-6)
    p.add_argument("--threshold", type=_positive_float, default=1e-5)
    p.add_argument("--samples", type=_positive_int, default=None)

    p = sub.add_parser("bench", help="time batched vs. streamed evaluation")
    _add_dims(p, seq_len=1024, d_model=64, heads=4)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--repeat", type=int, default=3)

    p = sub.add_parser("gen-weights", help="write a seeded weight file")
    p.add_argument("--d-model", type=_positive_int, default=8)
    p.add_argument("--d-k", type=_positive_int, default=None)
    p.add_argument("--d-v", type=_positive_int, default=None)
    p.add_argument("--heads", type=_positive_int, default=1)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--out", required=True)
    return parser


def _config(args, **extra):
    try:
        return EquivConfig(
            T=args.seq_len,
            d_model=args.d_model,
            d_k=args.d_k,
            d_v=args.d_v,
            heads=args.heads,
            seed=args.seed,
            **extra,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_equiv(args, out):
    mode = args.mode.replace("-", "_")
    if args.enc_len is not None and mode != "cross":
        raise UsageError("--enc-len only applies to --mode cross")
    if mode == "cross" and args.scale_variant != "dk":
        raise UsageError("--scale-variant only applies to self reads")
    if args.causality and mode == "cross":
        raise UsageError("--causality only applies to self-attention modes")
    base = _config(
        args,
        tol=args.tol,
        mode=mode,
        S=args.enc_len or 1,
        scale_variant=args.scale_variant,
    )
    if base.seed + args.seeds > 2**64:
        raise UsageError("seed range exceeds 64 bits")
    configs = [replace(base, seed=base.seed + i) for i in range(args.seeds)]

    def one(cfg):
        if mode == "cross":
            report = check_cross_equivalence(cfg)
            return [format_line(equivalence_fields(report))], report.passed
        report = check_self_equivalence(cfg)
        lines, ok = [format_line(equivalence_fields(report))], report.passed
        if args.causality:
            causal = all(check_causality(cfg, p) for p in range(1, cfg.T + 1))
            lines.append(format_line({"check": "causality", "mode": mode, "seed": cfg.seed,
                                      "T": cfg.T, "passed": causal}))
            ok = ok and causal
        return lines, ok

    if args.parallel:
        with ThreadPoolExecutor() as pool:
            results = list(pool.map(one, configs))
    else:
        results = [one(cfg) for cfg in configs]
    for lines, _ in results:
        for line in lines:
            print(line, file=out)
    return EXIT_OK if all(ok for _, ok in results) else EXIT_FAIL


def cmd_gradcheck(args, out):
    cfg = _config(args)
    try:
        report = finite_diff_check(cfg, eps=args.eps, threshold=args.threshold, samples=args.samples)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    print(format_line(gradcheck_fields(report, cfg)), file=out)
    return EXIT_OK if report.passed else EXIT_FAIL


def _best_time(fn, repeat):
    best = math.inf
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def streamed_read_seconds(keys, values, queries, scale):
    """Total time of the reads a stream of ``len(keys)`` tokens performs."""
    mem = WriteOnceMemory(keys.shape[1], values.shape[1], capacity=keys.shape[0])
    total = 0.0
    for k, v, q in zip(keys, values, queries):
        mem.append(k, v)
        start = time.perf_counter()
        mem.content_read(q, scale)
        total += time.perf_counter() - start
    return total


def read_cost_exponent(sizes, seconds):
    """Least-squares slope of log(seconds) against log(T)."""
    slope, _ = np.polyfit(np.log(sizes), np.log(seconds), 1)
    return float(slope)


def cmd_bench(args, out):
    if args.repeat < 1:
        raise UsageError("--repeat must be >= 1")
    cfg = _config(args)
    rng = np.random.default_rng(cfg.seed)
    params = init_params(cfg.d_model, cfg.d_k, cfg.d_v, cfg.heads, rng)
    X = rng.uniform(-1.0, 1.0, (cfg.T, cfg.d_model))
    dims = {"T": cfg.T, "d_model": cfg.d_model, "H": cfg.heads, "repeat": args.repeat}

    causal_self_attention(X[:1], params)  # compile outside the timed region
    batched = _best_time(lambda: causal_self_attention(X, params), args.repeat)
    streamed = _best_time(lambda: SdncEngine(params).run(X), args.repeat)
    print(format_line({"check": "bench", "path": "batched", **dims, "seconds": batched}), file=out)
    print(format_line({"check": "bench", "path": "streamed", **dims, "seconds": streamed}), file=out)

    # per-token latency at a few positions of one stream
    engine = SdncEngine(params)
    probes = sorted({max(1, cfg.T * i // 4) for i in range(1, 5)})
    for t, x in enumerate(X, start=1):
        start = time.perf_counter()
        engine.step(x)
        elapsed = time.perf_counter() - start
        if t in probes:
            print(format_line({"check": "bench", "path": "step", "t": t, **dims, "seconds": elapsed}),
                  file=out)

    # total read cost of one head's stream at T/4, T/2, T
    K = X @ params.W_K[0]
    V = X @ params.W_V[0]
    Q = X @ params.W_Q[0]
    scale = 1.0 / math.sqrt(cfg.d_k)
    sizes = sorted({max(1, cfg.T // 4), max(1, cfg.T // 2), cfg.T})
    costs = []
    for n in sizes:
        cost = min(streamed_read_seconds(K[:n], V[:n], Q[:n], scale) for _ in range(args.repeat))
        costs.append(cost)
        print(format_line({"check": "bench", "path": "streamed_reads", "T": n, "seconds": cost}), file=out)
    if len(sizes) >= 2:
        print(format_line({"check": "bench", "fit": "read_cost_exponent",
                           "value": read_cost_exponent(sizes, costs)}), file=out)
    return EXIT_OK


def cmd_gen_weights(args, out):
    heads = args.heads
    d_k = args.d_k or (args.d_model // heads if args.d_model % heads == 0 else None)
    d_v = args.d_v or (args.d_model // heads if args.d_model % heads == 0 else None)
    if d_k is None or d_v is None:
        raise UsageError("d_model not divisible by heads; pass --d-k and --d-v")
    params = init_params(args.d_model, d_k, d_v, heads, np.random.default_rng(args.seed))
    try:
        weights.save(params, args.out)
    except OSError as exc:
        print(f"sdnc: cannot write {args.out}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    size = weights.file_size(args.d_model, d_k, d_v, heads)
    print(format_line({"check": "gen_weights", "seed": args.seed, "bytes": size}), file=out)
    return EXIT_OK


COMMANDS = {
    "equiv": cmd_equiv,
    "gradcheck": cmd_gradcheck,
    "bench": cmd_bench,
    "gen-weights": cmd_gen_weights,
}


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(f"sdnc {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
