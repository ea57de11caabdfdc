"""bvlab command line.

Exit status: 0 ok, 1 a hard assertion failed, 2 usage error, 3 resource or I/O error.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analytic import PERRON_CALIBRATION, append_jsonl, large_sieve_sides, perron_truncated
from .arith import profile
from .config import ConfigError, format_summary, load_config, resolve_cache_path, run_census
from .primes import (CacheFormatError, CacheVersionError, PrimeEngineError, SieveDomainError,
                     SieveResourceError, build_prime_store, load_cache, save_cache)

EXIT_OK, EXIT_ASSERT, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3
log = logging.getLogger("bvlab")


class UsageError(Exception):
    pass


def _emit(obj, out: str | None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


# --- sieve --------------------------------------------------------------------

def cmd_sieve_build(args) -> int:
    path = resolve_cache_path(args.cache)
    store = build_prime_store(int(float(args.limit)), args.segment_size)
    path.parent.mkdir(parents=True, exist_ok=True)
    save_cache(store, path)
    print(f"limit={store.limit} count={len(store)} path={path} bytes={path.stat().st_size}")
    return EXIT_OK


def cmd_sieve_info(args) -> int:
    path = resolve_cache_path(args.cache)
    store = load_cache(path)
    largest = int(store.primes[-1]) if len(store) else None
    _emit({"path": str(path), "limit": store.limit, "count": len(store), "largest": largest,
           "bytes": path.stat().st_size}, None)
    return EXIT_OK


# --- census -------------------------------------------------------------------

def cmd_census_run(args) -> int:
    overrides = {"x": args.x, "Q": args.Q, "A_grid": args.A, "kind": args.kind, "epsilon": args.epsilon,
                 "C": args.C, "seed": args.seed, "output_dir": args.out, "workers": args.workers,
                 "members": args.members}
    for item in args.set or []:
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        overrides[k] = v
    cfg = load_config(args.config, overrides)
    run = run_census(cfg, cache_path=resolve_cache_path(args.cache, cfg.cache_path))
    print(format_summary(run.summary_rows))
    print(f"wrote {len(run.files)} files to {cfg.output_dir}")
    counts = [r.counts[0] for r in run.reports]
    order = sorted(range(len(cfg.A_grid)), key=lambda i: cfg.A_grid[i])
    if any(counts[i] > counts[j] for i, j in zip(order, order[1:])):
        print("exceptional counts are not non-decreasing in A", file=sys.stderr)
        return EXIT_ASSERT
    return EXIT_OK


# --- verify -------------------------------------------------------------------

def cmd_verify(args) -> int:
    from .verify import run_verify

    reports = run_verify(args.suite, args.seed)
    for r in reports:
        print(r.line(), file=sys.stderr)
    doc = {"suite": args.suite, "seed": args.seed, "passed": all(r.passed for r in reports),
           "reports": [r.to_json() for r in reports]}
    _emit(doc, args.out)
    return EXIT_OK if doc["passed"] else EXIT_ASSERT


# --- demos --------------------------------------------------------------------

def cmd_dispersion_demo(args) -> int:
    from .bilinear import (BilinearConfig, averaged_square_sum, bound1, bound2, coefficients,
                           dispersion_decompose, write_diagnostic)

    x = float(args.x)
    cfg = BilinearConfig(x, profile(args.s), e=args.e)
    K = float(args.K) if args.K else x ** (1 / 3)
    L = x / K
    z = complex(args.z) if args.z else complex(1 / math.log(max(L, 3)), 0)
    b = coefficients(math.floor(L) + 1, args.seed, args.kind)
    br = dispersion_decompose(cfg, K, z, b)
    Q = args.s / 2
    a = coefficients(math.floor(2 * K) + 1, args.seed, args.kind, stream=1)
    sq = averaged_square_sum([cfg], K, a, coefficients(math.floor(x) + 1, args.seed, args.kind, stream=2), Q)
    bounds = {"bound1": bound1(x, Q, K, 1), "bound2": bound2(x, Q, K, 1)}
    ratios = {"ratio1": sq.ratio1, "ratio2": sq.ratio2}
    doc = dict(br.to_json(), s=cfg.s, q=cfg.q, x=x, bounds=bounds, ratios=ratios)
    if args.out:
        write_diagnostic(args.out, cfg, br, Q, bounds, ratios)
    _emit(doc, None)
    return EXIT_OK if br.relative_residual <= 1e-9 else EXIT_ASSERT


def cmd_perron_demo(args) -> int:
    from .bilinear import coefficients

    rng = np.random.Generator(np.random.Philox(key=[args.seed, 3]))
    bad = 0
    print(f"{'L':>5}{'N':>10}{'c':>8}{'T':>10}{'deviation':>12}{'budget':>12}  ok")
    for i in range(args.trials):
        L = int(rng.integers(10, args.L_max + 1))
        c, T = 1 / math.log(L), L * math.log(L)
        N = float(rng.uniform(2, L)) + 0.5 * 1e-3
        tr = perron_truncated(coefficients(L, args.seed, args.kind, stream=i), N, c, T, args.calibration)
        bad += not tr.within_budget
        print(f"{L:>5}{N:>10.3f}{c:>8.4f}{T:>10.2f}{tr.deviation:>12.4e}{tr.budget:>12.4e}  "
              f"{'yes' if tr.within_budget else 'NO'}")
        if args.log:
            append_jsonl(args.log, dict(tr.to_json(), trial=i, seed=args.seed))
    return EXIT_OK if bad == 0 else EXIT_ASSERT


def cmd_large_sieve_demo(args) -> int:
    rng = np.random.Generator(np.random.Philox(key=[args.seed, 5]))
    bad = 0
    worst = 0.0
    for i in range(args.trials):
        Q = int(rng.integers(1, args.Q + 1))
        N = int(rng.integers(1, args.N + 1))
        a = np.exp(2j * np.pi * rng.random(N))
        tr = large_sieve_sides(a, Q)
        worst = max(worst, tr.ratio)
        bad += not tr.holds()
        if args.log:
            append_jsonl(args.log, dict(tr.to_json(), trial=i, seed=args.seed))
    eq = large_sieve_sides(np.ones(args.N), 1)
    print(f"trials={args.trials} violations={bad} max_ratio={worst:.6f}")
    print(f"Q=1 constant coefficients: lhs={eq.lhs:g} rhs={eq.rhs:g}")
    return EXIT_OK if bad == 0 and eq.lhs == eq.rhs else EXIT_ASSERT


# --- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    from .verify import SUITES

    p = argparse.ArgumentParser(prog="bvlab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"bvlab {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    sv = sub.add_parser("sieve", help="build or inspect the prime cache")
    svs = sv.add_subparsers(dest="action", required=True)
    b = svs.add_parser("build")
    b.add_argument("--limit", required=True)
    b.add_argument("--segment-size", type=int, default=1 << 18)
    b.add_argument("--cache")
    b.set_defaults(func=cmd_sieve_build)
    i = svs.add_parser("info")
    i.add_argument("--cache")
    i.set_defaults(func=cmd_sieve_info)

    cs = sub.add_parser("census", help="exceptional-moduli census")
    css = cs.add_subparsers(dest="action", required=True)
    r = css.add_parser("run")
    r.add_argument("--config", help="flat key = value file")
    r.add_argument("--x")
    r.add_argument("--Q")
    r.add_argument("--A", help="comma-separated grid, e.g. 0,1,2,4")
    r.add_argument("--kind", choices=("prime-powers", "coprime-radical-bounded", "explicit-list"))
    r.add_argument("--members", help="comma-separated moduli for explicit-list")
    r.add_argument("--epsilon")
    r.add_argument("--C")
    r.add_argument("--seed")
    r.add_argument("--out")
    r.add_argument("--workers")
    r.add_argument("--cache")
    r.add_argument("--set", action="append", metavar="KEY=VALUE", help="any other config key")
    r.set_defaults(func=cmd_census_run)

    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("suite", choices=SUITES + ("all",))
    v.add_argument("--seed", type=int, default=1)
    v.add_argument("--out", help="write the JSON report here instead of stdout")
    v.set_defaults(func=cmd_verify)

    d = sub.add_parser("dispersion")
    ds = d.add_subparsers(dest="action", required=True)
    dd = ds.add_parser("demo")
    dd.add_argument("--x", default="1e4")
    dd.add_argument("--s", type=int, default=25)
    dd.add_argument("--e", type=int, default=1)
    dd.add_argument("--K")
    dd.add_argument("--z", help="complex, e.g. 0.2+3j")
    dd.add_argument("--kind", default="unit", choices=("unit", "sign", "real", "ones"))
    dd.add_argument("--seed", type=int, default=1)
    dd.add_argument("--out", help="diagnostic JSON path")
    dd.set_defaults(func=cmd_dispersion_demo)

    pr = sub.add_parser("perron")
    prs = pr.add_subparsers(dest="action", required=True)
    pd = prs.add_parser("demo")
    pd.add_argument("--trials", type=int, default=10)
    pd.add_argument("--L-max", dest="L_max", type=int, default=100)
    pd.add_argument("--kind", default="unit", choices=("unit", "sign", "real", "ones"))
    pd.add_argument("--calibration", type=float, default=PERRON_CALIBRATION)
    pd.add_argument("--seed", type=int, default=1)
    pd.add_argument("--log", help="append one JSON line per trial")
    pd.set_defaults(func=cmd_perron_demo)

    ls = sub.add_parser("large-sieve")
    lss = ls.add_subparsers(dest="action", required=True)
    ld = lss.add_parser("demo")
    ld.add_argument("--trials", type=int, default=100)
    ld.add_argument("--Q", type=int, default=30)
    ld.add_argument("--N", type=int, default=200)
    ld.add_argument("--seed", type=int, default=1)
    ld.add_argument("--log", help="append one JSON line per trial")
    ld.set_defaults(func=cmd_large_sieve_demo)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with 2 on usage errors
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError, SieveDomainError, ValueError) as exc:
        print(f"bvlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, SieveResourceError, MemoryError, CacheFormatError, CacheVersionError,
            PrimeEngineError) as exc:
        print(f"bvlab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
