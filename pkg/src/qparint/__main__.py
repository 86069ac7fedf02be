"""Command-line harness.

Subcommands::

    qparint sweep --r 2 --d1 1 --d2 1 --algos quantum,det,mc --n-list 16,64,256 \\
                  --trials 5 --seed 0 --function kink --out results.csv
    qparint fit results.csv
    qparint corpus --m 4 --r 2 --d1 1 --d2 1 --count 10 --seed 0 --out manifest.jsonl

``sweep`` also accepts ``--config FILE``: flat ``key = value`` lines whose
keys mirror the long flags (``n-list`` or ``n_list``).  Flags given on the
command line win over the file.  Exit code 0 on success, 2 when some sweep
rows failed, 1 on invalid input.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import bench
from .fooling import BumpFamily, corpus_manifest, write_manifest

log = logging.getLogger("qparint")

SWEEP_KEYS = ("r", "d1", "d2", "algos", "n_list", "trials", "seed", "function", "probe", "out")


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in str(text).replace(" ", "").split(",") if x)


def _str_list(text: str) -> tuple[str, ...]:
    return tuple(x for x in str(text).replace(" ", "").split(",") if x)


def read_config(path) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value, got {raw!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        if key not in SWEEP_KEYS:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def build_config(args: argparse.Namespace) -> bench.BenchConfig:
    """Merge defaults, the config file and the flags (flags win)."""
    merged: dict[str, object] = {}
    if args.config:
        merged.update(read_config(args.config))
    for key in SWEEP_KEYS:
        value = getattr(args, key)
        if value is not None:
            merged[key] = value
    kw: dict[str, object] = {}
    for key in ("r", "d1", "d2", "trials", "seed", "probe"):
        if key in merged:
            kw[key] = int(merged[key])
    if "algos" in merged:
        kw["algos"] = _str_list(merged["algos"])
    if "n_list" in merged:
        kw["budgets"] = _int_list(merged["n_list"])
    if "function" in merged:
        kw["function"] = str(merged["function"])
    if "out" in merged:
        kw["out"] = str(merged["out"])
    return bench.BenchConfig(**kw)


def cmd_sweep(args) -> int:
    config = build_config(args)
    log.info("sweep %s", config)
    result = bench.run_sweep(config)
    for fail in result.failures:
        log.error("row failed: algorithm=%s n=%d trial=%d: %s",
                  fail.algorithm, fail.n, fail.trial, fail.message)
    if not result.records:
        log.error("no successful rows")
        return 2
    if config.out:
        out = Path(config.out)
        bench.emit(result.records, out, "csv")
        bench.emit(result.records, out.with_suffix(".plot.json"), "plot-data")
        log.info("wrote %s and %s", out, out.with_suffix(".plot.json"))
    else:
        sys.stdout.write(bench.records_to_csv(result.records))
    for s in bench.summarize(result.records):
        log.info("%-8s n=%-8d queries=%-12d median=%.3e q75=%.3e",
                 s.algorithm, s.n, s.queries, s.median, s.q75)
    return 2 if result.failures else 0


def cmd_fit(args) -> int:
    records = bench.read_csv(args.csv)
    if not records:
        raise ValueError(f"{args.csv} holds no records")
    r, d1, d2 = records[0].r, records[0].d1, records[0].d2
    expected = bench.expected_slopes(r, d1, d2)
    print("algorithm,slope,stderr,intercept,residual,points,expected")
    for algo in sorted({rec.algorithm for rec in records}):
        fit = bench.fit_slope([rec for rec in records if rec.algorithm == algo])
        print(f"{algo},{fit.slope:.4f},{fit.stderr:.4f},{fit.intercept:.4f},"
              f"{fit.residual:.4f},{fit.points},{expected[algo]:.4f}")
    return 0


def cmd_corpus(args) -> int:
    family = BumpFamily(args.m, args.d1, args.d2, args.r)
    entries = corpus_manifest(family, args.count, args.seed)
    if args.out:
        write_manifest(entries, args.out)
        log.info("wrote %d instances to %s", len(entries), args.out)
    else:
        import json
        for e in entries:
            print(json.dumps(e, sort_keys=True))
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qparint", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    sw = sub.add_parser("sweep", help="run algorithms over budgets and trials")
    sw.add_argument("--config", help="key = value file; flags win")
    sw.add_argument("--r", type=int)
    sw.add_argument("--d1", type=int)
    sw.add_argument("--d2", type=int)
    sw.add_argument("--algos", help="comma-separated subset of quantum,det,mc")
    sw.add_argument("--n-list", dest="n_list", help="comma-separated increasing budgets")
    sw.add_argument("--trials", type=int)
    sw.add_argument("--seed", type=int)
    sw.add_argument("--function", help="test function id (kink, lacunary, analytic, mixed, ...)")
    sw.add_argument("--probe", type=int, help="probe points per cell and axis, in units of r (>= 4)")
    sw.add_argument("--out", help="CSV path; plot data goes next to it (default: CSV to stdout)")
    sw.set_defaults(run=cmd_sweep)

    ft = sub.add_parser("fit", help="fit log-log slopes to a sweep CSV")
    ft.add_argument("csv")
    ft.set_defaults(run=cmd_fit)

    co = sub.add_parser("corpus", help="write a manifest of fooling-function instances")
    co.add_argument("--m", type=int, default=4, help="cells per axis (even)")
    co.add_argument("--r", type=int, default=2)
    co.add_argument("--d1", type=int, default=1)
    co.add_argument("--d2", type=int, default=1)
    co.add_argument("--count", type=int, default=10)
    co.add_argument("--seed", type=int, default=0)
    co.add_argument("--out", help="JSON-lines path (default: stdout)")
    co.set_defaults(run=cmd_corpus)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.run(args)
    except (ValueError, OSError) as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
