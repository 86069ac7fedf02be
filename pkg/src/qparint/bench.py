"""Budget sweeps, slope fits and result files.

A sweep runs every algorithm of a :class:`BenchConfig` at every budget for a
number of trials, measures the sup-norm error on a probe grid and records
the number of queries actually charged.  Output files are sorted by
``(algorithm, n, trial)`` and contain no timestamps, so a sweep repeated with
the same seed produces identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
import traceback
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import stats

from .baselines import deterministic_baseline, mc_baseline
from .functions import CORPUS, corpus_function
from .multilevel import measure_sup_error, prepare_parint, sample_parint

ALGORITHMS = ("quantum", "det", "mc")
CSV_COLUMNS = ("algorithm", "r", "d1", "d2", "n", "queries", "trial", "seed", "sup_error")


@dataclass(frozen=True)
class BenchConfig:
    r: int = 2
    d1: int = 1
    d2: int = 1
    algos: tuple[str, ...] = ALGORITHMS
    budgets: tuple[int, ...] = (16, 64, 256)
    trials: int = 1
    seed: int = 0
    function: str = "kink"
    probe: int = 4
    out: Optional[str] = None

    def __post_init__(self):
        if min(self.r, self.d1, self.d2) < 1:
            raise ValueError("r, d1 and d2 must be positive")
        unknown = set(self.algos) - set(ALGORITHMS)
        if unknown or not self.algos:
            raise ValueError(f"algorithms must be a nonempty subset of {ALGORITHMS}, got {self.algos}")
        if not self.budgets or any(b >= c for b, c in zip(self.budgets, self.budgets[1:])):
            raise ValueError(f"budgets must be nonempty and strictly increasing, got {self.budgets}")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.function not in CORPUS:
            raise ValueError(f"unknown test function {self.function!r}; known: {sorted(CORPUS)}")
        if self.probe < 4:
            raise ValueError("probe factor must be at least 4")


@dataclass(frozen=True)
class ExperimentRecord:
    algorithm: str
    r: int
    d1: int
    d2: int
    n: int
    queries: int
    trial: int
    seed: int
    sup_error: float
    timestamp: float = field(default=0.0, compare=False)

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.queries <= 0:
            raise ValueError("queries must be positive")
        if not self.sup_error >= 0:
            raise ValueError("sup_error must be nonnegative")

    def key(self) -> tuple:
        return (self.algorithm, self.n, self.trial)

    def row(self) -> list[str]:
        return [self.algorithm, str(self.r), str(self.d1), str(self.d2), str(self.n),
                str(self.queries), str(self.trial), str(self.seed), repr(float(self.sup_error))]


@dataclass(frozen=True)
class RowFailure:
    algorithm: str
    n: int
    trial: int
    message: str


@dataclass
class SweepResult:
    records: list[ExperimentRecord]
    failures: list[RowFailure]

    @property
    def ok(self) -> bool:
        return not self.failures


def trial_seed(seed: int, trial: int) -> int:
    """Seed of one trial, derived from the sweep seed and the trial index."""
    return int(np.random.SeedSequence([seed, trial]).generate_state(1, np.uint32)[0])


def run_sweep(config: BenchConfig, plan_cache: Optional[dict] = None) -> SweepResult:
    """Run every ``(algorithm, n, trial)`` of ``config``; failures are kept per row.

    ``plan_cache`` (a dict) may be shared between sweeps to reuse the
    seed-independent part of quantum runs.
    """
    f = corpus_function(config.function, config.r, config.d1, config.d2)
    cache = {} if plan_cache is None else plan_cache
    records, failures = [], []
    for algo in sorted(config.algos):
        for n in config.budgets:
            det_result = None
            for trial in range(config.trials):
                seed = trial_seed(config.seed, trial)
                try:
                    if algo == "quantum":
                        key = (config.function, config.r, config.d1, config.d2, n)
                        if key not in cache:
                            cache[key] = prepare_parint(f, n)
                        res = sample_parint(cache[key], seed)
                        approx, queries = res.approximation, res.ledger.total()
                    elif algo == "det":
                        if det_result is None:
                            det_result = deterministic_baseline(f, n)
                        approx, queries = det_result.approximation, det_result.queries
                    else:
                        res = mc_baseline(f, n, seed)
                        approx, queries = res.approximation, res.queries
                    err = measure_sup_error(approx, f, config.probe)
                    records.append(ExperimentRecord(algo, config.r, config.d1, config.d2, n,
                                                    int(queries), trial, seed, err, time.time()))
                except Exception as exc:  # recorded, the sweep continues
                    failures.append(RowFailure(algo, n, trial, f"{type(exc).__name__}: {exc}"))
                    if isinstance(exc, (KeyboardInterrupt, MemoryError)):
                        raise
    records.sort(key=ExperimentRecord.key)
    return SweepResult(records, failures)


# ---------------------------------------------------------------------------
# Statistics


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    residual: float     # RMS of the log-error residuals
    points: int
    stderr: float

    def contains(self, target: float, tol: float) -> bool:
        return abs(self.slope - target) <= tol


@dataclass(frozen=True)
class BudgetSummary:
    algorithm: str
    n: int
    queries: int
    median: float
    q75: float
    trials: int


def summarize(records: Iterable[ExperimentRecord]) -> list[BudgetSummary]:
    """Median and 0.75-quantile of the error per ``(algorithm, n)``."""
    groups: dict[tuple[str, int], list[ExperimentRecord]] = {}
    for rec in records:
        groups.setdefault((rec.algorithm, rec.n), []).append(rec)
    out = []
    for (algo, n), recs in sorted(groups.items()):
        errs = np.array([r.sup_error for r in recs])
        queries = int(np.median([r.queries for r in recs]))
        out.append(BudgetSummary(algo, n, queries, float(np.median(errs)),
                                 float(np.quantile(errs, 0.75)), len(recs)))
    return out


def fit_slope(records: Sequence[ExperimentRecord]) -> SlopeFit:
    """Least-squares fit of log(median error) against log(charged queries).

    Log factors are not divided out, which biases the slope slightly towards
    zero for methods whose cost carries them.
    """
    algos = {r.algorithm for r in records}
    if len(algos) > 1:
        raise ValueError(f"records mix algorithms {sorted(algos)}")
    summ = summarize(records)
    if len(summ) < 4:
        raise ValueError(f"need at least 4 budget points, got {len(summ)}")
    x = np.log([s.queries for s in summ])
    med = np.array([s.median for s in summ])
    if np.any(med <= 0):
        raise ValueError("zero median error; the slope is undefined")
    y = np.log(med)
    res = stats.linregress(x, y)
    resid = y - (res.intercept + res.slope * x)
    return SlopeFit(float(res.slope), float(res.intercept), float(np.sqrt(np.mean(resid**2))),
                    len(summ), float(res.stderr))


def expected_slopes(r: int, d1: int, d2: int) -> dict[str, float]:
    """Error exponents against cost, ignoring log factors."""
    d = d1 + d2
    quantum = -(r + d2) / d if r >= d1 else -r / d1
    mc = -(r + d2 / 2) / d if 2 * r >= d1 else -r / d1
    return {"quantum": quantum, "mc": mc, "det": -r / d}


# ---------------------------------------------------------------------------
# Files


def records_to_csv(records: Sequence[ExperimentRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for rec in sorted(records, key=ExperimentRecord.key):
        w.writerow(rec.row())
    return buf.getvalue()


def plot_data(records: Sequence[ExperimentRecord]) -> dict:
    """Per algorithm: ``log2`` charged queries and ``log2`` median error per budget."""
    out: dict[str, dict[str, list[float]]] = {}
    for s in summarize(records):
        series = out.setdefault(s.algorithm, {"n": [], "log2_queries": [], "log2_median_error": [],
                                              "log2_q75_error": []})
        series["n"].append(s.n)
        series["log2_queries"].append(math.log2(s.queries))
        series["log2_median_error"].append(math.log2(s.median) if s.median > 0 else float("-inf"))
        series["log2_q75_error"].append(math.log2(s.q75) if s.q75 > 0 else float("-inf"))
    return out


def emit(records: Sequence[ExperimentRecord], path, fmt: str = "csv") -> Path:
    """Write ``records`` as CSV or plot data (JSON); refuses an empty list."""
    if not records:
        raise ValueError("no records to write")
    path = Path(path)
    if fmt == "csv":
        text = records_to_csv(records)
    elif fmt == "plot-data":
        text = json.dumps(plot_data(records), indent=1, sort_keys=True) + "\n"
    else:
        raise ValueError(f"unknown format {fmt!r}")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def read_csv(path) -> list[ExperimentRecord]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_COLUMNS:
            raise ValueError(f"unexpected CSV header {header}")
        return [ExperimentRecord(row[0], int(row[1]), int(row[2]), int(row[3]), int(row[4]),
                                 int(row[5]), int(row[6]), int(row[7]), float(row[8]))
                for row in reader]


def format_failure(exc: BaseException) -> str:
    return "".join(traceback.format_exception_only(type(exc), exc)).strip()
