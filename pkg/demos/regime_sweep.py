"""Quantum, deterministic and Monte Carlo methods on one test function.

Runs a small sweep for r=2, d1=d2=1 on the lacunary test function, prints
median errors per budget and the fitted slopes next to the theoretical
exponents.  The quantum method pays large constants at these budgets; its
advantage is the slope.

    python demos/regime_sweep.py            # about a minute on one core
"""

from qparint.bench import BenchConfig, expected_slopes, fit_slope, run_sweep, summarize

r, d1, d2 = 2, 1, 1
runs = {
    # budgets 2^(2j) and 2^(2j+1) share a schedule when d1 + d2 = 2, so step by 4
    "quantum": BenchConfig(r, d1, d2, ("quantum",), (16, 64, 256, 1024), 7, 0, "lacunary"),
    "mc": BenchConfig(r, d1, d2, ("mc",), (256, 1024, 4096, 16384), 7, 0, "lacunary"),
    "det": BenchConfig(r, d1, d2, ("det",), (64, 256, 1024, 4096, 16384), 1, 0, "lacunary"),
}
expected = expected_slopes(r, d1, d2)
for algo, cfg in runs.items():
    res = run_sweep(cfg)
    print(f"{algo}:")
    for s in summarize(res.records):
        print(f"  n={s.n:6d}  queries={s.queries:10d}  median={s.median:.3e}  q75={s.q75:.3e}")
    fit = fit_slope(res.records)
    print(f"  slope {fit.slope:.3f} +- {fit.stderr:.3f}   (theory {expected[algo]:.3f})")
