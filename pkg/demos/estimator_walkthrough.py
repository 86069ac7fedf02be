"""Simulated amplitude estimation, from one run to a boosted integral.

1. The outcome law of a single run concentrates on the two grid points
   next to the true mean.
2. The error shrinks like 1/n regardless of the array length.
3. The median of M runs fails far less often than one run.
4. Quantum integration of sin(2 pi t) with an interpolation control variate.

    python demos/estimator_walkthrough.py
"""

import numpy as np

from qparint.quantum import (err_bound, lower_median, qae_estimates, qae_mean,
                             qae_outcome_distribution, quantum_integrate)

a, n = 0.35, 16
p = qae_outcome_distribution(a, n)
print(f"outcome law for a={a}, n={n}:")
for est, prob in zip(qae_estimates(n), p):
    if prob > 0.01:
        print(f"  estimate {est:.4f}  probability {prob:.3f}")

rng = np.random.default_rng(0)


def random_array(size):
    # means spread over (0, 1), so they rarely sit on an outcome grid point
    return rng.random(size) * rng.uniform(0.1, 1.0)


print("\nmedian error against n (arrays of length 2^12):")
for n in (16, 64, 256, 1024):
    errs = []
    for _ in range(200):
        x = random_array(2**12)
        errs.append(abs(qae_mean(x, n, rng) - x.mean()))
    print(f"  n={n:5d}  median error {np.median(errs):.2e}  n * error {n * np.median(errs):.2f}")

print("\nfailure rate of one run vs the median of 15 runs (n=8, bound err_bound):")
single, boosted = [], []
for _ in range(2000):
    x = random_array(64)
    a = x.mean()
    runs = np.array([qae_mean(x, 8, rng) for _ in range(15)])
    single.append(abs(runs[0] - a) > err_bound(8, a))
    boosted.append(abs(lower_median(runs) - a) > err_bound(8, a))
print(f"  single {np.mean(single):.3f}   median of 15 {np.mean(boosted):.4f}")

g = lambda t: np.sin(2 * np.pi * t[:, 0])
print("\nintegral of sin(2 pi t) (exact 0), r=2, median over 25 seeds:")
for n in (32, 64, 128, 256, 512):
    med = np.median([abs(quantum_integrate(g, n, s, 2, 1, norm_bound=(2 * np.pi) ** 2))
                     for s in range(25)])
    print(f"  n={n:4d}  {med:.2e}")
