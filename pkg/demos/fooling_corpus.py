"""The bump-function corpus behind the lower bound.

Builds the family for m=4, r=2, d1=d2=1, checks that its members lie in the
unit ball, and shows that two instances differing in one bit have parametric
integrals exactly one separation apart.

    python demos/fooling_corpus.py
"""

import numpy as np

from qparint.fooling import BumpFamily, corpus_manifest, fooling_instance, hex_to_u, \
    instance_norm_proxy, rho

fam = BumpFamily(4, 1, 1, 2)
print(f"L = {fam.L} cells, norm_gamma = {fam.norm_gamma:.4e}, sigma0 = {fam.sigma0:.6f}")
print(f"sampled C^r norm of the full instance: {instance_norm_proxy(fam, np.ones(fam.L, int)):.4f}")
print(f"separation e^-4 sigma0 / (norm_gamma m^3) = {fam.separation():.4e}")

entries = corpus_manifest(fam, 2, seed=1)
u, v = (hex_to_u(e["u"], fam.L) for e in entries)
s = np.linspace(0, 1, 33)[:, None]
gap = np.abs(fooling_instance(fam, u).solution(s) - fooling_instance(fam, v).solution(s))
print(f"instances with |u| = {u.sum()} and {v.sum()}: sup gap of the parametric integrals {gap.max():.4e}")

L = fam.L
print(f"\nrho(L, L/2-1, L/2) = {rho(L, L // 2 - 1, L // 2):.3f}  vs  sqrt(L^2/4 - 1) = "
      f"{np.sqrt(L**2 / 4 - 1):.3f}")
