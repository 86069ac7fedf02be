"""Calibrate the detail bound c_1 on the test corpus.

For each (r, d1) we compute the largest discretized detail, scaled by 2^(rk),
over the corpus functions and levels k = 1..5, and print twice that value
next to the rigorous bound from the interpolation error estimate.  A second
table gives the largest gap between the exact detail integral and the mean
of its discretization, scaled by 2^(rk) n2.  Twice these values are what
``qparint.constants`` freezes.

    python demos/calibrate_constants.py
"""

import math

import numpy as np

from qparint.detail import FixedPointCodec, NodeSet, level_statistics, level_stencil
from qparint.fooling import BumpFamily, fooling_instance
from qparint.functions import CORPUS, corpus_function
from qparint.grid import lebesgue_constant

CONFIGS = [(1, 1), (2, 1), (3, 1), (1, 2), (2, 2)]
N2 = 1  # the coarsest codec, where quantization error is largest


def observed(f, levels=range(1, 6)):
    worst = 0.0
    for k in levels:
        if (f.r * 2**k + 1) ** f.d1 > 5000:
            break
        stencil = level_stencil(k, f.r, f.d1)
        nodes = NodeSet.for_level(f.r, k, N2, f.d2)
        if nodes.size > 2**16:
            nodes = NodeSet(2**16, f.d2)
        stats = level_statistics(f, stencil, nodes, FixedPointCodec.for_level(f.r, k, N2))
        worst = max(worst, float(stats.sup.max()) * 2.0 ** (f.r * k) / f.norm_bound)
    return worst


def theory(r, d1):
    lam = lebesgue_constant(r)
    return d1 * lam ** (d1 - 1) * (1 + lam) / math.factorial(r)


def print_detail_bounds():
    rng = np.random.default_rng(0)
    print("r d1  observed  2*observed  theory  worst-function")
    for r, d1 in CONFIGS:
        cands = {name: corpus_function(name, r, d1, 1) for name in CORPUS}
        fam = BumpFamily(4, d1, 1, r)
        cands["fooling"] = fooling_instance(fam, rng.integers(0, 2, fam.L))
        vals = {name: observed(f) for name, f in cands.items()}
        name = max(vals, key=vals.get)
        print(f"{r} {d1}  {vals[name]:.4f}  {2 * vals[name]:.4f}  {theory(r, d1):.4f}  {name}")


def discretization(f, levels=range(1, 5), n2_values=(1, 4, 16)):
    """Largest |U_{k,s} f - mean Gamma_{k,s} f| * 2^(rk) * n2 over levels and budgets."""
    from qparint.detail import DetailContext, detail_reference
    from qparint.grid import MeshSpec, mesh_points

    worst = 0.0
    for k in levels:
        stencil = level_stencil(k, f.r, f.d1)
        if len(stencil.new) > 400:
            break
        pts = mesh_points(MeshSpec(k, f.r, f.d1))[stencil.new]
        for n2 in n2_values:
            nodes = NodeSet.for_level(f.r, k, n2, f.d2)
            if nodes.size > 2**18:
                continue
            stats = level_statistics(f, stencil, nodes, FixedPointCodec.for_level(f.r, k, n2))
            exact = np.array([detail_reference(f, DetailContext.at(s, k, f.r)) for s in pts])
            worst = max(worst, float(np.max(np.abs(exact - stats.mean))) * 2.0 ** (f.r * k) * n2)
    return worst


def print_discretization():
    print("r d1  discretization  2*value  worst-function")
    for r, d1 in CONFIGS:
        vals = {name: discretization(corpus_function(name, r, d1, 1)) for name in CORPUS}
        name = max(vals, key=vals.get)
        print(f"{r} {d1}  {vals[name]:.4f}  {2 * vals[name]:.4f}  {name}")


if __name__ == "__main__":
    print_detail_bounds()
    print()
    print_discretization()
