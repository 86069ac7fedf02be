"""Classical comparison algorithms: a deterministic tensor-grid method and a
simplified multilevel Monte Carlo method.

Both return the approximation as a :class:`PiecewiseLagrange` in the
parameter together with the exact number of evaluations of ``f`` they used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .functions import SmoothFunction
from .grid import MeshSpec, PiecewiseLagrange, composite_weights, interpolate, mesh_points
from .multilevel import _log2_floor_ratio
from .detail import level_stencil
from .quantum import QueryLedger, RandomSource, _mesh_level


@dataclass(frozen=True, eq=False)
class BaselineResult:
    approximation: PiecewiseLagrange
    queries: int
    ledger: Optional[QueryLedger] = None


# ---------------------------------------------------------------------------
# Deterministic


def deterministic_level(n: int, r: int, d: int) -> int:
    """Finest level whose full tensor grid in ``d`` variables has at most ``n`` points."""
    k = _mesh_level(n, r, d)
    if k is None:
        raise ValueError(f"budget {n} is below one cell ({(r + 1) ** d} points) for r={r}, d={d}")
    return k


def deterministic_baseline(f: SmoothFunction, n: int) -> BaselineResult:
    """Interpolate in ``s`` and integrate the degree-``r`` interpolant in ``t`` exactly.

    Uses the level-``k`` tensor mesh in all ``d1 + d2`` variables, with ``k``
    the finest level that fits the budget; the query count is the grid size.
    """
    k = deterministic_level(n, f.r, f.d1 + f.d2)
    S = mesh_points(MeshSpec(k, f.r, f.d1))
    T = mesh_points(MeshSpec(k, f.r, f.d2))
    w = composite_weights(k, f.r, f.d2)
    values = np.empty(len(S))
    chunk = max(1, 2**22 // len(T))
    for start in range(0, len(S), chunk):
        block = S[start:start + chunk]
        values[start:start + chunk] = f(block[:, None, :], T[None, :, :]) @ w
    return BaselineResult(PiecewiseLagrange(k, f.r, f.d1, values), len(S) * len(T))


# ---------------------------------------------------------------------------
# Monte Carlo


@dataclass(frozen=True)
class MCSchedule:
    """Levels and per-node sample counts of the Monte Carlo baseline."""

    n: int
    r: int
    d1: int
    d2: int
    m: int
    m_start: int
    l: int
    n2: tuple[int, ...]

    @property
    def levels(self) -> range:
        return range(self.m_start, self.l + 1)

    def queries(self) -> int:
        v = (self.r + 1) ** self.d1
        total = 0
        for i, k in enumerate(self.levels):
            n1k = (self.r * 2**k + 1) ** self.d1
            if k == self.m_start:
                total += n1k * self.n2[i]
            else:
                total += (n1k - (self.r * 2 ** (k - 1) + 1) ** self.d1) * (v + 1) * self.n2[i]
        return total


def build_mc_schedule(n: int, r: int, d1: int, d2: int) -> MCSchedule:
    """Level schedule balancing sampling variance against interpolation error.

    For ``r >= d1`` the start level is ``m`` with ``2^(d2 m)`` samples per
    node, the finest level is ``ceil((1 + d2 / (2r)) m)`` and level ``k`` uses
    ``2^(d2 m - (r + d1)(k - m))`` samples per new node.  Otherwise the
    levels run from 0 to the same final level as the quantum schedule and
    level ``k`` uses ``2^(2r(l - k))`` samples.
    """
    if n < 4 or r < 1 or d1 < 1 or d2 < 1:
        raise ValueError(f"need n >= 4 and r, d1, d2 >= 1; got n={n}, r={r}, d1={d1}, d2={d2}")
    m = _log2_floor_ratio(n, d1 + d2)
    if r >= d1:
        m_start = m
        l = math.ceil((2 * r + d2) * m / (2 * r))
        n2 = [math.ceil(2.0 ** (d2 * m - (r + d1) * (k - m))) for k in range(m_start, l + 1)]
    else:
        m_start = 0
        p = int(math.floor(math.log2(m) / d1))
        l = max(math.ceil((d1 + d2) * m / d1) - p, 0)
        n2 = [2 ** (2 * r * (l - k)) for k in range(0, l + 1)]
    return MCSchedule(n, r, d1, d2, m, m_start, l, tuple(n2))


def classical_integrate(values_fn, n: int, rng: np.random.Generator, r: int, d2: int,
                        batch: int) -> np.ndarray:
    """Interpolation plus Monte Carlo on the residual, with exactly ``n`` evaluations.

    ``values_fn(T)`` returns ``(batch, P)``.  About half of the budget goes to
    the finest mesh that fits; the rest samples the residual at uniform
    random points.  Without room for a mesh it is plain Monte Carlo.
    """
    q = _mesh_level(n // 2, r, d2)
    exact = np.zeros(batch)
    n_mesh = 0
    if q is not None:
        spec = MeshSpec(q, r, d2)
        samples = values_fn(mesh_points(spec))
        exact = samples @ composite_weights(q, r, d2)
        mesh_vals = np.moveaxis(samples, 0, -1).reshape(spec.shape + (batch,))
        n_mesh = spec.size
    n_mc = n - n_mesh
    T = rng.random((n_mc, d2))
    res = values_fn(T)
    if q is not None:
        res = res - interpolate(mesh_vals, T, q, r).T
    return exact + res.mean(axis=1)


def mc_baseline(f: SmoothFunction, n: int, seed: int) -> BaselineResult:
    """Simplified multilevel Monte Carlo with the same level structure as the quantum method.

    Node integrals on the start level and detail integrals on the finer
    levels are estimated from uniform random samples in ``t`` (a single
    run per node, no quantization).  A detail sample costs ``v + 1``
    evaluations of ``f``, one per node of its stencil.  Level ``k`` draws
    from ``RandomSource(seed).stream(k)``.
    """
    sched = build_mc_schedule(n, f.r, f.d1, f.d2)
    source = RandomSource(seed)
    ledger = QueryLedger()
    k0 = sched.m_start
    S0 = mesh_points(MeshSpec(k0, f.r, f.d1))
    rng = source.stream(k0)
    if f.r >= f.d1:
        xi = classical_integrate(lambda T: f(S0[:, None, :], T[None, :, :]), sched.n2[0], rng,
                                 f.r, f.d2, len(S0))
    else:
        T = rng.random((len(S0), sched.n2[0], f.d2))
        xi = f(S0[:, None, :], T).mean(axis=1)
    ledger.charge(k0, "start-level", len(S0) * sched.n2[0])
    approx = PiecewiseLagrange(k0, f.r, f.d1, xi)
    for i, k in enumerate(sched.levels):
        if k == k0:
            continue
        n2 = sched.n2[i]
        st = level_stencil(k, f.r, f.d1)
        S = mesh_points(MeshSpec(k, f.r, f.d1))
        rng = source.stream(k)
        est = np.empty(len(st.new))
        chunk = max(1, 2**20 // (n2 * (st.anchors.shape[1] + 1)))
        for a in range(0, len(st.new), chunk):
            b = min(a + chunk, len(st.new))
            T = rng.random((b - a, n2, f.d2))
            val = f(S[st.new[a:b]][:, None, :], T)
            for j in range(st.anchors.shape[1]):
                val -= st.weights[a:b, j, None] * f(S[st.anchors[a:b, j]][:, None, :], T)
            est[a:b] = val.mean(axis=1)
        ledger.charge(k, "fine-level", len(st.new) * (st.anchors.shape[1] + 1) * n2)
        values = np.zeros(MeshSpec(k, f.r, f.d1).size)
        values[st.new] = est
        approx = approx.refine(k) + PiecewiseLagrange(k, f.r, f.d1, values)
    return BaselineResult(approx, ledger.total(), ledger)
