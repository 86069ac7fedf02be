"""The multilevel parametric-integration algorithm.

On the start level the integrals ``int f(s, t) dt`` are estimated directly at
every node ``s`` of the coarse mesh.  On each finer level ``k`` only the
integrals of the detail functions at the new nodes are estimated, with a
query budget that shrinks as the details get smaller.  Every node estimate is
the median of ``M_k`` independent runs.  The level estimates are
interpolated and added up into a single interpolant on the final level.

A run is split into a deterministic *plan* (schedule, discretized arrays and
their means, which depend only on ``f`` and ``n``) and a cheap *sampling*
step that draws the simulated measurement outcomes for a seed.  Sweeps over
many seeds reuse the plan.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .constants import detail_constant, tolerance_constant
from .detail import FixedPointCodec, NodeSet, level_statistics, level_stencil, reference_integral
from .functions import SmoothFunction
from .grid import MeshSpec, PiecewiseLagrange, mesh_points
from .quantum import (IntegrationPlan, NormBoundViolation, QueryLedger, RandomSource,
                      lower_median, plan_integration, sample_signed)

# Largest rectangle grid per level that we are willing to simulate.
MAX_SUMMANDS = 2**40


# ---------------------------------------------------------------------------
# Schedule


@dataclass(frozen=True)
class LevelSchedule:
    """Levels, budgets and repetition counts of one multilevel run.

    The per-level arrays are indexed by ``k - m_start`` for
    ``k = m_start, ..., l``.
    """

    n: int
    r: int
    d1: int
    d2: int
    m: int
    m_start: int
    l: int
    p: Optional[int]
    n1: tuple[int, ...]
    n2: tuple[int, ...]
    N: tuple[int, ...]
    M: tuple[int, ...]
    theta: tuple[float, ...]
    n_hat: tuple[int, ...]

    @property
    def levels(self) -> range:
        return range(self.m_start, self.l + 1)

    @property
    def v(self) -> int:
        return (self.r + 1) ** self.d1

    @property
    def n_tilde(self) -> int:
        return sum(self.n_hat)

    def at(self, k: int) -> dict:
        """All per-level quantities of level ``k`` as a dict."""
        i = k - self.m_start
        if not 0 <= i < len(self.n1):
            raise IndexError(f"level {k} outside [{self.m_start}, {self.l}]")
        return {"k": k, "n1": self.n1[i], "n2": self.n2[i], "N": self.N[i],
                "M": self.M[i], "theta": self.theta[i], "n_hat": self.n_hat[i]}

    def to_record(self) -> dict:
        return {"n": self.n, "r": self.r, "d1": self.d1, "d2": self.d2, "m": self.m,
                "m_start": self.m_start, "l": self.l, "p": self.p,
                "levels": [self.at(k) for k in self.levels], "n_tilde": self.n_tilde}


def _log2_floor_ratio(n: int, d: int) -> int:
    # floor(log2(n) / d + 1) without trusting floating point at exact powers of two
    m = int(math.floor(math.log2(n) / d + 1))
    while 2 ** ((m - 1) * d) > n:
        m -= 1
    while 2 ** (m * d) <= n:
        m += 1
    return m


def _ceil_pow2(x: float) -> int:
    """``ceil(2^x)`` with exact results when ``x`` is an integer."""
    if float(x).is_integer():
        return 2 ** int(x) if x >= 0 else 1
    return math.ceil(2.0**x)


def build_schedule(n: int, r: int, d1: int, d2: int) -> LevelSchedule:
    """Closed-form parameter schedule for nominal budget ``n``.

    ``r = d1`` uses the ``r >= d1`` branch.  For small ``n`` in the
    ``r < d1`` case the final level is clamped to at least the start level.
    """
    if n < 4 or r < 1 or d1 < 1 or d2 < 1:
        raise ValueError(f"need n >= 4 and r, d1, d2 >= 1; got n={n}, r={r}, d1={d1}, d2={d2}")
    m = _log2_floor_ratio(n, d1 + d2)
    if r >= d1:
        m_start, p = m, None
        l = math.ceil((r + d2) * m / r)
    else:
        m_start = 0
        p = int(math.floor(math.log2(m) / d1))
        l = max(math.ceil((d1 + d2) * m / d1) - p, m_start)
    v = (r + 1) ** d1
    n1, n2, N, M, theta, n_hat = [], [], [], [], [], []
    for k in range(m_start, l + 1):
        n1k = (r * 2**k + 1) ** d1
        Mk = math.ceil(8 * (k + 3) * math.log(2) + 8 * math.log(n1k))
        if r >= d1:
            n2k = _ceil_pow2(d2 * m - 0.5 * (r + d1) * (k - m))
        else:
            n2k = math.ceil(2.0 ** ((d1 + d2) * m - d1 * k - 0.5 * (d1 - r) * (l - k)) / Mk)
        Nk = (2 ** (r * k) * n2k) ** d2
        if k == m_start:
            nh = Mk * n1k * n2k
        else:
            nh = Mk * (n1k - (r * 2 ** (k - 1) + 1) ** d1) * 2 * (v + 1) * n2k
        n1.append(n1k); n2.append(n2k); N.append(Nk); M.append(Mk)
        theta.append(2.0 ** -(k + 3)); n_hat.append(nh)
    return LevelSchedule(n, r, d1, d2, m, m_start, l, p, tuple(n1), tuple(n2), tuple(N),
                         tuple(M), tuple(theta), tuple(n_hat))


# ---------------------------------------------------------------------------
# Planning


@dataclass(frozen=True, eq=False)
class LevelPlan:
    """Deterministic data of one fine (or ``r < d1`` start) level.

    ``nodes`` are flat level-``k`` mesh indices of the estimated nodes,
    ``xbar`` the means of the discretized arrays divided by ``scale`` and
    ``exact`` their unscaled means.
    """

    k: int
    nodes: np.ndarray
    scale: float
    xbar: np.ndarray
    exact: np.ndarray
    sup: np.ndarray
    m_star: int


@dataclass(frozen=True, eq=False)
class ParintPlan:
    """Everything about a run that does not depend on the seed."""

    f: SmoothFunction
    schedule: LevelSchedule
    start: object            # IntegrationPlan (r >= d1) or LevelPlan (r < d1)
    fine: tuple[LevelPlan, ...]


def _level_plan(f: SmoothFunction, sched: LevelSchedule, k: int, scale: float) -> LevelPlan:
    info = sched.at(k)
    if info["N"] > MAX_SUMMANDS:
        raise ValueError(f"level {k} needs {info['N']} summands, beyond the simulation limit")
    stencil = level_stencil(k, sched.r, sched.d1)
    nodes = NodeSet.for_level(sched.r, k, info["n2"], sched.d2)
    codec = FixedPointCodec.for_level(sched.r, k, info["n2"])
    stats = level_statistics(f, stencil, nodes, codec)
    worst = float(stats.sup.max(initial=0.0))
    if worst > scale:
        raise NormBoundViolation(
            f"level {k}: discretized detail reaches {worst:.3e}, above the bound {scale:.3e}; "
            f"the declared C^r norm {f.norm_bound} is too small for this integrand")
    return LevelPlan(k, stencil.new, scale, stats.mean / scale, stats.mean, stats.sup,
                     codec.m_star)


def detail_scale(f: SmoothFunction, k: int) -> float:
    """Bound ``c_1 2^(-rk)`` on the discretized details of level ``k``."""
    return detail_constant(f.r, f.d1) * f.norm_bound * 2.0 ** (-f.r * k)


def prepare_parint(f: SmoothFunction, n: int) -> ParintPlan:
    """Schedule and all deterministic per-level data for ``f`` with budget ``n``."""
    sched = build_schedule(n, f.r, f.d1, f.d2)
    k0 = sched.m_start
    if f.r >= f.d1:
        S = mesh_points(MeshSpec(k0, f.r, f.d1))
        start = plan_integration(lambda T: f(S[:, None, :], T[None, :, :]), sched.n2[0],
                                 f.r, f.d2, f.norm_bound, batch=len(S))
    else:
        start = _level_plan(f, sched, k0, f.norm_bound)
    fine = tuple(_level_plan(f, sched, k, detail_scale(f, k)) for k in sched.levels if k > k0)
    return ParintPlan(f, sched, start, fine)


# ---------------------------------------------------------------------------
# Sampling and assembly


@dataclass(frozen=True, eq=False)
class ParintResult:
    """Output of one run: the final interpolant, the query ledger and provenance."""

    approximation: PiecewiseLagrange
    ledger: QueryLedger
    schedule: LevelSchedule
    seed: int
    level_estimates: dict = field(default_factory=dict, repr=False)

    def to_text(self) -> str:
        """JSON document: the interpolant record plus a ``metadata`` block."""
        doc = {
            "interpolant": self.approximation.to_record(),
            "metadata": {
                "seed": self.seed,
                "schedule": self.schedule.to_record(),
                "ledger": [{"level": k, "phase": ph, "queries": c}
                           for (k, ph), c in self.ledger.entries().items()],
                "query_total": self.ledger.total(),
            },
        }
        return json.dumps(doc, indent=1, sort_keys=True)

    @staticmethod
    def from_text(text: str) -> tuple[PiecewiseLagrange, dict]:
        doc = json.loads(text)
        return PiecewiseLagrange.from_record(doc["interpolant"]), doc["metadata"]


def _median_runs(plan, n2: int, u: np.ndarray) -> np.ndarray:
    """Lower median over the repetitions of each node; ``u`` is ``(nodes, M, 2)``."""
    if isinstance(plan, IntegrationPlan):
        runs = plan.sample(u)
    else:
        runs = plan.scale * sample_signed(plan.xbar, n2, u[..., 0], u[..., 1])
    return lower_median(runs, axis=-1)


def sample_parint(plan: ParintPlan, seed: int) -> ParintResult:
    """Draw the simulated measurements for ``seed`` and assemble the interpolant.

    Level ``k`` consumes the stream ``RandomSource(seed).stream(k)``: one
    array of shape ``(nodes, M_k, 2)`` in mesh order of the estimated nodes.
    """
    sched = plan.schedule
    f = plan.f
    source = RandomSource(seed)
    ledger = QueryLedger()
    k0 = sched.m_start
    size0 = sched.n1[0]
    u = source.stream(k0).random((size0, sched.M[0], 2))
    xi = _median_runs(plan.start, sched.n2[0], u)
    ledger.charge(k0, "start-level", sched.n_hat[0])
    estimates = {k0: xi}
    approx = PiecewiseLagrange(k0, f.r, f.d1, xi)
    for lp in plan.fine:
        info = sched.at(lp.k)
        u = source.stream(lp.k).random((len(lp.nodes), info["M"], 2))
        est = _median_runs(lp, info["n2"], u)
        ledger.charge(lp.k, "fine-level", info["n_hat"])
        values = np.zeros(info["n1"])
        values[lp.nodes] = est
        estimates[lp.k] = est
        approx = approx.refine(lp.k) + PiecewiseLagrange(lp.k, f.r, f.d1, values)
    return ParintResult(approx, ledger, sched, seed, estimates)


def run_parint(f: SmoothFunction, n: int, seed: int) -> ParintResult:
    """Run the multilevel algorithm on ``f`` with nominal budget ``n``."""
    return sample_parint(prepare_parint(f, n), seed)


# ---------------------------------------------------------------------------
# Error measurement


def exact_solution(f: SmoothFunction, s: np.ndarray) -> np.ndarray:
    """``int f(s, t) dt`` from the closed form when known, else by reference quadrature."""
    if f.solution is not None:
        return np.asarray(f.solution(s), dtype=float)
    return reference_integral(f, s)


def probe_points(k: int, r: int, d1: int, factor: int = 4) -> np.ndarray:
    """Uniform probe grid ``factor`` times finer than the level-``k`` mesh."""
    x = np.linspace(0.0, 1.0, factor * r * 2**k + 1)
    grids = np.meshgrid(*([x] * d1), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


def measure_sup_error(approximation: PiecewiseLagrange, f: SmoothFunction,
                      factor: int = 4) -> float:
    """Max of ``|Sf - approximation|`` on a probe grid ``factor`` times finer than its mesh."""
    if factor < 4:
        raise ValueError("probe must be at least 4 times finer than the mesh")
    if isinstance(approximation, ParintResult):
        approximation = approximation.approximation
    s = probe_points(approximation.k, approximation.r, approximation.d1, factor)
    return float(np.max(np.abs(exact_solution(f, s) - approximation(s))))


def level_tolerance(f: SmoothFunction, k: int, n2: int) -> float:
    """Per-level tolerance ``c 2^(-rk) / n2`` on a node's median estimate."""
    return tolerance_constant(f.r, f.d1) * f.norm_bound * 2.0 ** (-f.r * k) / n2
