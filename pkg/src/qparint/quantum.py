"""Classically simulated quantum mean estimation, integration and query accounting.

Amplitude estimation is simulated at the level of its exact measurement
law: for a mean ``a = sin^2(pi w)`` and ``n`` oracle calls the phase register
returns ``y`` in ``{0, ..., n-1}`` with probability

    P(y) = (K(y/n - w) + K(y/n + w)) / 2,    K(d) = sin^2(n pi d) / (n^2 sin^2(pi d)),

and the estimate is ``sin^2(pi y / n)``.  Outcomes ``y`` and ``n - y`` give
the same estimate, so we work with the folded index ``j = min(y, n - y)`` in
``{0, ..., n // 2}``.  No state vectors are formed; the cost of a simulated
run is independent of the length of the array being averaged.

Signed data in ``[-1, 1]`` are mapped affinely into ``[1/4, 3/4]`` with a
random, known offset before amplitude estimation.
"""

from __future__ import annotations

import math
import threading
from collections import defaultdict
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .grid import MeshSpec, composite_weights, interpolate, lebesgue_constant, mesh_points

# Largest temporary array (in elements) built while sampling or streaming.
CHUNK_ELEMENTS = 2**22

# ---------------------------------------------------------------------------
# Random streams


@dataclass(frozen=True)
class RandomSource:
    """Splittable random streams keyed by integer tuples.

    The stream for key ``(a, b, ...)`` is a PCG64 generator seeded with
    ``SeedSequence(seed, spawn_key=(a, b, ...))``, so every stream depends
    only on the seed and its key, never on the order in which streams are
    requested.
    """

    seed: int

    def stream(self, *key: int) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=tuple(int(k) for k in key))
        return np.random.Generator(np.random.PCG64(ss))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RandomSource):
        return rng.stream()
    return np.random.default_rng(rng)


# ---------------------------------------------------------------------------
# Query ledger

PHASES = ("start-level", "fine-level")


class QueryLedger:
    """Counts oracle calls to ``f`` per ``(level, phase)``.

    Increments are guarded by a lock; per-worker ledgers can also be combined
    with :meth:`merge`.
    """

    MAX_TOTAL = 2**63 - 1

    def __init__(self):
        self._counts: dict[tuple[int, str], int] = defaultdict(int)
        self._lock = threading.Lock()

    def charge(self, level: int, phase: str, amount: int) -> None:
        if phase not in PHASES:
            raise ValueError(f"unknown phase {phase!r}")
        amount = int(amount)
        if amount < 0:
            raise ValueError("cannot charge a negative number of queries")
        with self._lock:
            if self.total() + amount > self.MAX_TOTAL:
                raise OverflowError("query ledger overflow")
            self._counts[(int(level), phase)] += amount

    def total(self) -> int:
        return sum(self._counts.values())

    def by_level(self) -> dict[int, int]:
        out: dict[int, int] = defaultdict(int)
        for (level, _), c in self._counts.items():
            out[level] += c
        return dict(sorted(out.items()))

    def entries(self) -> dict[tuple[int, str], int]:
        return dict(sorted(self._counts.items()))

    def merge(self, other: "QueryLedger") -> "QueryLedger":
        for (level, phase), c in other.entries().items():
            self.charge(level, phase, c)
        return self


def ledger_charge(ledger: QueryLedger, level: int, phase: str, amount: int) -> None:
    ledger.charge(level, phase, amount)


def ledger_total(ledger: QueryLedger) -> int:
    return ledger.total()


# ---------------------------------------------------------------------------
# Amplitude estimation law


def err_bound(n: int, a) -> np.ndarray:
    """Error bound met with probability at least ``8 / pi^2`` by ``n``-query estimation."""
    a = np.asarray(a, dtype=float)
    return 2 * np.pi * np.sqrt(a * (1 - a)) / n + np.pi**2 / n**2


def _fejer(delta: np.ndarray, n: int) -> np.ndarray:
    delta = delta - np.round(delta)
    den = np.sin(np.pi * delta)
    tiny = np.abs(den) < 1e-300
    safe = np.where(tiny, 1.0, den)
    return np.where(tiny, 1.0, np.sin(n * np.pi * delta) ** 2 / (n**2 * safe**2))


def qae_outcome_distribution(a, n: int) -> np.ndarray:
    """Exact probabilities of the folded outcomes ``j = 0..n//2``.

    ``a`` may be an array; the result then has shape ``a.shape + (n//2 + 1,)``.
    """
    if n < 1:
        raise ValueError("amplitude estimation needs n >= 1")
    a = np.asarray(a, dtype=float)
    omega = np.arcsin(np.sqrt(np.clip(a, 0.0, 1.0))) / np.pi
    y = np.arange(n) / n
    d = y - omega[..., None]
    p = 0.5 * (_fejer(d, n) + _fejer(y + omega[..., None], n))
    half = n // 2
    out = p[..., :half + 1].copy()
    # Fold y and n - y together.
    upper = np.arange(1, (n - 1) // 2 + 1)
    out[..., upper] += p[..., n - upper]
    return out


def qae_estimates(n: int) -> np.ndarray:
    """Estimate attached to each folded outcome."""
    return np.sin(np.pi * np.arange(n // 2 + 1) / n) ** 2


def sample_qae(a, n: int, u) -> np.ndarray:
    """Simulated estimates for means ``a`` (shape ``A``) from uniforms ``u`` (shape ``A + R``).

    Inverse-CDF sampling of :func:`qae_outcome_distribution`; deterministic
    given ``u``.  A budget of zero returns zeros.
    """
    a = np.asarray(a, dtype=float)
    u = np.asarray(u, dtype=float)
    if n == 0:
        return np.zeros(u.shape)
    extra = u.ndim - a.ndim
    a_full = np.broadcast_to(a.reshape(a.shape + (1,) * extra), u.shape).ravel()
    u_flat = u.ravel()
    est = qae_estimates(n)
    out = np.empty(u_flat.shape)
    step = max(1, CHUNK_ELEMENTS // (2 * n))
    for start in range(0, len(u_flat), step):
        sl = slice(start, start + step)
        cdf = np.cumsum(qae_outcome_distribution(a_full[sl], n), axis=-1)
        cdf[:, -1] = 1.0
        out[sl] = est[np.sum(cdf < u_flat[sl, None], axis=-1)]
    return out.reshape(u.shape)


def qae_mean(values, n: int, rng, ledger: Optional[QueryLedger] = None,
             level: int = 0, phase: str = "fine-level") -> float:
    """Simulated amplitude estimation of the mean of ``values`` in ``[0, 1]`` with ``n`` queries."""
    values = np.asarray(values, dtype=float)
    if values.size == 0 or n < 1:
        raise ValueError("need a nonempty array and n >= 1")
    if np.any(values < 0.0) or np.any(values > 1.0):
        raise ValueError("values must lie in [0, 1]; scale them first")
    a = float(np.mean(values))
    if ledger is not None:
        ledger.charge(level, phase, n)
    return float(sample_qae(a, n, as_generator(rng).random()))


# Signed means: x in [-1, 1] is encoded as a = offset + x / 4 with a random,
# known offset in [1/4, 3/4].  The offset dithers the position of the phase
# relative to the outcome grid, so the error law does not hinge on arithmetic
# coincidences between n and the mean.
DITHER_SLOPE = 0.25


def sample_signed(xbar, n: int, u_offset, u_outcome) -> np.ndarray:
    """Estimates of means ``xbar`` in ``[-1, 1]`` from ``n`` queries each.

    ``u_offset`` and ``u_outcome`` are uniforms of identical shape ``A + R``
    (``A`` the shape of ``xbar``).  Estimates are clipped to ``[-1, 1]``.  The
    error exceeds
    ``err_bound(n, a) / DITHER_SLOPE`` with probability at most ``1 - 8/pi^2``.
    """
    xbar = np.asarray(xbar, dtype=float)
    u_offset = np.asarray(u_offset, dtype=float)
    if n == 0:
        return np.zeros(u_offset.shape)
    extra = u_offset.ndim - xbar.ndim
    offset = 0.25 + 0.5 * u_offset
    a = np.clip(offset + DITHER_SLOPE * xbar.reshape(xbar.shape + (1,) * extra), 0.0, 1.0)
    flat = sample_qae(a.ravel(), n, np.asarray(u_outcome, dtype=float).ravel())
    # Projecting onto the known range [-1, 1] can only reduce the error.
    return np.clip((flat.reshape(a.shape) - offset) / DITHER_SLOPE, -1.0, 1.0)


def signed_mean(values, n: int, rng, scale: float = 1.0) -> float:
    """Mean of values in ``[-scale, scale]`` from ``n`` simulated queries."""
    x = np.asarray(values, dtype=float) / scale
    if np.any(np.abs(x) > 1.0):
        raise NormBoundViolation(f"values exceed the declared bound {scale}")
    u = as_generator(rng).random(2)
    return float(scale * sample_signed(float(np.mean(x)), n, u[0], u[1]))


def classical_subsample_mean(values, n: int, rng) -> float:
    """Mean of ``n`` entries drawn uniformly with replacement (the classical comparator)."""
    values = np.asarray(values, dtype=float).ravel()
    idx = as_generator(rng).integers(0, values.size, size=n)
    return float(values[idx].mean())


@dataclass(frozen=True)
class MeanEstimator:
    """Bounded-error mean estimator with a fixed query budget."""

    n: int
    mode: str = "amplitude-simulation"

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("budget must be positive")
        if self.mode not in ("amplitude-simulation", "classical-subsample"):
            raise ValueError(f"unknown mode {self.mode!r}")

    def __call__(self, values, rng) -> float:
        if self.mode == "amplitude-simulation":
            return qae_mean(values, self.n, rng)
        return classical_subsample_mean(values, self.n, rng)

    def bound(self, a) -> np.ndarray:
        if self.mode == "amplitude-simulation":
            return err_bound(self.n, a)
        return 3.0 * np.sqrt(np.asarray(a) * (1 - np.asarray(a)) / self.n)


# ---------------------------------------------------------------------------
# Median boosting


def lower_median(x, axis: int = -1) -> np.ndarray:
    """Lower median along ``axis`` (the ordinary median for an odd count)."""
    x = np.asarray(x, dtype=float)
    m = x.shape[axis]
    return np.take(np.partition(x, (m - 1) // 2, axis=axis), (m - 1) // 2, axis=axis)


def median_boost(run: Callable[[np.random.Generator], float], M: int, rng) -> float:
    """Median of ``M`` independent runs of ``run``; the lower median if ``M`` is even."""
    if M < 1:
        raise ValueError("need at least one repetition")
    gen = as_generator(rng)
    return float(lower_median(np.array([run(gen) for _ in range(M)])))


# ---------------------------------------------------------------------------
# Integration


class NormBoundViolation(RuntimeError):
    """Data exceeded the bound used to scale it into the estimator's range."""


def interpolation_error_bound(r: int, d: int, k: int, norm_bound: float = 1.0) -> float:
    """Sup-norm bound for composite degree-``r`` interpolation of ``C^r`` data at level ``k``.

    One axis contributes ``(1 + Lambda) (h/2)^r / r!`` (Taylor remainder of
    degree ``r-1`` about the cell centre plus the Lebesgue constant
    ``Lambda``); a tensor product of ``d`` axes costs at most
    ``d Lambda^(d-1)`` times that.
    """
    lam = lebesgue_constant(r)
    h = 2.0**-k
    return norm_bound * d * lam ** (d - 1) * (1 + lam) * (h / 2) ** r / math.factorial(r)


@dataclass(frozen=True, eq=False)
class IntegrationPlan:
    """Deterministic part of simulated quantum integration for a batch of integrands.

    ``exact`` is the integral of the interpolant, ``scale`` the residual bound,
    ``xbar`` the mean of the scaled residual on the rectangle grid and
    ``n_sum`` the oracle-call budget of the summation step (two queries per
    call).
    """

    n: int
    mesh_level: Optional[int]
    n_sum: int
    scale: float
    exact: np.ndarray
    xbar: np.ndarray
    residual_sup: np.ndarray

    def sample(self, u: np.ndarray) -> np.ndarray:
        """Estimates for uniforms ``u`` of shape ``(batch, R, 2)``."""
        u = np.asarray(u, dtype=float)
        est = sample_signed(self.xbar, self.n_sum, u[..., 0], u[..., 1])
        return self.exact.reshape(self.exact.shape + (1,) * (est.ndim - 1)) + self.scale * est



def _mesh_level(budget: int, r: int, d: int) -> Optional[int]:
    """Finest level whose mesh has at most ``budget`` points, or None."""
    q = -1
    while (r * 2 ** (q + 1) + 1) ** d <= budget:
        q += 1
    return q if q >= 0 else None


def plan_integration(g: Callable[[np.ndarray], np.ndarray], n: int, r: int, d2: int,
                     norm_bound: float = 1.0, batch: Optional[int] = None) -> IntegrationPlan:
    """Set up one-level variance-reduced quantum integration with total budget ``n``.

    ``g(t)`` takes points of shape ``(P, d2)`` and returns ``(P,)`` or, for a
    batch of integrands, ``(batch, P)``.  About half of the budget samples
    ``g`` on the finest mesh that fits; the interpolant is integrated
    exactly.  The rest runs simulated amplitude estimation on the residual,
    which is sampled on a left-endpoint rectangle grid of ``2^(rq) * n_sum``
    nodes per axis (``q`` the mesh level) and scaled by the interpolation
    error bound.  Without room for a mesh the whole budget goes to
    estimating the mean of ``g`` scaled by ``norm_bound``.
    """
    if n < 1:
        raise ValueError("budget must be positive")

    def call(t):
        out = np.asarray(g(t), dtype=float)
        return out[None, :] if out.ndim == 1 else out

    q = _mesh_level(n // 2, r, d2)
    if q is None:
        n_mesh = 0
        scale = float(norm_bound)
        exact = None
    else:
        spec = MeshSpec(q, r, d2)
        n_mesh = spec.size
        samples = call(mesh_points(spec))
        exact = samples @ composite_weights(q, r, d2)
        mesh_vals = np.moveaxis(samples, 0, -1).reshape(spec.shape + (samples.shape[0],))
        scale = interpolation_error_bound(r, d2, q, norm_bound)
    n_sum = (n - n_mesh) // 2
    width = len(exact) if exact is not None else (batch or call(np.zeros((1, d2))).shape[0])
    if exact is None:
        exact = np.zeros(width)
    b = 2 ** (r * (q or 0)) * max(n_sum, 1)
    total = b**d2
    acc = np.zeros(width)
    sup = np.zeros(width)
    chunk = max(1, CHUNK_ELEMENTS // width)
    for start in range(0, total, chunk):
        j = np.arange(start, min(start + chunk, total))
        digits = np.stack(np.unravel_index(j, (b,) * d2), axis=-1)
        T = digits / b
        res = call(T)
        if q is not None:
            res = res - interpolate(mesh_vals, T, q, r).T
        np.maximum(sup, np.abs(res).max(axis=1), out=sup)
        acc += res.sum(axis=1)
    if np.any(sup > scale * (1 + 1e-12)):
        raise NormBoundViolation(
            f"residual sup {sup.max():.3e} exceeds the bound {scale:.3e} implied by "
            f"the declared C^r norm {norm_bound}")
    return IntegrationPlan(n, q, n_sum, scale, exact, acc / total / scale, sup)


def quantum_integrate(g: Callable[[np.ndarray], np.ndarray], n: int, rng, r: int, d2: int,
                      norm_bound: float = 1.0, ledger: Optional[QueryLedger] = None,
                      level: int = 0) -> float:
    """Simulated quantum integral of ``g`` over ``[0,1]^d2`` using exactly ``n`` queries."""
    plan = plan_integration(g, n, r, d2, norm_bound)
    if ledger is not None:
        ledger.charge(level, "start-level", n)
    u = as_generator(rng).random((1, 1, 2))
    return float(plan.sample(u)[0, 0])
