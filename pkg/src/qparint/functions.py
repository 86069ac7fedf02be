"""Integrands on ``D1 x D2 = [0,1]^d1 x [0,1]^d2`` and the test corpus.

A :class:`SmoothFunction` is a vectorized callable ``f(s, t)`` plus the
metadata the algorithms rely on: the dimensions, the smoothness order ``r``
and a declared bound on its ``C^r`` norm.  The corpus members also carry the
closed-form parametric integral ``s -> int f(s, t) dt`` for error
measurement.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


@dataclass(frozen=True, eq=False)
class SmoothFunction:
    """An integrand ``f(s, t)`` with ``s`` in ``D1`` and ``t`` in ``D2``.

    ``func`` must broadcast: ``s`` has shape ``(..., d1)``, ``t`` has shape
    ``(..., d2)`` and the result has the broadcast leading shape.  It must be
    reentrant (pure).
    """

    func: Callable[[np.ndarray, np.ndarray], np.ndarray]
    d1: int
    d2: int
    r: int
    norm_bound: float = 1.0
    name: str = "f"
    solution: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)

    def __call__(self, s, t) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        return np.asarray(self.func(s, t), dtype=float)

    def section(self, s) -> Callable[[np.ndarray], np.ndarray]:
        """The function ``t -> f(s, t)`` for a fixed parameter ``s``."""
        s = np.asarray(s, dtype=float)
        return lambda t: self(s, t)


# ---------------------------------------------------------------------------
# Building blocks

def _kink(x: np.ndarray, r: int) -> np.ndarray:
    # x^(r-1) |x|: r-1 continuous derivatives, the r-th jumps at 0.
    return x ** (r - 1) * np.abs(x)


def _kink_antiderivative(x: float, r: int) -> float:
    return x**r * abs(x) / (r + 1)


def _kink_derivative_sup(j: int, r: int, center: float) -> float:
    rho = max(center, 1.0 - center)
    return math.factorial(r) / math.factorial(r - j) * rho ** (r - j)


def _separable(scale: float, s_factor, t_factor, d1: int, d2: int):
    """Build ``func(s, t) = scale * prod_a s_factor(s_a) * prod_b t_factor(t_b)``.

    The factors are formed in the (small) shapes of ``s`` and ``t`` and
    multiplied once, so a grid evaluation costs one full-size pass.
    """
    def func(s, t):
        fs = scale
        for a in range(d1):
            fs = fs * s_factor(s[..., a])
        ft = 1.0
        for b in range(d2):
            ft = ft * t_factor(t[..., b])
        out = np.multiply(fs, ft)
        shape = np.broadcast_shapes(s.shape[:-1], t.shape[:-1])
        return out if out.shape == shape else np.broadcast_to(out, shape).copy()

    return func


def _product_norm(sups: list[list[float]], r: int) -> float:
    """max over multi-indices of order <= r of the product of per-axis sups."""
    best = 0.0
    for alpha in itertools.product(range(r + 1), repeat=len(sups)):
        if sum(alpha) <= r:
            best = max(best, math.prod(sups[a][alpha[a]] for a in range(len(sups))))
    return best


def kink_function(r: int, d1: int = 1, d2: int = 1, center: float = 1 / 3) -> SmoothFunction:
    """Product of ``x^(r-1)|x - c|``-type kinks, scaled to unit ``C^r`` norm.

    Its ``r``-th derivatives are bounded but jump, so degree-``r``
    approximation converges no faster than the worst-case ``h^r`` rate.  This
    is the member of the corpus that exhibits the class rates.
    """
    d = d1 + d2
    sups = [[_kink_derivative_sup(j, r, center) for j in range(r + 1)]] * d
    scale = 1.0 / _product_norm(sups, r)
    inner = _kink_antiderivative(1.0 - center, r) - _kink_antiderivative(-center, r)

    func = _separable(scale, lambda x: _kink(x - center, r), lambda x: _kink(x - center, r),
                      d1, d2)

    def solution(s):
        s = np.asarray(s, dtype=float)
        out = np.full(s.shape[:-1], scale * inner**d2)
        for a in range(d1):
            out = out * _kink(s[..., a] - center, r)
        return out

    return SmoothFunction(func, d1, d2, r, 1.0, f"kink(r={r})", solution)


def analytic_function(r: int, d1: int = 1, d2: int = 1) -> SmoothFunction:
    """``prod sin(2 pi s_a + 1) * prod exp(-t_b)``, scaled to unit ``C^r`` norm."""
    scale = (2 * np.pi) ** -r
    inner = 1.0 - math.exp(-1.0)

    func = _separable(scale, lambda x: np.sin(2 * np.pi * x + 1.0), lambda x: np.exp(-x), d1, d2)

    def solution(s):
        s = np.asarray(s, dtype=float)
        out = np.full(s.shape[:-1], scale * inner**d2)
        for a in range(d1):
            out = out * np.sin(2 * np.pi * s[..., a] + 1.0)
        return out

    return SmoothFunction(func, d1, d2, r, 1.0, f"analytic(r={r})", solution)


LACUNARY_TERMS = 24


def _lacunary_parts(r: int, eps: float):
    j = np.arange(LACUNARY_TERMS)
    amp = 2.0 ** (-(r + eps) * j)
    freq = 2 * np.pi * 2.0**j
    phase = 2 * np.pi * ((j * 0.6180339887498949) % 1.0)
    return amp, freq, phase


def _lacunary(x: np.ndarray, r: int, eps: float) -> np.ndarray:
    amp, freq, phase = _lacunary_parts(r, eps)
    x = np.asarray(x, dtype=float)
    return np.cos(x[..., None] * freq + phase) @ amp


def lacunary_function(r: int, d1: int = 1, d2: int = 1, eps: float = 0.1) -> SmoothFunction:
    """``prod rho(s_a) * prod (1 + rho(t_b))`` with a lacunary cosine series ``rho``.

    ``rho(x) = sum_j 2^(-(r+eps) j) cos(2 pi 2^j x + phi_j)`` has bounded
    derivatives up to order ``r`` but oscillates at every scale, so its
    degree-``r`` interpolation residuals are of order ``h^(r+eps)`` at every
    point rather than only near isolated kinks.  Scaled to unit ``C^r`` norm.
    """
    amp, freq, _ = _lacunary_parts(r, eps)
    rho_sups = [float(np.sum(amp * freq**j)) for j in range(r + 1)]
    t_sups = [1.0 + rho_sups[0]] + rho_sups[1:]
    scale = 1.0 / _product_norm([rho_sups] * d1 + [t_sups] * d2, r)

    func = _separable(scale, lambda x: _lacunary(x, r, eps), lambda x: 1.0 + _lacunary(x, r, eps),
                      d1, d2)

    def solution(s):
        # each cosine integrates to zero over [0, 1]
        s = np.asarray(s, dtype=float)
        out = np.full(s.shape[:-1], scale)
        for a in range(d1):
            out = out * _lacunary(s[..., a], r, eps)
        return out

    return SmoothFunction(func, d1, d2, r, 1.0, f"lacunary(r={r})", solution)


def mixed_function(r: int, d1: int = 1, d2: int = 1) -> SmoothFunction:
    """Average of :func:`kink_function` and :func:`analytic_function`."""
    a, b = kink_function(r, d1, d2), analytic_function(r, d1, d2)

    def func(s, t):
        out = a.func(s, t)
        out += b.func(s, t)
        out *= 0.5
        return out

    return SmoothFunction(
        func, d1, d2, r, 1.0,
        f"mixed(r={r})", lambda s: 0.5 * (a.solution(s) + b.solution(s)))


def constant_function(c: float, r: int, d1: int = 1, d2: int = 1) -> SmoothFunction:
    def func(s, t):
        return np.full(np.broadcast_shapes(s.shape[:-1], t.shape[:-1]), float(c))

    def solution(s):
        return np.full(np.asarray(s).shape[:-1], float(c))

    return SmoothFunction(func, d1, d2, r, abs(c), f"const({c})", solution)


def polynomial_function(r: int, d1: int = 1, d2: int = 1) -> SmoothFunction:
    """``prod s_a^r * prod t_b^r``, a polynomial of coordinate degree ``r`` scaled into the unit ball."""
    sups = [[math.factorial(r) / math.factorial(r - j) for j in range(r + 1)]] * (d1 + d2)
    scale = 1.0 / _product_norm(sups, r)

    func = _separable(scale, lambda x: x**r, lambda x: x**r, d1, d2)

    def solution(s):
        s = np.asarray(s, dtype=float)
        out = np.full(s.shape[:-1], scale / (r + 1) ** d2)
        for a in range(d1):
            out = out * s[..., a] ** r
        return out

    return SmoothFunction(func, d1, d2, r, 1.0, f"poly(r={r})", solution)


CORPUS = {
    "kink": kink_function,
    "analytic": analytic_function,
    "mixed": mixed_function,
    "poly": polynomial_function,
    "lacunary": lacunary_function,
}


def corpus_function(name: str, r: int, d1: int, d2: int) -> SmoothFunction:
    try:
        factory = CORPUS[name]
    except KeyError:
        raise ValueError(f"unknown test function {name!r}; known: {sorted(CORPUS)}") from None
    return factory(r, d1, d2)
