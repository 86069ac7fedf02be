"""Disjointly supported bump functions used as an adversarial test corpus.

The unit cube ``[0,1]^d`` (``d = d1 + d2``) is cut into ``L = m^d`` cells of
side ``1/m``, numbered lexicographically.  Cell ``i`` carries the bump

    psi_i(s, t) = prod_a eta(m s_a - j_a) * prod_b eta(m t_b - j_b),
    eta(x) = exp(-1 / (x (1 - x)))  on (0, 1), 0 elsewhere,

normalized to ``psi_i / (norm_gamma m^r)`` so that it lies in the unit ball
of ``C^r``.  For a bit vector ``u`` the instance ``f_u`` is the sum of the
normalized bumps with ``u_i = 1``; its parametric integral is known in closed
form, which makes the family a convenient oracle.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

import numpy as np
from numpy.polynomial import Polynomial
from scipy import integrate, optimize

from .functions import SmoothFunction

FD_STEP = 2.0**-12


# ---------------------------------------------------------------------------
# The one-dimensional bump


def eta(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape)
    inside = (x > 0.0) & (x < 1.0)
    xi = x[inside]
    out[inside] = np.exp(-1.0 / (xi * (1.0 - xi)))
    return out


@lru_cache(maxsize=None)
def _eta_numerators(order: int) -> tuple[Polynomial, ...]:
    """Polynomials ``p_k`` with ``eta^(k) = p_k / q^(2k) * eta`` and ``q = x (1 - x)``."""
    q = Polynomial([0.0, 1.0, -1.0])
    dq = q.deriv()
    p = [Polynomial([1.0])]
    for k in range(order):
        pk = p[-1]
        p.append(pk.deriv() * q**2 - 2 * k * pk * q * dq + pk * dq)
    return tuple(p)


def eta_derivative(x, k: int) -> np.ndarray:
    """``k``-th derivative of :func:`eta` (exact, via the polynomial recursion)."""
    x = np.asarray(x, dtype=float)
    if k == 0:
        return eta(x)
    pk = _eta_numerators(k)[k]
    out = np.zeros(x.shape)
    inside = (x > 0.0) & (x < 1.0)
    xi = x[inside]
    q = xi * (1.0 - xi)
    out[inside] = pk(xi) / q ** (2 * k) * np.exp(-1.0 / q)
    return out


@lru_cache(maxsize=None)
def eta_derivative_sup(k: int) -> float:
    """``sup |eta^(k)|`` on ``[0, 1]``: dense scan, then a bounded local refinement."""
    x = np.linspace(0.0, 1.0, 2**16 + 1)
    vals = np.abs(eta_derivative(x, k))
    i = int(np.argmax(vals))
    lo, hi = x[max(i - 1, 0)], x[min(i + 1, len(x) - 1)]
    res = optimize.minimize_scalar(lambda z: -abs(float(eta_derivative(z, k))),
                                   bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-13})
    return max(float(vals[i]), -float(res.fun))


@lru_cache(maxsize=None)
def sigma0() -> float:
    """``int_0^1 eta(x) dx`` by adaptive quadrature."""
    val, _ = integrate.quad(lambda x: float(eta(x)), 0.0, 1.0, epsabs=1e-15, epsrel=1e-14,
                            limit=200)
    return val


def norm_gamma(r: int, d: int) -> float:
    """Max over multi-indices ``|k| <= r`` in ``d`` variables of ``prod_l sup |eta^(k_l)|``."""
    sups = [eta_derivative_sup(j) for j in range(r + 1)]
    best = 0.0
    for alpha in itertools.product(range(r + 1), repeat=d):
        if sum(alpha) <= r:
            best = max(best, math.prod(sups[a] for a in alpha))
    return best


# ---------------------------------------------------------------------------
# The family


@dataclass(frozen=True)
class BumpFamily:
    """Cells, normalization and constants of the bump family."""

    m: int
    d1: int
    d2: int
    r: int

    def __post_init__(self):
        if self.m < 2 or self.m % 2:
            raise ValueError(f"m must be even and >= 2, got {self.m}")
        if min(self.d1, self.d2, self.r) < 1:
            raise ValueError("d1, d2 and r must be positive")

    @property
    def d(self) -> int:
        return self.d1 + self.d2

    @property
    def L(self) -> int:
        return self.m**self.d

    @property
    def norm_gamma(self) -> float:
        return norm_gamma(self.r, self.d)

    @property
    def sigma0(self) -> float:
        return sigma0()

    @property
    def normalization(self) -> float:
        """Divisor ``norm_gamma m^r`` turning ``psi_i`` into a unit-ball member."""
        return self.norm_gamma * self.m**self.r

    def cell_digits(self, i: int) -> tuple[int, ...]:
        if not 0 <= i < self.L:
            raise IndexError(f"cell {i} outside [0, {self.L})")
        return tuple(int(j) for j in np.unravel_index(i, (self.m,) * self.d))

    def cell_of(self, x: np.ndarray) -> np.ndarray:
        """Lexicographic index of the cell containing each point (shape ``(..., d)``)."""
        j = np.clip(np.floor(np.asarray(x) * self.m).astype(np.int64), 0, self.m - 1)
        return np.ravel_multi_index(tuple(np.moveaxis(j, -1, 0)), (self.m,) * self.d)

    def solution_constant(self) -> float:
        """``sigma0^d2 / (norm_gamma m^(r + d2))``: integral of a normalized bump over ``t``."""
        return self.sigma0**self.d2 / (self.norm_gamma * self.m ** (self.r + self.d2))

    def separation(self) -> float:
        """``||S psi_hat_0||`` in closed form: ``e^(-4 d1) sigma0^d2 / (norm_gamma m^(r+d2))``."""
        return math.exp(-4 * self.d1) * self.solution_constant()


def bump_function(family: BumpFamily, i: int, x) -> np.ndarray:
    """Unnormalized bump ``psi_i`` at points ``x`` of shape ``(..., d)``."""
    x = np.asarray(x, dtype=float)
    j = family.cell_digits(i)
    out = np.ones(x.shape[:-1])
    for a in range(family.d):
        out = out * eta(family.m * x[..., a] - j[a])
    return out


def _bits(u, L: int) -> np.ndarray:
    u = np.asarray(u, dtype=np.int64).ravel()
    if u.size != L or np.any((u != 0) & (u != 1)):
        raise ValueError(f"u must be a 0/1 vector of length {L}")
    return u


def fooling_instance(family: BumpFamily, u) -> SmoothFunction:
    """``f_u = sum_i u_i psi_i / (norm_gamma m^r)`` with its closed-form parametric integral."""
    bits = _bits(u, family.L)
    m, d1, d2 = family.m, family.d1, family.d2
    norm = family.normalization
    const = family.solution_constant()
    # t-summed weights per parameter cell: sum over t-cells of u_i
    weight = bits.reshape((m**d1, m**d2)).sum(axis=1).astype(float)

    def func(s, t):
        shape = np.broadcast_shapes(s.shape[:-1], t.shape[:-1])
        x = np.concatenate([np.broadcast_to(s, shape + (d1,)),
                            np.broadcast_to(t, shape + (d2,))], axis=-1)
        j = np.clip(np.floor(x * m).astype(np.int64), 0, m - 1)
        val = np.ones(shape)
        for a in range(d1 + d2):
            val = val * eta(m * x[..., a] - j[..., a])
        cell = np.ravel_multi_index(tuple(np.moveaxis(j, -1, 0)), (m,) * (d1 + d2))
        return bits[cell] * val / norm

    def solution(s):
        s = np.asarray(s, dtype=float)
        j = np.clip(np.floor(s * m).astype(np.int64), 0, m - 1)
        val = np.ones(s.shape[:-1])
        for a in range(d1):
            val = val * eta(m * s[..., a] - j[..., a])
        cell = np.ravel_multi_index(tuple(np.moveaxis(j, -1, 0)), (m,) * d1)
        return const * weight[cell] * val

    return SmoothFunction(func, d1, d2, family.r, 1.0, f"fooling(m={m}, |u|={int(bits.sum())})",
                          solution)


# ---------------------------------------------------------------------------
# Derivative proxy


def _central_stencil(k: int) -> tuple[np.ndarray, np.ndarray]:
    """Offsets (in steps) and coefficients of the ``k``-th central difference."""
    j = np.arange(k + 1)
    coef = (-1.0) ** j * np.array([math.comb(k, int(i)) for i in j])
    return k / 2 - j, coef


def derivative_proxy(g, x: np.ndarray, alpha: tuple[int, ...], h: float = FD_STEP) -> np.ndarray:
    """Central finite-difference estimate of ``D^alpha g`` at points ``x`` (shape ``(P, d)``)."""
    x = np.asarray(x, dtype=float)
    axes = [_central_stencil(k) for k in alpha]
    out = np.zeros(len(x))
    for combo in itertools.product(*[range(len(off)) for off, _ in axes]):
        shift = np.array([axes[a][0][c] for a, c in enumerate(combo)]) * h
        w = math.prod(axes[a][1][c] for a, c in enumerate(combo))
        out += w * g(x + shift)
    return out / h ** sum(alpha)


def cell_norm_proxy(family: BumpFamily, i: int, per_axis: int = 17,
                    h: float = FD_STEP) -> float:
    """Sampled ``C^r`` norm of the normalized bump of cell ``i``.

    Derivatives of all orders up to ``r`` are estimated by central
    differences on a ``per_axis^d`` grid in the interior of the cell.
    """
    j = np.array(family.cell_digits(i))
    g1 = (np.arange(per_axis) + 0.5) / per_axis
    grids = np.meshgrid(*([g1] * family.d), indexing="ij")
    local = np.stack([g.ravel() for g in grids], axis=-1)
    x = (j + local) / family.m
    g = lambda y: bump_function(family, i, y) / family.normalization
    best = 0.0
    for alpha in itertools.product(range(family.r + 1), repeat=family.d):
        if sum(alpha) <= family.r:
            best = max(best, float(np.max(np.abs(derivative_proxy(g, x, alpha, h)))))
    return best


def instance_norm_proxy(family: BumpFamily, u, per_axis: int = 17) -> float:
    """Sampled ``C^r`` norm of ``f_u``: the largest per-cell value over the active cells.

    The bumps have disjoint supports (each vanishes to all orders at its cell
    boundary), so the norm of the sum is the maximum over its terms.
    """
    bits = _bits(u, family.L)
    vals = [cell_norm_proxy(family, i, per_axis) for i in np.flatnonzero(bits)]
    return max(vals, default=0.0)


# ---------------------------------------------------------------------------
# Separation quantity and corpus manifest


def rho(L: int, l: int, lp: int) -> float:
    """``sqrt(L / |l - l'|) + min_{j in {l, l'}} sqrt(j (L - j)) / |l - l'|``."""
    if not (0 <= l <= L and 0 <= lp <= L) or l == lp:
        raise ValueError(f"need 0 <= l != l' <= L, got L={L}, l={l}, l'={lp}")
    delta = abs(l - lp)
    return math.sqrt(L / delta) + min(math.sqrt(j * (L - j)) for j in (l, lp)) / delta


def u_to_hex(u) -> str:
    """Bit vector as hex: bit ``i`` of the integer is ``u_i``."""
    bits = np.asarray(u, dtype=np.int64).ravel()
    value = sum(int(b) << i for i, b in enumerate(bits))
    return format(value, f"0{max(1, (len(bits) + 3) // 4)}x")


def hex_to_u(text: str, L: int) -> np.ndarray:
    value = int(text, 16)
    if value >> L:
        raise ValueError(f"hex string {text!r} has bits beyond length {L}")
    return np.array([(value >> i) & 1 for i in range(L)], dtype=np.int64)


def corpus_manifest(family: BumpFamily, count: int, seed: int) -> list[dict]:
    """``count`` instance descriptors: the two adversarial weights ``L/2 - 1`` and ``L/2``
    alternate, with supports drawn from ``seed``."""
    rng = np.random.default_rng(seed)
    out = []
    for c in range(count):
        weight = family.L // 2 - 1 + (c % 2)
        u = np.zeros(family.L, dtype=np.int64)
        u[rng.choice(family.L, size=weight, replace=False)] = 1
        out.append({"m": family.m, "d1": family.d1, "d2": family.d2, "r": family.r,
                    "u": u_to_hex(u)})
    return out


def write_manifest(entries: Iterable[dict], path) -> None:
    """One JSON object per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for e in entries:
            fh.write(json.dumps(e, sort_keys=True) + "\n")


def read_manifest(path) -> list[tuple[BumpFamily, np.ndarray]]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                e = json.loads(line)
                fam = BumpFamily(int(e["m"]), int(e["d1"]), int(e["d2"]), int(e["r"]))
                out.append((fam, hex_to_u(e["u"], fam.L)))
    return out
