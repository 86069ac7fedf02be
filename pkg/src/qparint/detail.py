"""Detail functions, the fixed-point codec and their discretization.

For a level ``k >= 1`` and a node ``s`` of the level-``k`` mesh that is not a
node of level ``k-1``, the detail function is the interpolation residual in
the parameter,

    f_{k,s}(t) = f(s, t) - sum_i w_i f(s_i, t),

with ``s_i`` the nodes of the coarse cube containing ``s`` and ``w_i`` the
coarse Lagrange weights at ``s``.  The quantum estimator only ever sees a
quantized version of it sampled on a rectangle-rule grid in ``D2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import sparse

from .functions import SmoothFunction
from .grid import MeshSpec, _lagrange_1d, mesh_indices, mesh_points

# Largest chunk (in array elements) materialized while streaming over nodes.
CHUNK_ELEMENTS = 2**22


# ---------------------------------------------------------------------------
# Detail contexts

@dataclass(frozen=True, eq=False)
class DetailContext:
    """Everything needed to evaluate the detail function at one fine node."""

    k: int
    r: int
    s: np.ndarray          # (d1,)
    cube: tuple            # coarse cube coordinates at level k-1
    anchors: np.ndarray    # (v, d1) coarse interpolation nodes
    weights: np.ndarray    # (v,)

    @property
    def d1(self) -> int:
        return len(self.s)

    @property
    def v(self) -> int:
        return len(self.weights)

    @classmethod
    def at(cls, s, k: int, r: int) -> "DetailContext":
        """Context for the fine node ``s`` (must be in level k minus level k-1)."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        if k < 1:
            raise ValueError("detail functions exist for k >= 1 only")
        idx = np.rint(s * r * 2**k).astype(np.int64)
        if not np.allclose(idx / (r * 2**k), s, rtol=0, atol=1e-12):
            raise ValueError(f"{s} is not a node of the level-{k} mesh")
        if np.all(idx % 2 == 0):
            raise ValueError(f"{s} is already a node of level {k - 1}")
        st = level_stencil(k, r, len(s))
        flat = int(np.ravel_multi_index(tuple(idx), MeshSpec(k, r, len(s)).shape))
        row = int(np.searchsorted(st.new, flat))
        pts = mesh_points(MeshSpec(k, r, len(s)))
        return cls(k, r, idx / (r * 2**k), tuple(int(c) for c in st.cubes[row]),
                   pts[st.anchors[row]], st.weights[row].copy())


@dataclass(frozen=True, eq=False)
class LevelStencil:
    """Vectorized detail contexts for every new node of one level.

    ``new`` and ``anchors`` are flat indices into the level-``k`` mesh.
    """

    k: int
    r: int
    d1: int
    new: np.ndarray       # (n_new,)
    anchors: np.ndarray   # (n_new, v)
    weights: np.ndarray   # (n_new, v)
    cubes: np.ndarray     # (n_new, d1)


@lru_cache(maxsize=64)
def level_stencil(k: int, r: int, d1: int) -> LevelStencil:
    """Detail stencils for all nodes of level ``k`` that are new at that level.

    For ``k = 0`` every node is "new" and has no anchors, which is the
    start-level discretization (a single point, no subtraction).
    """
    spec = MeshSpec(k, r, d1)
    idx = mesh_indices(spec)
    if k == 0:
        n = spec.size
        return LevelStencil(0, r, d1, np.arange(n), np.zeros((n, 0), np.int64),
                            np.zeros((n, 0)), np.zeros((n, d1), np.int64))
    new_mask = ~np.all(idx % 2 == 0, axis=1)
    new = np.flatnonzero(new_mask)
    fine = idx[new]
    # Coarse cube of side 2r fine spacings; ties go to the smaller index.
    cubes = np.clip((fine - 1) // (2 * r), 0, 2 ** (k - 1) - 1)
    local = (fine - 2 * r * cubes) / (2 * r)
    per_axis = [_lagrange_1d(local[:, a], r) for a in range(d1)]
    v = (r + 1) ** d1
    digits = np.array(np.unravel_index(np.arange(v), (r + 1,) * d1)).T  # (v, d1)
    weights = np.ones((len(new), v))
    for a in range(d1):
        weights *= per_axis[a][:, digits[:, a]]
    anchor_idx = 2 * r * cubes[:, None, :] + 2 * digits[None, :, :]
    anchors = np.ravel_multi_index(tuple(np.moveaxis(anchor_idx, -1, 0)), spec.shape)
    for arr in (new, anchors, weights, cubes):
        arr.setflags(write=False)
    return LevelStencil(k, r, d1, new, anchors, weights, cubes)


def detail_eval(f: SmoothFunction, ctx: DetailContext, t) -> np.ndarray:
    """``f(s, t) - sum_i w_i f(s_i, t)`` at points ``t`` of shape ``(..., d2)``."""
    t = np.asarray(t, dtype=float)
    out = f(ctx.s, t)
    for w, si in zip(ctx.weights, ctx.anchors):
        out = out - w * f(si, t)
    return out


# ---------------------------------------------------------------------------
# Fixed-point codec

@dataclass(frozen=True)
class FixedPointCodec:
    """Fixed-point encoding of reals into ``m*``-bit integers.

    With ``h = m*/2`` the representable range is ``[-2^(h-1), 2^(h-1))`` at
    resolution ``2^-h``.  Decoding is the affine map
    ``y -> 2^-h y - 2^(h-1)``, so that ``decode(encode(z)) <= z`` with a gap
    below ``2^-h`` inside the range.
    """

    m_star: int

    def __post_init__(self):
        if self.m_star < 2 or self.m_star % 2 or self.m_star > 64:
            raise ValueError(f"m* must be even and in [2, 64], got {self.m_star}")

    @property
    def half(self) -> int:
        return self.m_star // 2

    @property
    def resolution(self) -> float:
        return 2.0**-self.half

    @classmethod
    def for_level(cls, r: int, k: int, n2: int) -> "FixedPointCodec":
        """Smallest even ``m*`` with ``2^(m*/2 - 1) >= 1`` and ``2^(-m*/2) <= 2^(-rk) / n2``."""
        if n2 < 1:
            raise ValueError("n2 must be positive")
        return cls(2 * max(1, r * k + (n2 - 1).bit_length()))

    def serves(self, b: int) -> bool:
        """Whether the resolution suffices for a rectangle grid with ``b`` nodes per axis."""
        return 2**self.half >= b

    def encode(self, z) -> np.ndarray:
        h = self.half
        z = np.asarray(z, dtype=float)
        bound = 2.0 ** (2 * h - 1)
        # z * 2^h is exact (power-of-two scaling), so is the floor; the clip
        # realizes both saturation branches.
        q = np.clip(np.floor(z * 2.0**h), -bound, bound - 1)
        with np.errstate(over="ignore"):   # two's-complement shift, wraps by design
            return np.atleast_1d(q).astype(np.int64).view(np.uint64).reshape(q.shape) \
                + np.uint64(2 ** (2 * h - 1))

    def decode(self, y) -> np.ndarray:
        h = self.half
        y = np.asarray(y)
        if np.any(y.astype(np.float64) < 0) or np.any(y.astype(np.float64) >= 2.0**self.m_star):
            raise ValueError("code word outside [0, 2^m*)")
        with np.errstate(over="ignore"):
            centered = np.atleast_1d(y.astype(np.uint64) - np.uint64(2 ** (2 * h - 1)))
        return centered.view(np.int64).reshape(y.shape).astype(np.float64) * 2.0**-h

    def quantize(self, z, out: np.ndarray | None = None) -> np.ndarray:
        """``decode(encode(z))`` without going through integers.

        ``out`` may be ``z`` itself (a float array) for in-place operation.
        """
        h = self.half
        bound = 2.0 ** (2 * h - 1)
        out = np.multiply(np.asarray(z, dtype=float), 2.0**h, out=out)
        np.floor(out, out=out)
        np.clip(out, -bound, bound - 1, out=out)
        out *= 2.0**-h
        return out


def encode(codec: FixedPointCodec, z) -> np.ndarray:
    return codec.encode(z)


def decode(codec: FixedPointCodec, y) -> np.ndarray:
    return codec.decode(y)


# ---------------------------------------------------------------------------
# Rectangle-rule nodes

@dataclass(frozen=True)
class NodeSet:
    """Left-endpoint rectangle nodes ``j / b`` per axis on ``[0,1]^d2``."""

    b: int
    d2: int

    def __post_init__(self):
        if self.b < 1 or self.d2 < 1:
            raise ValueError(f"invalid node set {self}")

    @classmethod
    def for_level(cls, r: int, k: int, n2: int, d2: int) -> "NodeSet":
        return cls(2 ** (r * k) * n2, d2)

    @property
    def size(self) -> int:
        return self.b**self.d2

    def digits(self, j) -> np.ndarray:
        """Base-``b`` digits of flat indices, most significant first, shape ``(..., d2)``."""
        j = np.asarray(j, dtype=np.int64)
        out = []
        for _ in range(self.d2):
            j, rem = np.divmod(j, self.b)
            out.append(rem)
        return np.stack(out[::-1], axis=-1)

    def flat(self, digits) -> np.ndarray:
        digits = np.asarray(digits, dtype=np.int64)
        j = np.zeros(digits.shape[:-1], dtype=np.int64)
        for a in range(self.d2):
            j = j * self.b + digits[..., a]
        return j

    def points(self, start: int = 0, stop: int | None = None) -> np.ndarray:
        stop = self.size if stop is None else stop
        return self.digits(np.arange(start, stop)) / self.b


def rectangle_rule(values) -> float:
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("rectangle rule needs at least one value")
    return float(np.mean(values))


# ---------------------------------------------------------------------------
# Discretization

def discretize(f: SmoothFunction, ctx: DetailContext, nodes: NodeSet,
               codec: FixedPointCodec) -> np.ndarray:
    """Quantized detail values at every rectangle node: an array of length ``N``."""
    if not codec.serves(nodes.b):
        raise ValueError(f"codec with m*={codec.m_star} too coarse for {nodes.b} nodes per axis")
    t = nodes.points()
    out = codec.quantize(f(ctx.s, t))
    for w, si in zip(ctx.weights, ctx.anchors):
        out = out - w * codec.quantize(f(si, t))
    return out


@dataclass(frozen=True)
class LevelStatistics:
    """Per-node mean and sup-norm of the discretized detail arrays of one level."""

    mean: np.ndarray
    sup: np.ndarray


def level_statistics(f: SmoothFunction, stencil: LevelStencil, nodes: NodeSet,
                     codec: FixedPointCodec | None) -> LevelStatistics:
    """Stream over the rectangle nodes and summarize the discretized details of a level.

    Equivalent to calling :func:`discretize` for every new node of the level,
    but evaluates ``f`` once per (mesh node, rectangle node) pair.  ``codec``
    may be ``None`` to skip quantization.
    """
    spec = MeshSpec(stencil.k, stencil.r, stencil.d1)
    S = mesh_points(spec)
    used = np.unique(np.concatenate([stencil.new, stencil.anchors.ravel()]))
    pos_in_used = np.full(spec.size, -1, dtype=np.int64)
    pos_in_used[used] = np.arange(len(used))
    new = pos_in_used[stencil.new]
    anchors = pos_in_used[stencil.anchors]
    S = S[used]
    n_new = len(new)
    # Gamma = A @ G with A holding 1 at the node and -w_i at its anchors
    v = anchors.shape[1]
    rows = np.repeat(np.arange(n_new), v + 1)
    cols = np.concatenate([new[:, None], anchors], axis=1).ravel()
    vals = np.concatenate([np.ones((n_new, 1)), -stencil.weights], axis=1).ravel()
    A = sparse.csr_matrix((vals, (rows, cols)), shape=(n_new, len(S)))
    chunk = max(1, CHUNK_ELEMENTS // max(len(S), 1))
    acc = np.zeros(n_new)
    sup = np.zeros(n_new)
    for start in range(0, nodes.size, chunk):
        stop = min(start + chunk, nodes.size)
        T = nodes.points(start, stop)
        G = f(S[:, None, :], T[None, :, :])
        if codec is not None:
            if not G.flags.writeable:
                G = G.copy()
            G = codec.quantize(G, out=G)
        gam = A @ G
        acc += gam.sum(axis=1)
        np.maximum(sup, gam.max(axis=1), out=sup)
        np.maximum(sup, -gam.min(axis=1), out=sup)
    N = nodes.size
    return LevelStatistics(acc / N, sup)


# ---------------------------------------------------------------------------
# Reference quadrature

@lru_cache(maxsize=16)
def _gauss_rule(panels: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    x = (x + 1) / 2
    w = w / 2
    left = np.arange(panels) / panels
    nodes = (left[:, None] + x[None, :] / panels).ravel()
    weights = np.tile(w / panels, panels)
    return nodes, weights


REFERENCE_PANELS = 48
REFERENCE_ORDER = 12


def reference_integral(f: SmoothFunction, s, panels: int = REFERENCE_PANELS,
                       order: int = REFERENCE_ORDER) -> np.ndarray:
    """High-accuracy ``int_{D2} f(s, t) dt`` by composite Gauss-Legendre quadrature.

    Each axis of ``D2`` is split into ``panels`` equal panels with an
    ``order``-point rule on each; the default (48 panels of 12 points) uses
    576 nodes per axis.  ``s`` has shape ``(P, d1)`` or ``(d1,)``.
    """
    s = np.asarray(s, dtype=float)
    single = s.ndim == 1
    s = np.atleast_2d(s)
    x, w = _gauss_rule(panels, order)
    d2 = f.d2
    if len(x) ** d2 > 2**24:
        raise MemoryError(f"reference rule with {len(x)}^{d2} nodes is too large")
    grids = np.meshgrid(*([x] * d2), indexing="ij")
    T = np.stack([g.ravel() for g in grids], axis=-1)
    W = w
    for _ in range(d2 - 1):
        W = np.outer(W, w).ravel()
    out = np.empty(len(s))
    chunk = max(1, CHUNK_ELEMENTS // len(T))
    for start in range(0, len(s), chunk):
        block = s[start:start + chunk]
        out[start:start + chunk] = f(block[:, None, :], T[None, :, :]) @ W
    return out[0] if single else out


def detail_reference(f: SmoothFunction, ctx: DetailContext, **kw) -> float:
    """Exact (to quadrature accuracy) integral of the detail function."""
    pts = np.vstack([ctx.s[None, :], ctx.anchors])
    vals = reference_integral(f, pts, **kw)
    return float(vals[0] - ctx.weights @ vals[1:])
