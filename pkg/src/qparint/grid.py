"""Dyadic meshes on the parameter cube and composite Lagrange interpolation.

The level-``k`` mesh on ``[0, 1]^d`` has spacing ``1 / (r 2^k)`` and is split
into ``2^(d k)`` cubes of side ``2^-k``; each cube carries ``(r+1)^d`` mesh
nodes, and the composite interpolant is the tensor-product Lagrange
polynomial of degree ``r`` on every cube.

Mesh points are ordered lexicographically by their integer coordinates
``(i_1, ..., i_d)`` with ``i_1`` most significant, which is the C order of an
array of shape ``(r 2^k + 1,) * d``.  Cubes and local basis functions use the
same convention.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable

import numpy as np

# Max mesh size we are willing to materialize in one array.
_MAX_POINTS = 2**31 - 1


@dataclass(frozen=True)
class MeshSpec:
    k: int
    r: int
    d1: int

    def __post_init__(self):
        if self.k < 0 or self.r < 1 or self.d1 < 1:
            raise ValueError(f"invalid mesh spec {self}")
        if self.points_per_axis ** self.d1 > _MAX_POINTS:
            raise OverflowError(f"mesh {self} has too many points")

    @property
    def points_per_axis(self) -> int:
        return self.r * 2**self.k + 1

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.d1

    @property
    def size(self) -> int:
        return self.points_per_axis**self.d1

    @property
    def spacing(self) -> float:
        return 1.0 / (self.r * 2**self.k)


def mesh_points(spec: MeshSpec) -> np.ndarray:
    """All mesh points of level ``spec.k`` as an array of shape ``(size, d1)``.

    Rows are in lexicographic order of the integer coordinates.
    """
    return mesh_indices(spec) * spec.spacing


def mesh_indices(spec: MeshSpec) -> np.ndarray:
    """Integer coordinates of the mesh points, shape ``(size, d1)``."""
    axes = [np.arange(spec.points_per_axis)] * spec.d1
    grid = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grid], axis=-1)


def coarse_node_mask(spec: MeshSpec) -> np.ndarray:
    """Boolean mask (mesh order) of the level-``k`` nodes that also belong to level ``k-1``.

    A node is inherited from the coarser mesh iff all its integer coordinates
    are even.  For ``k = 0`` nothing is inherited.
    """
    if spec.k == 0:
        return np.zeros(spec.size, dtype=bool)
    return np.all(mesh_indices(spec) % 2 == 0, axis=1)


# ---------------------------------------------------------------------------
# Reference-cube Lagrange basis

def _lagrange_1d(x: np.ndarray, r: int) -> np.ndarray:
    """Values of the ``r+1`` degree-``r`` Lagrange polynomials on nodes ``p/r``.

    Returns an array of shape ``x.shape + (r + 1,)``.
    """
    x = np.asarray(x, dtype=float)
    nodes = np.arange(r + 1) / r
    out = np.ones(x.shape + (r + 1,))
    for p in range(r + 1):
        for q in range(r + 1):
            if q != p:
                out[..., p] *= (x - nodes[q]) / (nodes[p] - nodes[q])
    return out


def basis_multi_index(i: int, r: int, d1: int) -> tuple[int, ...]:
    """Digits of ``i`` in base ``r+1``, most significant first."""
    v = (r + 1) ** d1
    if not 0 <= i < v:
        raise IndexError(f"basis index {i} outside [0, {v})")
    digits = []
    for _ in range(d1):
        i, rem = divmod(i, r + 1)
        digits.append(rem)
    return tuple(reversed(digits))


def lagrange_basis_eval(i: int, s, r: int, d1: int) -> np.ndarray:
    """Evaluate the tensor Lagrange basis polynomial ``phi_i`` of the level-0 mesh.

    ``phi_i`` is one at the node ``(i_1, ..., i_d) / r`` and zero at every
    other node of the level-0 mesh.  ``s`` has shape ``(..., d1)``.
    """
    s = np.asarray(s, dtype=float)
    digits = basis_multi_index(i, r, d1)
    val = np.ones(s.shape[:-1])
    for a, p in enumerate(digits):
        val = val * _lagrange_1d(s[..., a], r)[..., p]
    return val


def local_basis_values(x: np.ndarray, r: int) -> np.ndarray:
    """All ``v = (r+1)^d`` basis values at local coordinates ``x`` of shape ``(P, d)``.

    Returns shape ``(P, v)`` with columns in basis index order.
    """
    x = np.atleast_2d(x)
    per_axis = [_lagrange_1d(x[:, a], r) for a in range(x.shape[1])]
    out = per_axis[0]
    for b in per_axis[1:]:
        out = (out[:, :, None] * b[:, None, :]).reshape(len(x), -1)
    return out


# ---------------------------------------------------------------------------
# Cubes and the restriction operator

@dataclass(frozen=True)
class CubeIndex:
    k: int
    j: int
    d1: int

    def __post_init__(self):
        if not 0 <= self.j < 2 ** (self.d1 * self.k):
            raise IndexError(f"cube index {self.j} invalid at level {self.k}")

    @property
    def coords(self) -> tuple[int, ...]:
        return cube_coords(self.j, self.k, self.d1)

    @property
    def anchor(self) -> np.ndarray:
        """Corner of the cube closest to the origin."""
        return np.array(self.coords, dtype=float) * 2.0**-self.k

    @classmethod
    def from_coords(cls, coords, k: int) -> "CubeIndex":
        return cls(k, cube_flat_index(coords, k), len(coords))


def cube_coords(j: int, k: int, d1: int) -> tuple[int, ...]:
    side = 2**k
    out = []
    for _ in range(d1):
        j, rem = divmod(j, side)
        out.append(rem)
    return tuple(reversed(out))


def cube_flat_index(coords, k: int) -> int:
    side = 2**k
    j = 0
    for c in coords:
        if not 0 <= c < side:
            raise IndexError(f"cube coordinate {c} invalid at level {k}")
        j = j * side + int(c)
    return j


def locate_cubes(s: np.ndarray, k: int) -> np.ndarray:
    """Per-axis cube coordinates of points ``s`` (shape ``(P, d)``) at level ``k``.

    Points on a shared face go to the cube with the smallest flat index, i.e.
    the smaller coordinate on every axis where there is a tie.
    """
    side = 2**k
    scaled = np.asarray(s, dtype=float) * side
    return np.clip(np.ceil(scaled).astype(np.int64) - 1, 0, side - 1)


def restrict_scale(g: Callable[[np.ndarray], np.ndarray], cube: CubeIndex) -> Callable[[np.ndarray], np.ndarray]:
    """Return ``s -> g(2^k (s - anchor))`` on the cube and ``0`` elsewhere."""
    lo = cube.anchor
    hi = lo + 2.0**-cube.k

    def restricted(s):
        s = np.asarray(s, dtype=float)
        inside = np.all((s >= lo) & (s <= hi), axis=-1)
        vals = np.asarray(g(2.0**cube.k * (s - lo)), dtype=float)
        return np.where(inside, vals, 0.0)

    return restricted


# ---------------------------------------------------------------------------
# Composite interpolation

def _check_domain(s: np.ndarray) -> None:
    if np.any(s < 0.0) or np.any(s > 1.0) or not np.all(np.isfinite(s)):
        raise ValueError("evaluation point outside the unit cube")


def interpolate(samples: np.ndarray, s, k: int, r: int) -> np.ndarray:
    """Evaluate the composite degree-``r`` interpolant of mesh samples at ``s``.

    Parameters
    ----------
    samples : ndarray
        Values on the level-``k`` mesh, either flat in mesh order or shaped
        ``(r 2^k + 1,) * d1``.  Trailing axes beyond the mesh are allowed when
        the samples are already shaped (vector-valued data).
    s : array_like
        Points of shape ``(P, d1)`` (or ``(d1,)`` for one point).
    """
    s = np.asarray(s, dtype=float)
    single = s.ndim == 1
    s = np.atleast_2d(s)
    d1 = s.shape[1]
    spec = MeshSpec(k, r, d1)
    values = np.asarray(samples, dtype=float)
    if values.ndim == 1:
        if values.size != spec.size:
            raise ValueError(f"expected {spec.size} samples, got {values.size}")
        values = values.reshape(spec.shape)
    elif values.shape[:d1] != spec.shape:
        raise ValueError(f"samples of shape {values.shape} do not match mesh {spec.shape}")
    _check_domain(s)

    cubes = locate_cubes(s, k)
    local = s * 2**k - cubes
    per_axis = [_lagrange_1d(local[:, a], r) for a in range(d1)]
    base = cubes * r
    out = np.zeros((len(s),) + values.shape[d1:])
    for digits in itertools.product(range(r + 1), repeat=d1):
        w = np.ones(len(s))
        for a, p in enumerate(digits):
            w = w * per_axis[a][:, p]
        idx = tuple(base[:, a] + digits[a] for a in range(d1))
        vals = values[idx]
        out += w.reshape(w.shape + (1,) * (vals.ndim - 1)) * vals
    return out[0] if single else out


def probe_grid(k: int, d1: int, per_cube: int = 64) -> np.ndarray:
    """Equispaced probe points, ``per_cube * 2^k + 1`` per axis, mesh order."""
    n = per_cube * 2**k + 1
    axes = [np.linspace(0.0, 1.0, n)] * d1
    grid = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grid], axis=-1)


def interpolant_sup_norm_ratio(samples: np.ndarray, k: int, r: int, d1: int = 1,
                               per_cube: int = 64) -> float:
    """Max of ``|P_k z|`` over the probe grid for samples ``z`` bounded by one.

    The probe grid has ``per_cube * 2^k + 1`` points per axis.
    """
    z = np.asarray(samples, dtype=float)
    if np.any(np.abs(z) > 1.0):
        raise ValueError("samples must lie in [-1, 1]")
    return float(np.max(np.abs(interpolate(z.ravel(), probe_grid(k, d1, per_cube), k, r))))


# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PiecewiseLagrange:
    """Composite degree-``r`` tensor Lagrange interpolant on the level-``k`` mesh.

    ``values`` has shape ``(r 2^k + 1,) * d1`` in mesh order.
    """

    k: int
    r: int
    d1: int
    values: np.ndarray

    def __post_init__(self):
        spec = MeshSpec(self.k, self.r, self.d1)
        vals = np.asarray(self.values, dtype=float)
        if vals.size != spec.size:
            raise ValueError(f"expected {spec.size} coefficients, got {vals.size}")
        vals = vals.reshape(spec.shape).copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def spec(self) -> MeshSpec:
        return MeshSpec(self.k, self.r, self.d1)

    @classmethod
    def from_function(cls, g, k: int, r: int, d1: int) -> "PiecewiseLagrange":
        spec = MeshSpec(k, r, d1)
        return cls(k, r, d1, np.asarray(g(mesh_points(spec)), dtype=float))

    @classmethod
    def zeros(cls, k: int, r: int, d1: int) -> "PiecewiseLagrange":
        return cls(k, r, d1, np.zeros(MeshSpec(k, r, d1).size))

    def __call__(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if self.d1 == 1 and s.ndim <= 1 and s.size != 1:
            s = s.reshape(-1, 1)
        elif self.d1 == 1 and s.ndim == 0:
            s = s.reshape(1)
        return interpolate(self.values, s, self.k, self.r)

    def refine(self, k: int) -> "PiecewiseLagrange":
        """Same function represented on the finer level ``k`` mesh (exact)."""
        if k < self.k:
            raise ValueError("can only refine to a finer level")
        if k == self.k:
            return self
        pts = mesh_points(MeshSpec(k, self.r, self.d1))
        return PiecewiseLagrange(k, self.r, self.d1, self(pts))

    def __add__(self, other: "PiecewiseLagrange") -> "PiecewiseLagrange":
        if (other.r, other.d1) != (self.r, self.d1):
            raise ValueError("incompatible interpolants")
        k = max(self.k, other.k)
        return PiecewiseLagrange(k, self.r, self.d1,
                                 self.refine(k).values + other.refine(k).values)

    def to_record(self) -> dict:
        """Flat record: header ``(k, r, d1)`` plus coefficients in mesh order."""
        return {"k": self.k, "r": self.r, "d1": self.d1,
                "coefficients": self.values.ravel().tolist()}

    @classmethod
    def from_record(cls, rec: dict) -> "PiecewiseLagrange":
        return cls(int(rec["k"]), int(rec["r"]), int(rec["d1"]),
                   np.asarray(rec["coefficients"], dtype=float))


def composite_weights(k: int, r: int, d: int = 1) -> np.ndarray:
    """Weights ``w`` with ``sum w * samples`` equal to the integral of the interpolant.

    These are the composite closed Newton-Cotes weights of degree ``r`` on the
    level-``k`` mesh of ``[0,1]^d``, flat in mesh order.
    """
    x, gw = np.polynomial.legendre.leggauss(r + 1)
    local = _lagrange_1d((x + 1) / 2, r).T @ (gw / 2)   # integrals of the r+1 basis polys
    h = 2.0**-k
    w1 = np.zeros(r * 2**k + 1)
    for c in range(2**k):
        w1[c * r:c * r + r + 1] += h * local
    w = w1
    for _ in range(d - 1):
        w = np.outer(w, w1).ravel()
    return w


def lebesgue_constant(r: int, samples: int = 4097) -> float:
    """Lebesgue constant of degree-``r`` interpolation on equispaced nodes in [0, 1]."""
    x = np.linspace(0.0, 1.0, samples)
    return float(np.max(np.abs(_lagrange_1d(x, r)).sum(axis=1)))
