import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qparint.detail import (DetailContext, FixedPointCodec, NodeSet, decode, detail_eval,
                            detail_reference, discretize, encode, level_statistics,
                            level_stencil, rectangle_rule, reference_integral)
from qparint.functions import (SmoothFunction, analytic_function, constant_function,
                               kink_function, lacunary_function)
from qparint.grid import MeshSpec, interpolate, mesh_points


def sincos(r=2):
    return SmoothFunction(lambda s, t: np.sin(2 * np.pi * s[..., 0]) * np.cos(2 * np.pi * t[..., 0]),
                          1, 1, r, (2 * np.pi) ** r)


# --- contexts --------------------------------------------------------------------

def test_context_oracle_weights():
    # s = 3/16 at level 3, r = 2: coarse cube [0, 1/4], local coordinate 3/4
    ctx = DetailContext.at(3 / 16, 3, 2)
    np.testing.assert_allclose(ctx.anchors.ravel(), [0.0, 0.125, 0.25])
    np.testing.assert_allclose(ctx.weights, [-0.125, 0.75, 0.375], atol=1e-15)
    assert ctx.cube == (0,)


def test_context_face_tie_picks_smaller_cube():
    # s = 1/4 + 1/16 (r = 1, k = 3): strictly inside [1/4, 1/2]; s = 1/8 (r=1, k=3) in [0, 1/4]
    ctx = DetailContext.at(1 / 8, 3, 1)
    assert ctx.cube == (0,)
    ctx = DetailContext.at([0.5, 1 / 8], 3, 1)
    assert ctx.cube == (1, 0)


@pytest.mark.parametrize("k,r,d1", [(1, 1, 1), (3, 2, 1), (2, 3, 1), (2, 1, 2), (2, 2, 2)])
def test_context_invariants(k, r, d1):
    st_ = level_stencil(k, r, d1)
    pts = mesh_points(MeshSpec(k, r, d1))
    np.testing.assert_allclose(st_.weights.sum(axis=1), 1.0, atol=1e-13)
    side = 2.0 ** -(k - 1)
    for row in range(0, len(st_.new), max(1, len(st_.new) // 7)):
        s = pts[st_.new[row]]
        lo = st_.cubes[row] * side
        assert np.all(s >= lo - 1e-15) and np.all(s <= lo + side + 1e-15)
        offs = pts[st_.anchors[row]] - lo
        expected = np.array(np.unravel_index(np.arange((r + 1) ** d1), (r + 1,) * d1)).T
        np.testing.assert_allclose(offs, expected * side / r, atol=1e-15)


def test_context_rejects_coarse_and_off_mesh():
    with pytest.raises(ValueError):
        DetailContext.at(0.25, 3, 2)
    with pytest.raises(ValueError):
        DetailContext.at(0.3, 3, 2)
    with pytest.raises(ValueError):
        DetailContext.at(0.5, 0, 2)


# --- detail_eval -------------------------------------------------------------------

def test_detail_of_constant_is_zero():
    f = constant_function(1.0, 2)
    ctx = DetailContext.at(3 / 16, 3, 2)
    t = np.linspace(0, 1, 17)[:, None]
    np.testing.assert_allclose(detail_eval(f, ctx, t), 0.0, atol=1e-15)


@pytest.mark.parametrize("r", [1, 2, 3])
def test_detail_of_degree_r_in_s_is_zero(r):
    f = SmoothFunction(lambda s, t: s[..., 0] ** r * np.exp(t[..., 0]), 1, 1, r)
    st_ = level_stencil(3, r, 1)
    pts = mesh_points(MeshSpec(3, r, 1))
    t = np.linspace(0, 1, 9)[:, None]
    for idx in st_.new[::3]:
        ctx = DetailContext.at(pts[idx], 3, r)
        np.testing.assert_allclose(detail_eval(f, ctx, t), 0.0, atol=1e-14)


def test_detail_matches_independent_residual():
    f = sincos()
    s = 1 / 8 + 2**-4
    ctx = DetailContext.at(s, 3, 2)
    t = np.random.default_rng(0).random((20, 1))
    # Lagrange residual on the coarse cube [0, 1/4] with nodes 0, 1/8, 1/4, coded directly
    nodes = np.array([0.0, 0.125, 0.25])
    lag = [np.prod([(s - nodes[q]) / (nodes[p] - nodes[q]) for q in range(3) if q != p])
           for p in range(3)]
    want = np.sin(2 * np.pi * s) * np.cos(2 * np.pi * t[:, 0]) - sum(
        lag[p] * np.sin(2 * np.pi * nodes[p]) * np.cos(2 * np.pi * t[:, 0]) for p in range(3))
    np.testing.assert_allclose(detail_eval(f, ctx, t), want, atol=1e-12)


def test_detail_vanishes_on_coarse_nodes():
    # The level k-1 interpolant reproduces f at level k-1 nodes, so the residual is 0 there.
    f = sincos()
    k, r = 3, 2
    coarse = mesh_points(MeshSpec(k - 1, r, 1))
    t = np.linspace(0, 1, 7)
    for tj in t:
        samples = f(coarse, np.array([tj]))
        resid = f(coarse, np.array([tj])) - interpolate(samples, coarse, k - 1, r)
        np.testing.assert_allclose(resid, 0.0, atol=1e-14)


def test_detail_bounded_uniformly_in_k():
    # sampled |f_{k,s}| 2^{rk} stays below a fixed constant for k = 1..6
    f = kink_function(2)
    t = np.linspace(0, 1, 33)
    rows = []
    for k in range(1, 7):
        st_ = level_stencil(k, 2, 1)
        pts = mesh_points(MeshSpec(k, 2, 1))
        G = f(pts[:, None, :], t[None, :, None])
        gam = G[st_.new] - np.einsum("nv,nvt->nt", st_.weights, G[st_.anchors])
        rows.append(np.abs(gam).max() * 2.0 ** (2 * k))
    assert max(rows) < 1.0
    assert max(rows) / min(rows) < 4


# --- codec ---------------------------------------------------------------------------

def test_encode_examples():
    c = FixedPointCodec(8)
    assert int(encode(c, 0.0)) == 128
    assert int(encode(c, -10.0)) == 0
    assert int(encode(c, 10.0)) == 255


def test_decode_examples():
    c = FixedPointCodec(8)
    assert float(decode(c, 128)) == 0.0
    assert float(decode(c, 0)) == -8.0
    with pytest.raises(ValueError):
        decode(c, 256)
    with pytest.raises(ValueError):
        decode(c, -1)


@pytest.mark.parametrize("m_star", [2, 8, 20, 40, 64])
def test_codec_roundtrip_residual(m_star):
    c = FixedPointCodec(m_star)
    z = np.random.default_rng(m_star).uniform(-1, 1, 10**5)
    resid = z - decode(c, encode(c, z))
    assert np.all(resid >= 0) and np.all(resid < 2.0 ** -(m_star // 2))
    np.testing.assert_array_equal(c.quantize(z), decode(c, encode(c, z)))


def test_codec_for_level_rejects_beyond_64_bits():
    with pytest.raises(ValueError):
        FixedPointCodec.for_level(4, 8, 2)


def test_codec_rejects_bad_width():
    for m in (0, 3, 66):
        with pytest.raises(ValueError):
            FixedPointCodec(m)


@given(st.lists(st.floats(-20, 20), min_size=2, max_size=50))
def test_encode_monotone(zs):
    c = FixedPointCodec(10)
    z = np.sort(np.array(zs))
    assert np.all(np.diff(encode(c, z).astype(np.int64)) >= 0)


def test_decode_strictly_increasing():
    c = FixedPointCodec(12)
    y = np.arange(2**12, dtype=np.uint64)
    assert np.all(np.diff(decode(c, y)) > 0)


@given(st.integers(1, 4), st.integers(0, 5), st.integers(1, 2**10))
def test_codec_for_level_meets_precision(r, k, n2):
    c = FixedPointCodec.for_level(r, k, n2)
    assert c.m_star % 2 == 0
    assert 2 ** (c.half - 1) >= 1
    assert 2.0 ** -c.half <= 2.0 ** (-r * k) / n2
    smaller = c.m_star - 2
    assert smaller < 2 or 2.0 ** -(smaller // 2) > 2.0 ** (-r * k) / n2


# --- node sets and rectangle rule ------------------------------------------------------

def test_nodeset_size_and_points():
    ns = NodeSet.for_level(2, 1, 4, 2)
    assert ns.b == 16 and ns.size == 2 ** (2 * 1 * 2) * 4**2
    pts = ns.points()
    assert pts[0].tolist() == [0, 0] and pts[1].tolist() == [0, 1 / 16]


@pytest.mark.parametrize("b,d2", [(2**16, 1), (2**8, 2), (2**4, 4), (40, 3)])
def test_nodeset_digits_bijection(b, d2):
    ns = NodeSet(b, d2)
    j = np.arange(ns.size)
    dig = ns.digits(j)
    assert dig.min() >= 0 and dig.max() < b
    np.testing.assert_array_equal(ns.flat(dig), j)


def test_rectangle_rule_examples():
    assert rectangle_rule(np.full(7, 2.5)) == 2.5
    t = NodeSet(4, 1).points()[:, 0]
    assert rectangle_rule(t) == 0.375
    with pytest.raises(ValueError):
        rectangle_rule([])


def test_rectangle_rule_accuracy_against_reference():
    # |J - U| <= c 2^{-rk} / n2 for unit-ball f
    f = lacunary_function(2)
    r = 2
    for k, n2 in [(2, 2), (3, 4), (4, 8)]:
        st_ = level_stencil(k, r, 1)
        pts = mesh_points(MeshSpec(k, r, 1))
        ns = NodeSet.for_level(r, k, n2, 1)
        worst = 0.0
        for idx in st_.new:
            ctx = DetailContext.at(pts[idx], k, r)
            J = rectangle_rule(detail_eval(f, ctx, ns.points()))
            worst = max(worst, abs(J - detail_reference(f, ctx)))
        assert worst <= 1.0 * 2.0 ** (-r * k) / n2


# --- discretize --------------------------------------------------------------------------

def _setup(k=3, r=2, n2=4):
    ctx = DetailContext.at(3 / 16, k, r)
    return ctx, NodeSet.for_level(r, k, n2, 1), FixedPointCodec.for_level(r, k, n2)


def test_discretize_zero():
    ctx, ns, codec = _setup()
    assert np.all(discretize(constant_function(0.0, 2), ctx, ns, codec) == 0.0)


def test_discretize_one():
    ctx, ns, codec = _setup()
    out = discretize(constant_function(1.0, 2), ctx, ns, codec)
    assert np.max(np.abs(out)) <= codec.resolution * (1 + np.abs(ctx.weights).sum())


def test_discretize_elementwise_bound():
    ctx, ns, codec = _setup()
    f = analytic_function(2)
    gam = discretize(f, ctx, ns, codec)
    exact = detail_eval(f, ctx, ns.points())
    assert len(gam) == ns.size
    assert np.max(np.abs(gam - exact)) <= codec.resolution * (1 + np.abs(ctx.weights).sum())


def test_discretize_rejects_codec_mismatch():
    ctx, ns, _ = _setup()
    with pytest.raises(ValueError):
        discretize(analytic_function(2), ctx, ns, FixedPointCodec(4))


def test_discretized_mean_close_to_rectangle_rule():
    k, r, n2 = 3, 2, 4
    ctx, ns, codec = _setup(k, r, n2)
    f = kink_function(2)
    gam = discretize(f, ctx, ns, codec)
    J = rectangle_rule(detail_eval(f, ctx, ns.points()))
    assert abs(gam.mean() - J) <= 2.0 * 2.0 ** (-r * k) / n2


@pytest.mark.parametrize("k,r,d1,d2,n2", [(2, 2, 1, 1, 4), (3, 1, 2, 1, 2), (1, 2, 2, 2, 1)])
def test_level_statistics_equals_discretize(k, r, d1, d2, n2):
    f = kink_function(r, d1, d2)
    st_ = level_stencil(k, r, d1)
    ns = NodeSet.for_level(r, k, n2, d2)
    codec = FixedPointCodec.for_level(r, k, n2)
    stats = level_statistics(f, st_, ns, codec)
    pts = mesh_points(MeshSpec(k, r, d1))
    for row in range(0, len(st_.new), max(1, len(st_.new) // 5)):
        gam = discretize(f, DetailContext.at(pts[st_.new[row]], k, r), ns, codec)
        assert stats.mean[row] == pytest.approx(gam.mean(), abs=1e-15)
        assert stats.sup[row] == pytest.approx(np.abs(gam).max(), abs=1e-15)


# --- reference integral --------------------------------------------------------------------

def test_reference_examples():
    one = constant_function(1.0, 2)
    assert reference_integral(one, np.array([0.3])) == pytest.approx(1.0, abs=1e-14)
    sin_t = SmoothFunction(lambda s, t: np.sin(2 * np.pi * t[..., 0]) + 0 * s[..., 0], 1, 1, 2)
    assert abs(reference_integral(sin_t, np.array([0.2]))) < 1e-10
    st_ = SmoothFunction(lambda s, t: s[..., 0] * t[..., 0], 1, 1, 2)
    assert reference_integral(st_, np.array([0.5])) == pytest.approx(0.25, abs=1e-10)


def test_reference_matches_closed_forms():
    for f in (kink_function(2), lacunary_function(2), analytic_function(3, 1, 2)):
        s = np.random.default_rng(0).random((20, f.d1))
        np.testing.assert_allclose(reference_integral(f, s), f.solution(s), atol=1e-10)


def test_reference_resolution_is_16x_finer_than_nodesets_in_use():
    # 48 panels x 12 points; the finest rectangle grid in the acceptance sweeps per
    # panel is irrelevant, but the node count per axis must exceed 16x the coarse ones
    from qparint.detail import REFERENCE_ORDER, REFERENCE_PANELS
    assert REFERENCE_ORDER * REFERENCE_PANELS >= 16 * 32
