import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rough_llg.rough import (
    Control,
    TimeGrid,
    chen_pair,
    chen_prefixes,
    chen_reconstruct,
    control_from_pvar,
    delta2,
    delta3,
    outer_cross,
    p_variation,
    p_variation_brute,
    sew,
)


def test_timegrid_basic():
    tg = TimeGrid(2.0, 4)
    assert tg.dt == 0.5
    assert tg.nodes[0] == 0.0 and tg.nodes[-1] == 2.0
    with pytest.raises(ValueError):
        TimeGrid(1.0, 1)


def test_delta2_constant_and_linear():
    assert np.max(np.abs(delta2(np.ones(5)).value(1, 4))) == 0.0
    g = delta2(np.array([0.0, 0.5, 1.0]))
    assert g.value(0, 2) == 1.0
    assert g.value(0, 1) == 0.5


def test_delta2_cocycle():
    rng = np.random.default_rng(0)
    g = delta2(rng.normal(size=(9, 4)))
    assert g.max_increment_defect() <= 1e-12


def test_delta3_identity_der1():
    # delta[(s,t) -> G_{s,t} g_s]_{s,u,t} = -G_{u,t} delta g_{s,u} + delta G_{s,u,t} g_s
    rng = np.random.default_rng(1)
    n = 6
    G = rng.normal(size=(n + 1, n + 1))
    g = rng.normal(size=n + 1)
    val = lambda i, j: G[i, j] * g[i]
    for (s, u, t) in [(0, 1, 2), (0, 3, 5), (1, 2, 6), (2, 4, 5)]:
        lhs = delta3(val, s, u, t)
        rhs = -G[u, t] * (g[u] - g[s]) + delta3(lambda i, j: G[i, j], s, u, t) * g[s]
        assert abs(lhs - rhs) <= 1e-12


def test_delta3_identity_der2():
    # for increments G, H: delta[(s,t) -> G H]_{s,u,t} = G_{s,u} H_{u,t} + G_{u,t} H_{s,u}
    rng = np.random.default_rng(2)
    n = 7
    a = rng.normal(size=n + 1)
    b = rng.normal(size=n + 1)
    G = lambda i, j: a[j] - a[i]
    H = lambda i, j: b[j] - b[i]
    val = lambda i, j: G(i, j) * H(i, j)
    for (s, u, t) in [(0, 1, 2), (0, 2, 7), (1, 4, 6), (3, 5, 7)]:
        lhs = delta3(val, s, u, t)
        rhs = G(s, u) * H(u, t) + G(u, t) * H(s, u)
        assert abs(lhs - rhs) <= 1e-12


def test_chen_reconstruct_two_intervals_matrix_order():
    # composition order pinned: GG_{0,2} = A + B + b a (product of the later
    # increment on the left); the transposed convention fails this value
    rng = np.random.default_rng(3)
    a, b = rng.normal(size=(2, 3, 3))
    A, B = rng.normal(size=(2, 3, 3))
    G, GG = chen_reconstruct(np.array([a, b]), np.array([A, B]), 0, 2)
    assert np.allclose(G, a + b, atol=1e-14)
    assert np.allclose(GG, A + B + b @ a, atol=1e-14)
    assert not np.allclose(GG, A + B + a @ b, atol=1e-10)


def test_chen_reconstruct_single_interval_and_associativity():
    rng = np.random.default_rng(4)
    l1 = rng.normal(size=(4, 3, 3))
    l2 = rng.normal(size=(4, 3, 3))
    G, GG = chen_reconstruct(l1, l2, 2, 3)
    assert np.array_equal(G, l1[2]) and np.array_equal(GG, l2[2])

    # [t0, t4] equals [t0, t2] composed with [t2, t4]
    Ga, GGa = chen_reconstruct(l1, l2, 0, 2)
    Gb, GGb = chen_reconstruct(l1, l2, 2, 4)
    Gfull, GGfull = chen_reconstruct(l1, l2, 0, 4)
    assert np.allclose(Gfull, Ga + Gb, atol=1e-12)
    assert np.allclose(GGfull, GGa + GGb + Gb @ Ga, atol=1e-12)


def test_chen_prefix_pairs_match_reconstruction():
    rng = np.random.default_rng(5)
    l1 = rng.normal(size=(6, 3, 3))
    l2 = rng.normal(size=(6, 3, 3))
    P, Q = chen_prefixes(l1, l2)
    for (i, j) in [(0, 6), (1, 4), (2, 3), (0, 1)]:
        G1, GG1 = chen_pair(P, Q, i, j)
        G2, GG2 = chen_reconstruct(l1, l2, i, j)
        assert np.allclose(G1, G2, atol=1e-12)
        assert np.allclose(GG1, GG2, atol=1e-12)


def test_chen_second_level_defect_is_product():
    rng = np.random.default_rng(6)
    l1 = rng.normal(size=(8, 3, 3))
    l2 = rng.normal(size=(8, 3, 3))
    P, Q = chen_prefixes(l1, l2)
    pair = lambda i, j: chen_pair(P, Q, i, j)
    for (s, u, t) in [(0, 3, 8), (1, 2, 5), (2, 6, 7)]:
        GG = lambda i, j: pair(i, j)[1]
        defect = delta3(GG, s, u, t) - pair(u, t)[0] @ pair(s, u)[0]
        assert np.max(np.abs(defect)) <= 1e-12


def test_outer_cross_convention():
    a = np.array([1.0, 2.0])
    b = np.array([3.0, 5.0])
    assert np.array_equal(outer_cross(a, b), np.array([[3.0, 5.0], [6.0, 10.0]]))


def test_pvar_spec_examples():
    assert p_variation(delta2(np.array([0.0, 1.0, 2.0])), 1.0) == pytest.approx(2.0)
    assert p_variation(delta2(np.array([0.0, 1.0, 0.0])), 2.0) == pytest.approx(np.sqrt(2.0))
    assert p_variation(delta2(np.array([0.0, 1.0, 2.0])), 2.0) == pytest.approx(2.0)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(-5, 5), min_size=2, max_size=12),
    st.sampled_from([1.0, 1.5, 2.0, 2.5, 3.0]),
)
def test_pvar_dp_equals_brute_force(path, p):
    tm = delta2(np.asarray(path))
    assert p_variation(tm, p) == p_variation_brute(tm, p)


def test_pvar_monotone_in_p():
    rng = np.random.default_rng(7)
    tm = delta2(rng.normal(size=14))
    vals = [p_variation(tm, p) for p in (1.0, 1.5, 2.0, 3.0, 4.0)]
    assert all(a >= b - 1e-12 for a, b in zip(vals[:-1], vals[1:]))


def test_pvar_subinterval():
    tm = delta2(np.array([0.0, 1.0, 0.0, 2.0]))
    assert p_variation(tm, 1.0, interval=(0, 2)) == pytest.approx(2.0)
    assert p_variation(tm, 1.0, interval=(2, 3)) == pytest.approx(2.0)


def test_control_from_pvar_properties():
    rng = np.random.default_rng(8)
    tm = delta2(rng.normal(size=11))
    ctrl = control_from_pvar(tm, 2.5)
    assert ctrl(4, 4) == 0.0
    assert ctrl.superadditivity_defect() <= 1e-12


def test_control_sum_is_control():
    rng = np.random.default_rng(9)
    tm = delta2(rng.normal(size=9))
    ctrl = control_from_pvar(tm, 2.0) + control_from_pvar(tm, 3.0)
    assert ctrl.superadditivity_defect() <= 1e-12


def test_sew_increment_germ_exact():
    rng = np.random.default_rng(10)
    path = rng.normal(size=(9, 2))
    tg = TimeGrid(1.0, 8)
    res = sew(lambda i, j: path[j] - path[i], tg)
    assert np.allclose(res.path, path - path[0], atol=1e-14)
    for (i, j) in [(0, 8), (2, 5), (1, 7)]:
        assert np.max(np.abs(res.remainder(i, j))) <= 1e-13


def test_sew_additivity_exact():
    rng = np.random.default_rng(11)
    vals = rng.normal(size=(16, 3))
    tg = TimeGrid(1.0, 16)
    germ = lambda i, j: vals[i] * (j - i)
    res = sew(germ, tg)
    for (s, mid, t) in [(0, 5, 16), (2, 8, 12)]:
        a = res.path[mid] - res.path[s]
        b = res.path[t] - res.path[mid]
        assert np.array_equal(a + b, res.path[t] - res.path[s]) or np.allclose(
            a + b, res.path[t] - res.path[s], atol=1e-15
        )


def test_sew_left_riemann_germ_second_order_windows():
    # germ (t-s) f(s) for smooth f: path approximates int f with left-Riemann
    # error and window remainders of second order in the window length
    tg = TimeGrid(1.0, 256)
    f = lambda t: np.sin(2 * np.pi * t) + 0.3
    germ = lambda i, j: (tg.nodes[j] - tg.nodes[i]) * f(tg.nodes[i])
    res = sew(germ, tg)
    # independent quadrature oracle for int_0^1 f = 0.3
    assert res.path[-1] == pytest.approx(0.3, abs=5e-3)
    scan = dict(res.window_scan(norm=abs))
    # remainder O(L^2): ratio ~ 4 per doubling
    assert scan[32] / scan[8] == pytest.approx(16.0, rel=0.35)


def test_sew_remainder_ratio_reports_finite_constant():
    tg = TimeGrid(1.0, 64)
    f = lambda t: np.cos(2 * np.pi * t)
    germ = lambda i, j: (tg.nodes[j] - tg.nodes[i]) * f(tg.nodes[i])
    res = sew(germ, tg)
    omega = Control(lambda i, j: tg.nodes[j] - tg.nodes[i], 64)
    ratio = res.remainder_ratio(omega, zeta=2.0, norm=abs)
    assert 0 < ratio < 100.0
