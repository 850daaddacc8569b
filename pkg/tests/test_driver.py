import numpy as np
import pytest

from rough_llg.driver import (
    SpaceRoughDriver,
    antisymmetry_defect,
    cross_matrix,
    dilate,
    driver_check,
    driver_control,
    driver_distance,
    dump_driver,
    ff_contract,
    levy_decompose,
    lift_multimode,
    lift_simple,
    load_driver,
    second_level_from_iterated_integrals,
)
from rough_llg.grid import Grid
from rough_llg.noise import BMSample, piecewise_linear_lift, sample_bm
from rough_llg.rough import TimeGrid


def brownian_driver(seed=0, n=16, N=32, gamp=1.0, sin_coeff=0.5):
    grid = Grid(n)
    g = gamp * (1.0 + sin_coeff * np.sin(2 * np.pi * grid.nodes))
    rp = piecewise_linear_lift(sample_bm(seed, TimeGrid(1.0, N), 3))
    return lift_simple(g, rp, grid), g, rp


def test_cross_matrix_paper_entry():
    expected = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, -1.0, 0.0]])
    assert np.array_equal(cross_matrix(np.array([1.0, 0.0, 0.0])), expected)
    assert np.max(np.abs(cross_matrix(np.zeros(3)))) == 0.0


def test_cross_matrix_is_cross_product():
    rng = np.random.default_rng(0)
    for _ in range(20):
        xi, v = rng.normal(size=(2, 3))
        assert np.max(np.abs(cross_matrix(xi) @ v - np.cross(v, xi))) <= 1e-15


def test_second_level_two_spellings_agree():
    rng = np.random.default_rng(1)
    W = rng.normal(size=(5, 3, 3))
    assert np.allclose(ff_contract(W), second_level_from_iterated_integrals(W), atol=1e-14)


def test_lift_simple_unit_example():
    # g = 1, db = e1, bb = 1/2 e1 (x) e1  ->  G = F(e1), GG = diag(0, -1/2, -1/2)
    tg = TimeGrid(1.0, 2)
    inc = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    rp = piecewise_linear_lift(BMSample(tg, 3, inc))
    d = lift_simple(np.ones(8), rp, Grid(8))
    assert np.allclose(d.level1[0, 0], cross_matrix(np.array([1.0, 0.0, 0.0])), atol=1e-15)
    assert np.allclose(d.level2[0, 0], np.diag([0.0, -0.5, -0.5]), atol=1e-15)
    # consistency with 1/2 G^2 for the single segment
    G = d.level1[0, 0]
    assert np.allclose(d.level2[0, 0], 0.5 * G @ G, atol=1e-14)


def test_lift_simple_zero_profile():
    tg = TimeGrid(1.0, 4)
    rp = piecewise_linear_lift(sample_bm(1, tg, 3))
    d = lift_simple(np.zeros(8), rp, Grid(8))
    assert np.max(np.abs(d.level1)) == 0.0 and np.max(np.abs(d.level2)) == 0.0


def test_lift_multimode_reduces_to_lift_simple():
    grid = Grid(12)
    g = 1.0 + 0.5 * np.sin(2 * np.pi * grid.nodes)
    rp = piecewise_linear_lift(sample_bm(2, TimeGrid(1.0, 8), 3))
    simple = lift_simple(g, rp, grid)
    profiles = g[None, :, None] * np.eye(3)[:, None, :]
    multi = lift_multimode(profiles, rp, grid)
    assert np.max(np.abs(simple.level1 - multi.level1)) <= 1e-14
    assert np.max(np.abs(simple.level2 - multi.level2)) <= 1e-14


def test_lift_multimode_constant_profiles_are_spatially_constant():
    grid = Grid(8)
    rng = np.random.default_rng(3)
    profiles = np.tile(rng.normal(size=(2, 1, 3)), (1, 8, 1))
    rp = piecewise_linear_lift(sample_bm(4, TimeGrid(1.0, 6), 2))
    d = lift_multimode(profiles, rp, grid)
    assert np.max(np.abs(d.level1 - d.level1[:, :1])) == 0.0
    assert np.max(np.abs(d.level2 - d.level2[:, :1])) == 0.0


def test_constructed_driver_invariants():
    d, _, _ = brownian_driver(seed=5, n=8, N=16)
    chk = driver_check(d)
    assert chk.chen_defect <= 1e-12
    assert chk.levy_defect <= 1e-12
    assert chk.antisym_defect <= 1e-12


def test_driver_check_without_provenance_small():
    d, _, _ = brownian_driver(seed=6, n=6, N=12)
    bare = SpaceRoughDriver(d.grid, d.timegrid, d.level1, d.level2)
    chk = driver_check(bare)
    assert chk.max_defect() <= 1e-12


def test_dilation_homogeneity_and_composition():
    d, _, _ = brownian_driver(seed=7, n=8, N=8)
    assert np.array_equal(dilate(d, 1.0).level1, d.level1)
    d2 = dilate(d, 2.0)
    assert np.allclose(d2.level1, 2 * d.level1, atol=0) and np.allclose(
        d2.level2, 4 * d.level2, atol=0
    )
    assert np.max(np.abs(dilate(d, 0.0).level1)) == 0.0
    ab = dilate(dilate(d, 0.5), 3.0)
    assert np.allclose(ab.level1, dilate(d, 1.5).level1, atol=1e-15)
    assert np.allclose(ab.level2, dilate(d, 1.5).level2, atol=1e-15)
    with pytest.raises(ValueError):
        dilate(d, -1.0)


def test_levy_decompose_single_segment_and_brownian():
    tg = TimeGrid(1.0, 2)
    inc = np.array([[0.4, -0.3, 0.8], [0.0, 0.0, 0.0]])
    rp = piecewise_linear_lift(BMSample(tg, 3, inc))
    d = lift_simple(np.ones(8), rp, Grid(8))
    L, defect = levy_decompose(d, (0, 1), 0)
    assert np.max(np.abs(L)) <= 1e-15  # no area on a segment
    assert defect <= 1e-15

    d2, _, _ = brownian_driver(seed=8, n=8, N=32)
    L2, defect2 = levy_decompose(d2, (0, 32), 3)
    assert defect2 <= 1e-13
    assert np.max(np.abs(L2 + L2.T)) <= 1e-12  # anti-symmetric Levy area


def test_levy_area_mean_zero_statistics():
    # mean of the off-diagonal area entries over independent samples ~ 0
    tg = TimeGrid(1.0, 64)
    grid = Grid(4)
    acc = []
    for seed in range(200):
        rp = piecewise_linear_lift(sample_bm(seed, tg, 3))
        d = lift_simple(np.ones(4), rp, grid)
        L, _ = levy_decompose(d, (0, 64), 0)
        acc.append(L[0, 1])
    mean = np.mean(acc)
    stderr = np.std(acc) / np.sqrt(len(acc))
    assert abs(mean) <= 4 * stderr + 1e-12


def test_antisymmetry_defect_reporting():
    d, _, _ = brownian_driver(seed=9, n=8, N=8)
    assert antisymmetry_defect(d) <= 1e-15
    corrupted = d.level1.copy()
    corrupted[3, 2] += 1e-3 * np.eye(3)
    bad = SpaceRoughDriver(d.grid, d.timegrid, corrupted, d.level2)
    assert antisymmetry_defect(bad) == pytest.approx(2e-3, rel=1e-9)
    zero = SpaceRoughDriver(
        d.grid, d.timegrid, np.zeros_like(d.level1), np.zeros_like(d.level2)
    )
    assert antisymmetry_defect(zero) == 0.0


def test_driver_distance_zero_and_symmetry():
    d, _, _ = brownian_driver(seed=10, n=8, N=16)
    assert driver_distance(d, d, 2.5, 1) == 0.0
    e, _, _ = brownian_driver(seed=11, n=8, N=16)
    ab = driver_distance(d, e, 2.5, 1)
    ba = driver_distance(e, d, 2.5, 1)
    assert ab == pytest.approx(ba, rel=1e-9)


def test_driver_distance_dilation_homogeneity():
    # distance(Lambda_lam d, 0): first level scales linearly, second quadratically
    tg = TimeGrid(1.0, 2)
    inc = np.array([[0.5, 0.2, -0.1], [0.0, 0.0, 0.0]])
    rp = piecewise_linear_lift(BMSample(tg, 3, inc))
    grid = Grid(8)
    d = lift_simple(np.ones(8), rp, grid)
    zero = SpaceRoughDriver(grid, tg, np.zeros_like(d.level1), np.zeros_like(d.level2))

    from rough_llg.driver import _pvar_level1_dense, _pvar_level2_dense

    l1 = {lam: _pvar_level1_dense(dilate(d, lam), zero, 2.0, 1) for lam in (1.0, 2.0, 4.0)}
    l2 = {lam: _pvar_level2_dense(dilate(d, lam), zero, 2.0, 1) for lam in (1.0, 2.0, 4.0)}
    assert l1[2.0] == pytest.approx(2 * l1[1.0], rel=1e-12)
    assert l1[4.0] == pytest.approx(4 * l1[1.0], rel=1e-12)
    assert l2[2.0] == pytest.approx(4 * l2[1.0], rel=1e-12)
    assert l2[4.0] == pytest.approx(16 * l2[1.0], rel=1e-12)


def test_driver_distance_mode_route_matches_dense():
    d1, g, rp1 = brownian_driver(seed=12, n=8, N=24)
    rp2 = piecewise_linear_lift(sample_bm(13, TimeGrid(1.0, 24), 3))
    d2 = lift_simple(g, rp2, d1.grid)
    fast = driver_distance(d1, d2, 2.5, 2)

    bare1 = SpaceRoughDriver(d1.grid, d1.timegrid, d1.level1, d1.level2)
    bare2 = SpaceRoughDriver(d2.grid, d2.timegrid, d2.level1, d2.level2)
    dense = driver_distance(bare1, bare2, 2.5, 2)
    assert fast == pytest.approx(dense, rel=1e-9)


def test_driver_distance_triangle_inequality():
    rng_seeds = [(14, 15, 16), (17, 18, 19)]
    for sa, sb, sc in rng_seeds:
        da, g, _ = brownian_driver(seed=sa, n=8, N=12)
        db = lift_simple(g, piecewise_linear_lift(sample_bm(sb, TimeGrid(1.0, 12), 3)), da.grid)
        dc = lift_simple(g, piecewise_linear_lift(sample_bm(sc, TimeGrid(1.0, 12), 3)), da.grid)
        ab = driver_distance(da, db, 2.5, 1)
        bc = driver_distance(db, dc, 2.5, 1)
        ac = driver_distance(da, dc, 2.5, 1)
        assert ac <= ab + bc + 1e-10


def test_driver_distance_decreases_with_dyadic_level():
    from rough_llg.noise import dyadic_approx

    tg = TimeGrid(1.0, 64)
    s = sample_bm(20, tg, 3)
    grid = Grid(8)
    g = np.ones(8)
    ref = lift_simple(g, piecewise_linear_lift(s), grid)
    dists = []
    for level in (2, 3, 4, 5):
        _, lift = dyadic_approx(s, level)
        dists.append(driver_distance(lift_simple(g, lift, grid), ref, 2.5, 1))
    assert all(a >= b for a, b in zip(dists[:-1], dists[1:]))


def test_driver_control_superadditive_and_monotone_under_dilation():
    d, _, _ = brownian_driver(seed=21, n=8, N=12)
    ctrl = driver_control(d, 2.5, 2)
    worst = -np.inf
    for u in range(1, 12):
        for i in range(u):
            for j in range(u + 1, 13):
                worst = max(worst, ctrl(i, u) + ctrl(u, j) - ctrl(i, j))
    assert worst <= 1e-10

    omegas = [driver_control(dilate(d, lam), 2.5, 2)(0, 12) for lam in (0.5, 1.0, 2.0)]
    assert omegas[0] < omegas[1] < omegas[2]


def test_driver_control_term_by_term():
    # omega = ||G||^p + ||GG||^{p/2} + ||G||^{2p}, matching the seminorm parts
    from rough_llg.driver import _pvar_level1_mode, _pvar_level2_mode

    d, _, _ = brownian_driver(seed=22, n=8, N=10)
    zero = SpaceRoughDriver(
        d.grid, d.timegrid, np.zeros_like(d.level1), np.zeros_like(d.level2),
        d.profiles, d.modepath.dilate(0.0),
    )
    p = 2.5
    s1 = _pvar_level1_mode(d, zero, p, 2)
    s2 = _pvar_level2_mode(d, zero, p, 2)
    expected = s1**p + s2 ** (p / 2) + s1 ** (2 * p)
    assert driver_control(d, p, 2)(0, 10) == pytest.approx(expected, rel=1e-9)


def test_driver_serialisation_roundtrip(tmp_path):
    d, _, _ = brownian_driver(seed=23, n=8, N=8)
    path = tmp_path / "driver.bin"
    dump_driver(d, path)
    back = load_driver(path)
    assert back.grid == d.grid and back.timegrid == d.timegrid
    assert np.array_equal(back.level1, d.level1)
    assert np.array_equal(back.level2, d.level2)
