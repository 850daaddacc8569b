import numpy as np
import pytest

from rough_llg.noise import (
    BMSample,
    CameronMartinPath,
    cm_rate,
    dump_increments_csv,
    dyadic_approx,
    load_increments_csv,
    piecewise_linear_lift,
    sample_bm,
)
from rough_llg.rough import TimeGrid


def test_sample_starts_at_zero_and_is_deterministic():
    tg = TimeGrid(1.0, 64)
    s1 = sample_bm(123, tg, 3)
    s2 = sample_bm(123, tg, 3)
    assert np.all(s1.node_values[0] == 0.0)
    assert np.array_equal(s1.increments, s2.increments)
    assert not np.array_equal(s1.increments, sample_bm(124, tg, 3).increments)


def test_sample_variance_matches_dt():
    tg = TimeGrid(1.0, 10_000)
    s = sample_bm(7, tg, 2)
    var = np.var(s.increments, axis=0)
    assert np.all(np.abs(var / tg.dt - 1.0) < 0.05)


def test_modes_are_independent_streams():
    tg = TimeGrid(1.0, 4096)
    s = sample_bm(1, tg, 3)
    corr = np.corrcoef(s.increments.T)
    off = corr[~np.eye(3, dtype=bool)]
    assert np.max(np.abs(off)) < 0.06


def test_pl_lift_single_segment():
    tg = TimeGrid(1.0, 2)
    inc = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    rp = piecewise_linear_lift(BMSample(tg, 3, inc))
    assert np.array_equal(rp.level2[0], np.diag([0.5, 0.0, 0.0]))
    anti = rp.level2[0] - rp.level2[0].T
    assert np.max(np.abs(anti)) == 0.0  # no area on a line segment


def test_pl_lift_matches_quadrature_oracle():
    # two segments: reconstructed bb_{0,2} equals the iterated integral of the
    # explicit piecewise-linear path, computed by fine trapezoidal quadrature
    tg = TimeGrid(2.0, 2)
    inc = np.array([[0.3, -1.0, 0.2], [0.7, 0.4, -0.5]])
    sample = BMSample(tg, 3, inc)
    rp = piecewise_linear_lift(sample)
    _, bb02 = rp.pair(0, 2)

    # quadrature over the PL interpolant: int (beta_r - beta_0) (x) dbeta_r
    K = 4096
    t = np.linspace(0.0, 2.0, 2 * K + 1)
    nodes = sample.node_values
    beta = np.empty((len(t), 3))
    for c in range(3):
        beta[:, c] = np.interp(t, tg.nodes, nodes[:, c])
    dbeta = np.diff(beta, axis=0)
    mid = 0.5 * (beta[:-1] + beta[1:]) - beta[0]
    oracle = np.einsum("ni,nj->ij", mid, dbeta)
    assert np.max(np.abs(bb02 - oracle)) <= 1e-10


def test_pl_lift_shuffle_and_chen():
    tg = TimeGrid(1.0, 32)
    rp = piecewise_linear_lift(sample_bm(5, tg, 3))
    assert rp.shuffle_defect() <= 1e-12
    assert rp.chen_defect() <= 1e-12


def test_dyadic_identity_at_top_level():
    tg = TimeGrid(1.0, 16)
    s = sample_bm(3, tg, 2)
    approx, _ = dyadic_approx(s, 4)
    assert np.array_equal(approx.node_values, s.node_values)


def test_dyadic_matches_at_coarse_nodes_exactly():
    tg = TimeGrid(2.0, 64)
    s = sample_bm(9, tg, 3)
    for level in (2, 4, 5):
        approx, _ = dyadic_approx(s, level)
        stride = 64 // 2**level
        assert np.array_equal(approx.node_values[::stride], s.node_values[::stride])


def test_dyadic_is_projection():
    tg = TimeGrid(1.0, 32)
    s = sample_bm(11, tg, 3)
    once, _ = dyadic_approx(s, 3)
    twice, _ = dyadic_approx(once, 3)
    assert np.array_equal(once.node_values, twice.node_values)


def test_dyadic_needs_power_of_two():
    tg = TimeGrid(1.0, 24)
    with pytest.raises(ValueError):
        dyadic_approx(sample_bm(0, tg, 2), 2)


def test_cm_rate_values():
    tg = TimeGrid(1.0, 256)
    assert cm_rate(CameronMartinPath(tg, np.zeros((257, 3)))) == 0.0
    assert cm_rate(CameronMartinPath.linear(tg, [1.0, 0.0, 0.0])) == 1.0
    assert cm_rate(CameronMartinPath.linear(tg, [1.0, 2.0, 0.0])) == 5.0


def test_cm_rate_quadratic_scaling_exact():
    tg = TimeGrid(1.0, 64)
    rng = np.random.default_rng(4)
    vals = np.concatenate([np.zeros((1, 3)), rng.normal(size=(64, 3))])
    h = CameronMartinPath(tg, vals)
    base = cm_rate(h)
    for lam in (2.0, 0.5, 8.0):
        scaled = CameronMartinPath(tg, lam * vals)
        assert cm_rate(scaled) == lam**2 * base


def test_cm_path_must_start_at_zero():
    tg = TimeGrid(1.0, 4)
    with pytest.raises(ValueError):
        CameronMartinPath(tg, np.ones((5, 2)))


def test_cm_lift_passes_rough_path_checks():
    tg = TimeGrid(1.0, 16)
    h = CameronMartinPath.linear(tg, [0.3, -0.2, 1.0])
    rp = piecewise_linear_lift(h)
    assert rp.chen_defect() <= 1e-12
    assert rp.shuffle_defect() <= 1e-12


def test_increment_dump_roundtrip(tmp_path):
    tg = TimeGrid(0.5, 32)
    s = sample_bm(77, tg, 4)
    path = tmp_path / "inc.csv"
    dump_increments_csv(s, path)
    back = load_increments_csv(path)
    assert back.seed == 77 and back.q == 4
    assert back.timegrid == tg
    assert np.array_equal(back.increments, s.increments)
