import numpy as np
import pytest

from rough_llg.grid import (
    Grid,
    GridField,
    diff,
    diff_values,
    imex_solve,
    imex_solve_values,
    norm,
)


def sine_field(n, k=1):
    g = Grid(n)
    x = g.nodes
    vals = np.zeros((n, 3))
    vals[:, 0] = np.sin(2 * np.pi * k * x)
    return GridField(g, vals)


def test_grid_invariants():
    g = Grid(128)
    assert g.h * g.n == 1.0
    assert g.nodes[0] == 0.0
    with pytest.raises(ValueError):
        Grid(3)


def test_diff_annihilates_constants():
    g = Grid(32)
    c = GridField(g, np.tile([0.3, -1.2, 2.0], (32, 1)))
    assert np.max(np.abs(diff(c, 1).values)) == 0.0
    assert np.max(np.abs(diff(c, 2).values)) == 0.0


def test_diff_sine_against_analytic_derivatives():
    f = sine_field(128)
    x = f.grid.nodes
    h = f.grid.h
    d1 = diff(f, 1).values[:, 0]
    d2 = diff(f, 2).values[:, 0]
    # central-difference truncation constants: f'''/6 h^2 and f''''/12 h^2
    assert np.max(np.abs(d1 - 2 * np.pi * np.cos(2 * np.pi * x))) <= 1.05 * (2 * np.pi) ** 3 * h**2 / 6
    assert np.max(np.abs(d2 + 4 * np.pi**2 * np.sin(2 * np.pi * x))) <= 1.05 * (2 * np.pi) ** 4 * h**2 / 12


def test_diff_second_is_discrete_eigenfunction():
    # D2 sin(2 pi k x) = -lam_k sin(2 pi k x) exactly up to roundoff
    for k in (1, 3):
        f = sine_field(64, k)
        lam = (2 - 2 * np.cos(2 * np.pi * k / 64)) * 64**2
        assert np.max(np.abs(diff(f, 2).values + lam * f.values)) < 1e-9


def test_summation_by_parts():
    rng = np.random.default_rng(0)
    g = Grid(48)
    f = rng.normal(size=(48, 3))
    w = rng.normal(size=(48, 3))
    lhs = np.sum(diff_values(f, 1, g.h) * w)
    rhs = -np.sum(f * diff_values(w, 1, g.h))
    assert abs(lhs - rhs) * g.h <= 1e-12


def test_norms_on_reference_fields():
    g = Grid(32)
    c = GridField(g, np.tile([1.0, 0.0, 0.0], (32, 1)))
    assert norm(c, "L2") == pytest.approx(1.0, abs=1e-14)

    f = sine_field(128)
    assert norm(f, "L2") ** 2 == pytest.approx(0.5, abs=1e-6)
    assert norm(f, "H1") ** 2 == pytest.approx(0.5 + 2 * np.pi**2, rel=5e-3)
    assert norm(f, "Linf") == pytest.approx(np.max(np.abs(f.values)), abs=0)


def test_hk_norm_monotone_in_k():
    rng = np.random.default_rng(1)
    f = GridField(Grid(32), rng.normal(size=(32, 3)))
    norms = [norm(f, f"H{k}") for k in range(4)]
    assert all(a <= b + 1e-12 for a, b in zip(norms[:-1], norms[1:]))


def test_imex_solve_constant_and_eigenfunction():
    g = Grid(128)
    c = GridField(g, np.tile([2.0, -1.0, 0.5], (128, 1)))
    assert np.max(np.abs(imex_solve(c, 0.01).values - c.values)) < 1e-13

    f = sine_field(128)
    lam1 = (2 - 2 * np.cos(2 * np.pi / 128)) * 128**2
    expected = f.values / (1 + 0.01 * lam1)
    assert np.max(np.abs(imex_solve(f, 0.01).values - expected)) < 1e-12


def test_imex_solve_residual_random():
    rng = np.random.default_rng(2)
    g = Grid(64)
    rhs = rng.normal(size=(64, 3))
    v = imex_solve_values(rhs, 0.05, g)
    residual = v - 0.05 * diff_values(v, 2, g.h) - rhs
    assert np.max(np.abs(residual)) <= 1e-12


def test_imex_solve_small_dt_limit():
    f = sine_field(64)
    errs = [np.max(np.abs(imex_solve(f, dt).values - f.values)) for dt in (1e-3, 5e-4, 2.5e-4)]
    assert errs[0] / errs[1] == pytest.approx(2.0, rel=0.1)
    assert errs[1] / errs[2] == pytest.approx(2.0, rel=0.1)


def test_sphere_validity_flag():
    g = Grid(16)
    th = 2 * np.pi * g.nodes
    u = GridField(g, np.stack([np.cos(th), np.sin(th), np.zeros(16)], axis=1))
    assert u.is_sphere_valued()
    assert not GridField(g, 1.5 * u.values).is_sphere_valued()


def test_field_validation():
    g = Grid(8)
    with pytest.raises(ValueError):
        GridField(g, np.zeros((7, 3)))
    bad = np.zeros((8, 3))
    bad[0, 0] = np.nan
    with pytest.raises(ValueError):
        GridField(g, bad)
