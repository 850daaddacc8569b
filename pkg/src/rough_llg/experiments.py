"""Reproducible experiment drivers binding the library modules together.

Each study takes explicit scalar parameters, runs deterministically for a
fixed seed, and returns plain data (rows plus fitted rates) that the CLI
serialises.  Ordering of result rows is canonical (sorted by level, epsilon,
or seed), so concurrent execution of the independent cells can never change
the artifacts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analysis import RateFit, dissipation_check, solution_distance, wz_rate
from .driver import (
    SpaceRoughDriver,
    dilate,
    driver_check,
    driver_control,
    driver_distance,
    lift_simple,
)
from .grid import Grid, GridField
from .llg import (
    SolverOptions,
    Trajectory,
    equator_map,
    extract_remainder,
    solve,
    tilted_map,
)
from .noise import (
    CameronMartinPath,
    cm_rate,
    dyadic_approx,
    piecewise_linear_lift,
    sample_bm,
)
from .rough import TimeGrid


def g_profile(grid: Grid, spec) -> np.ndarray:
    """Scalar modulation profile from a config spec.

    Accepts a number (constant profile), a sample list of length n, or
    {"amplitude": a, "coefficients": [[k, c_k], ...]} for
    a * (1 + sum_k c_k sin(2 pi k x)).
    """
    x = grid.nodes
    if isinstance(spec, (int, float)):
        return float(spec) * np.ones(grid.n)
    if isinstance(spec, (list, tuple, np.ndarray)):
        arr = np.asarray(spec, dtype=float)
        if arr.shape != (grid.n,):
            raise ValueError(f"sampled profile must have length {grid.n}")
        return arr
    if isinstance(spec, dict):
        amp = float(spec.get("amplitude", 1.0))
        out = np.ones(grid.n)
        for k, c in spec.get("coefficients", []):
            out = out + float(c) * np.sin(2.0 * np.pi * int(k) * x)
        return amp * out
    raise ValueError(f"unrecognised g profile spec {spec!r}")


def initial_state(grid: Grid, spec) -> GridField:
    """Initial map from a config spec: 'equator', 'tilted' (optionally
    {'kind': 'tilted', 'height': h}), 'wobble' ({'amplitude': a}, a
    low-energy map near the constant e1), or {'kind': 'file', 'path': ...}
    with rows of (u1, u2, u3) samples."""
    if isinstance(spec, str):
        spec = {"kind": spec}
    kind = spec["kind"]
    if kind == "equator":
        return equator_map(grid)
    if kind == "tilted":
        return tilted_map(grid, float(spec.get("height", 0.5)))
    if kind == "wobble":
        a = float(spec.get("amplitude", 0.2))
        x = grid.nodes
        raw = np.stack([np.ones_like(x), a * np.sin(2.0 * np.pi * x), np.zeros_like(x)], axis=1)
        return GridField(grid, raw / np.linalg.norm(raw, axis=1)[:, None])
    if kind == "file":
        vals = np.loadtxt(spec["path"], delimiter=",", ndmin=2)
        if vals.shape != (grid.n, 3):
            raise ValueError(f"initial-state file must hold {grid.n} rows of 3 components")
        vals = vals / np.linalg.norm(vals, axis=1)[:, None]
        return GridField(grid, vals)
    raise ValueError(f"unrecognised initial state spec {spec!r}")


def brownian_driver(
    seed: int, grid: Grid, timegrid: TimeGrid, g: np.ndarray, level: int | None = None
) -> SpaceRoughDriver:
    """Scalar-modulated driver of one Brownian sample; `level` selects a
    dyadic piecewise-linear coarsening (None for the finest lift)."""
    sample = sample_bm(seed, timegrid, 3)
    if level is None:
        return lift_simple(g, piecewise_linear_lift(sample), grid)
    _, lift = dyadic_approx(sample, level)
    return lift_simple(g, lift, grid)


# ---------------------------------------------------------------------------
# Studies
# ---------------------------------------------------------------------------


@dataclass
class DriverCheckStudy:
    rows: list  # (seed, chen, levy, antisym)
    tolerance: float

    @property
    def passed(self) -> bool:
        return all(max(r[1:]) <= self.tolerance for r in self.rows)


def driver_check_study(
    seeds, M: int, n_space: int, g_spec, q: int = 3, tolerance: float = 1e-12
) -> DriverCheckStudy:
    grid = Grid(n_space)
    g = g_profile(grid, g_spec)
    tg = TimeGrid(1.0, 2**M)
    rows = []
    for seed in sorted(int(s) for s in seeds):
        if q != 3:
            raise ValueError("driver-check runs on 3-mode drivers")
        d = brownian_driver(seed, grid, tg, g)
        chk = driver_check(d)
        rows.append((seed, chk.chen_defect, chk.levy_defect, chk.antisym_defect))
    return DriverCheckStudy(rows, tolerance)


@dataclass
class SimulateStudy:
    trajectory: Trajectory
    sphere_defect: float
    stationarity: float | None  # sup_t ||u_t - u_0||_inf for no-noise equator runs
    energies: np.ndarray


def simulate_study(
    seed: int | None,
    n_space: int,
    T: float,
    steps: int,
    u0_spec,
    g_spec,
    noise: bool,
    opts: SolverOptions,
) -> SimulateStudy:
    grid = Grid(n_space)
    tg = TimeGrid(T, steps)
    u0 = initial_state(grid, u0_spec)
    drv = None
    if noise:
        drv = brownian_driver(int(seed), grid, tg, g_profile(grid, g_spec))
    traj = solve(u0, drv, opts, timegrid=tg)
    rep = dissipation_check(traj)
    stationarity = None
    if not noise and isinstance(u0_spec, str) and u0_spec == "equator":
        stationarity = float(np.max(np.abs(traj.states - u0.values[None])))
    return SimulateStudy(traj, traj.sphere_defect(), stationarity, rep.energies)


@dataclass
class WongZakaiStudy:
    rows: list  # (level, driver_distance, solution_distance)
    fit: RateFit


def wongzakai_study(
    seed: int,
    M: int,
    levels,
    n_space: int,
    p: float,
    k: int,
    T: float,
    g_spec,
    u0_spec,
) -> WongZakaiStudy:
    grid = Grid(n_space)
    g = g_profile(grid, g_spec)
    tg = TimeGrid(T, 2**M)
    u0 = initial_state(grid, u0_spec)
    sample = sample_bm(seed, tg, 3)
    ref_driver = lift_simple(g, piecewise_linear_lift(sample), grid)
    opts = SolverOptions()
    ref_traj = solve(u0, ref_driver, opts)
    rows = []
    for lev in sorted(int(v) for v in levels):
        _, lift = dyadic_approx(sample, lev)
        drv = lift_simple(g, lift, grid)
        dd = driver_distance(drv, ref_driver, p, k)
        sd = solution_distance(solve(u0, drv, opts), ref_traj)
        rows.append((lev, dd, sd))
    return WongZakaiStudy(rows, wz_rate([(dd, sd) for _, dd, sd in rows]))


@dataclass
class RemainderStudy:
    windows: list  # (window_length, omega, remainder_L2)
    fit: RateFit
    p: float

    @property
    def exponent(self) -> float:
        return self.fit.slope


def remainder_study(
    seed: int,
    M: int,
    n_space: int,
    p: float,
    T: float,
    g_spec,
    u0_spec,
    min_length: int = 1,
    max_windows_per_scale: int = 32,
) -> RemainderStudy:
    """Fit of the local-expansion remainder against the driver control over
    dyadic windows (all lengths >= min_length, windows laid edge to edge)."""
    grid = Grid(n_space)
    g = g_profile(grid, g_spec)
    tg = TimeGrid(T, 2**M)
    u0 = initial_state(grid, u0_spec)
    d = brownian_driver(seed, grid, tg, g)
    traj = solve(u0, d, SolverOptions())
    control = driver_control(d, p, 2)
    h = grid.h
    N = tg.N
    windows = []
    length = min_length
    while length <= N // 2:
        starts = list(range(0, N - length + 1, length))
        if len(starts) > max_windows_per_scale:
            idx = np.linspace(0, len(starts) - 1, max_windows_per_scale).astype(int)
            starts = [starts[i] for i in idx]
        for s in starts:
            rem = extract_remainder(traj, d, s, s + length)
            rem_l2 = float(np.sqrt(h * np.sum(rem * rem)))
            windows.append((length, control(s, s + length), rem_l2))
        length *= 2
    fit = wz_rate([(om, rl) for _, om, rl in windows])
    return RemainderStudy(windows, fit, p)


@dataclass
class SmallNoiseStudy:
    rows: list  # (epsilon, distance)
    fit: RateFit

    @property
    def monotone(self) -> bool:
        ordered = sorted(self.rows)
        return all(a[1] <= b[1] for a, b in zip(ordered[:-1], ordered[1:]))


def smallnoise_study(
    seed: int,
    epsilons,
    M: int,
    n_space: int,
    T: float,
    g_spec,
    u0_spec,
) -> SmallNoiseStudy:
    """Distance of the dilated-noise solution to the deterministic one:
    the driver is scaled by Lambda_{sqrt(eps)}, so the first level carries
    sqrt(eps) and the expected slope of the sup-L2 distance against eps
    is one half."""
    grid = Grid(n_space)
    g = g_profile(grid, g_spec)
    tg = TimeGrid(T, 2**M)
    u0 = initial_state(grid, u0_spec)
    base = brownian_driver(seed, grid, tg, g)
    opts = SolverOptions()
    det = solve(u0, None, opts, timegrid=tg)
    rows = []
    for eps in sorted(float(e) for e in epsilons):
        traj = solve(u0, dilate(base, np.sqrt(eps)), opts)
        dist = float(
            np.max(
                np.sqrt(grid.h * np.sum((traj.states - det.states) ** 2, axis=(1, 2)))
            )
        )
        rows.append((eps, dist))
    return SmallNoiseStudy(rows, wz_rate(rows))


@dataclass
class SkeletonStudy:
    action: float  # I(h) = int |h'|^2
    trajectory: Trajectory
    sphere_defect: float


def skeleton_study(
    velocity,
    steps: int,
    n_space: int,
    T: float,
    g_spec,
    u0_spec,
) -> SkeletonStudy:
    """Solve along the canonical lift of a Cameron-Martin path h(t) = t v and
    report the action functional (no factor 1/2; documented in the README)."""
    grid = Grid(n_space)
    g = g_profile(grid, g_spec)
    tg = TimeGrid(T, steps)
    h = CameronMartinPath.linear(tg, velocity)
    drv = lift_simple(g, piecewise_linear_lift(h), grid)
    traj = solve(initial_state(grid, u0_spec), drv, SolverOptions())
    return SkeletonStudy(cm_rate(h), traj, traj.sphere_defect())
