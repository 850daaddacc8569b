"""Time steppers for the sphere-constrained rough LLG dynamics.

The rough-Euler step realises the local expansion of the solution: drift
terms integrated over the interval (Laplacian implicit, nonlinear terms
explicit), plus the one-step noise action (G + GG) u frozen at the left
endpoint, with the third-order remainder dropped.  Pointwise normalisation
after each step enforces the norm constraint discretely; the unprojected mode
is kept because the size of the norm drift is itself a consequence of the
driver's anti-symmetry, and is measured by the tests.
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .driver import SpaceRoughDriver
from .grid import Grid, GridField, diff_values, imex_solve_values
from .rough import TimeGrid

EPS_PROJ = 1e-6

_SCHEMES = ("rough_euler_imex", "rough_euler_explicit", "smooth_imex")


class BlowupError(RuntimeError):
    """A state left the trust region |v| >= EPS_PROJ before projection."""

    def __init__(self, step: int, node: int, magnitude: float):
        self.step = step
        self.node = node
        self.magnitude = magnitude
        super().__init__(
            f"field magnitude {magnitude:.3e} < {EPS_PROJ} at grid node {node}, step {step}"
        )


@dataclass(frozen=True)
class SolverOptions:
    scheme: str = "rough_euler_imex"
    project: bool = True
    drift_enabled: bool = True
    substeps_per_interval: int = 1

    def __post_init__(self):
        if self.scheme not in _SCHEMES:
            raise ValueError(f"scheme must be one of {_SCHEMES}")
        if self.substeps_per_interval < 1:
            raise ValueError("substeps_per_interval must be >= 1")


@dataclass(frozen=True)
class SmoothInput:
    """First-level-only input: one 3x3 matrix field increment per interval."""

    timegrid: TimeGrid
    increments: np.ndarray  # (N, n, 3, 3)


@dataclass
class Trajectory:
    grid: Grid
    timegrid: TimeGrid
    states: np.ndarray  # (N+1, n, 3)
    metadata: dict = field(default_factory=dict)

    def state(self, i: int) -> GridField:
        return GridField(self.grid, self.states[i])

    def sphere_defect(self) -> float:
        """max over nodes and grid points of | |u| - 1 |."""
        r = np.linalg.norm(self.states, axis=2)
        return float(np.max(np.abs(r - 1.0)))


# ---------------------------------------------------------------------------
# Pointwise operators
# ---------------------------------------------------------------------------


def tension_values(values: np.ndarray, h: float) -> np.ndarray:
    """D2 u + u |D1 u|^2: vanishes on harmonic (geodesic) maps."""
    du = diff_values(values, 1, h)
    return diff_values(values, 2, h) + values * np.sum(du * du, axis=1, keepdims=True)


def tension(u: GridField) -> GridField:
    dev = np.max(np.abs(np.linalg.norm(u.values, axis=1) - 1.0))
    if dev > 0.1:
        warnings.warn(f"tension evaluated off the sphere (max | |u|-1 | = {dev:.2e})")
    return GridField(u.grid, tension_values(u.values, u.grid.h))


def drift_values(values: np.ndarray, h: float) -> np.ndarray:
    """Tension plus the gyromagnetic term u x D2 u."""
    d2u = diff_values(values, 2, h)
    du = diff_values(values, 1, h)
    return d2u + values * np.sum(du * du, axis=1, keepdims=True) + np.cross(values, d2u)


def drift(u: GridField) -> GridField:
    return GridField(u.grid, drift_values(u.values, u.grid.h))


def project_sphere_values(values: np.ndarray, step: int = -1) -> np.ndarray:
    mag = np.linalg.norm(values, axis=1)
    bad = mag < EPS_PROJ
    if np.any(bad):
        node = int(np.argmax(bad))
        raise BlowupError(step, node, float(mag[node]))
    return values / mag[:, None]


def project_sphere(f: GridField) -> GridField:
    """Pointwise radial projection f / |f|; aborts near the origin."""
    return GridField(f.grid, project_sphere_values(f.values))


def _explicit_nonlinear(values: np.ndarray, h: float) -> np.ndarray:
    """The drift terms treated explicitly under IMEX: u|D1 u|^2 + u x D2 u."""
    du = diff_values(values, 1, h)
    d2u = diff_values(values, 2, h)
    return values * np.sum(du * du, axis=1, keepdims=True) + np.cross(values, d2u)


def _guard(values: np.ndarray, step: int) -> np.ndarray:
    mag = np.linalg.norm(values, axis=1)
    if np.min(mag) < EPS_PROJ:
        node = int(np.argmin(mag))
        raise BlowupError(step, node, float(mag[node]))
    return values


def _drift_substeps(values, grid, dt, opts, step, rough_increment=None):
    """Advance the drift over one driver interval in `substeps` IMEX (or
    explicit) stages; the rough increment, frozen at the interval's left
    endpoint, is added undamped in the first stage."""
    s = opts.substeps_per_interval
    delta = dt / s
    v = values
    for m in range(s):
        if opts.drift_enabled:
            if opts.scheme == "rough_euler_explicit":
                v = v + delta * (diff_values(v, 2, grid.h) + _explicit_nonlinear(v, grid.h))
            else:
                v = imex_solve_values(v + delta * _explicit_nonlinear(v, grid.h), delta, grid)
        if m == 0 and rough_increment is not None:
            v = v + rough_increment
        v = _guard(v, step)
        if opts.project:
            v = project_sphere_values(v, step)
    return v


def step_rough(
    u: GridField, d: SpaceRoughDriver, interval: int, opts: SolverOptions
) -> GridField:
    """One rough-Euler step over the driver's `interval`-th consecutive
    interval.  With drift disabled the step is the bare noise action
    u + (G + GG) u, exposing the exactly solvable rotation dynamics."""
    if not 0 <= interval < d.timegrid.N:
        raise ValueError(f"interval {interval} outside the driver's time grid")
    R = np.einsum("xij,xj->xi", d.increment_operator(interval), u.values)
    if not opts.drift_enabled:
        v = _guard(u.values + R, interval)
        if opts.project:
            v = project_sphere_values(v, interval)
        return GridField(u.grid, v)
    v = _drift_substeps(u.values, u.grid, d.timegrid.dt, opts, interval, R)
    return GridField(u.grid, v)


def step_smooth(
    u: GridField, xi_increment: np.ndarray, dt: float, opts: SolverOptions, step: int = 0
) -> GridField:
    """One IMEX step with a first-level-only input.  The matrix increment is
    split across the substeps and applied to the running state, so refining
    the substep count resolves the input as a smooth path."""
    s = opts.substeps_per_interval
    delta = dt / s
    v = u.values
    share = None if xi_increment is None else xi_increment / s
    for m in range(s):
        if opts.drift_enabled:
            v = imex_solve_values(v + delta * _explicit_nonlinear(v, u.grid.h), delta, u.grid)
        if share is not None:
            v = v + np.einsum("xij,xj->xi", share, v)
        v = _guard(v, step)
        if opts.project:
            v = project_sphere_values(v, step)
    return GridField(u.grid, v)


def _check_explicit_cfl(opts: SolverOptions, dt_sub: float, h: float):
    if opts.scheme == "rough_euler_explicit" and opts.drift_enabled and dt_sub > h * h / 2:
        raise ValueError(
            f"explicit scheme needs dt <= h^2/2 = {h * h / 2:.3e}, got {dt_sub:.3e}"
        )


def solve(
    u0: GridField,
    driver: SpaceRoughDriver | SmoothInput | None,
    opts: SolverOptions = SolverOptions(),
    timegrid: TimeGrid | None = None,
) -> Trajectory:
    """Iterate the stepper over the time grid, recording every node state.

    `driver` may be a rough driver, a first-level-only smooth input, or None
    (deterministic flow; `timegrid` is then required).
    """
    if not u0.is_sphere_valued():
        raise ValueError("initial state must be sphere-valued")
    if driver is not None:
        timegrid = driver.timegrid
    if timegrid is None:
        raise ValueError("a time grid is required when no driver is given")
    _check_explicit_cfl(opts, timegrid.dt / opts.substeps_per_interval, u0.grid.h)

    states = np.empty((timegrid.N + 1, u0.grid.n, 3))
    states[0] = u0.values
    cur = u0
    for i in range(timegrid.N):
        try:
            if isinstance(driver, SpaceRoughDriver):
                cur = step_rough(cur, driver, i, opts)
            elif isinstance(driver, SmoothInput):
                cur = step_smooth(cur, driver.increments[i], timegrid.dt, opts, i)
            else:
                cur = step_smooth(cur, None, timegrid.dt, opts, i)
        except BlowupError as err:
            raise BlowupError(i, err.node, err.magnitude) from None
        states[i + 1] = cur.values
    meta = {
        "scheme": opts.scheme,
        "dt": timegrid.dt,
        "project": opts.project,
        "drift_enabled": opts.drift_enabled,
        "substeps_per_interval": opts.substeps_per_interval,
        "input": type(driver).__name__ if driver is not None else "none",
    }
    return Trajectory(u0.grid, timegrid, states, meta)


def extract_remainder(
    traj: Trajectory, d: SpaceRoughDriver, s: int, t: int
) -> np.ndarray:
    """Local expansion remainder over [t_s, t_t]:

        u^nat = delta u - int drift dr - (G_{s,t} + GG_{s,t}) u_s,

    the drift integral taken by the composite trapezoid rule over the stored
    states (second order, so quadrature error does not pollute the remainder
    scaling at the working resolutions)."""
    if not 0 <= s <= t <= traj.timegrid.N:
        raise ValueError(f"window ({s}, {t}) outside the trajectory")
    du = traj.states[t] - traj.states[s]
    if t == s:
        return np.zeros_like(du)
    h = traj.grid.h
    dt = traj.timegrid.dt
    fs = np.array([drift_values(traj.states[i], h) for i in range(s, t + 1)])
    drift_int = dt * (0.5 * fs[0] + fs[1:-1].sum(axis=0) + 0.5 * fs[-1])
    G, GG = d.pair(s, t)
    noise = np.einsum("xij,xj->xi", G + GG, traj.states[s])
    if not traj.metadata.get("drift_enabled", True):
        drift_int = 0.0
    return du - drift_int - noise


def rho_residual(traj: Trajectory) -> float:
    """Residual of the discrete constraint-propagation equation for
    rho = (|u|^2 - 1)/2 on an unprojected run:

        (rho_{i+1} - rho_i)/dt - D2 rho_{i+1} - |D1 u_i|^2 rho_i,

    measured in L^2 and maximised over steps (Laplacian at the new time to
    match the IMEX treatment)."""
    h = traj.grid.h
    dt = traj.timegrid.dt
    rho = 0.5 * (np.sum(traj.states * traj.states, axis=2) - 1.0)
    worst = 0.0
    for i in range(traj.timegrid.N):
        du = diff_values(traj.states[i], 1, h)
        res = (rho[i + 1] - rho[i]) / dt - diff_values(rho[i + 1], 2, h) - np.sum(
            du * du, axis=1
        ) * rho[i]
        worst = max(worst, float(np.sqrt(h * np.sum(res * res))))
    return worst


# ---------------------------------------------------------------------------
# Initial data
# ---------------------------------------------------------------------------


def equator_map(grid: Grid) -> GridField:
    """The closed geodesic u(x) = (cos 2 pi x, sin 2 pi x, 0)."""
    th = 2.0 * np.pi * grid.nodes
    return GridField(grid, np.stack([np.cos(th), np.sin(th), np.zeros_like(th)], axis=1))


def tilted_map(grid: Grid, height: float = 0.5) -> GridField:
    """Equator displaced toward the pole and renormalised: a small circle,
    not a geodesic, so it dissipates energy under the flow."""
    th = 2.0 * np.pi * grid.nodes
    raw = np.stack([np.cos(th), np.sin(th), np.full_like(th, height)], axis=1)
    return GridField(grid, raw / np.linalg.norm(raw, axis=1)[:, None])


# ---------------------------------------------------------------------------
# Trajectory dumps (CSV and versioned binary)
# ---------------------------------------------------------------------------

_TRAJ_MAGIC = b"RLTJ"
_TRAJ_VERSION = 1


def dump_trajectory_csv(traj: Trajectory, path: str | Path) -> None:
    """Rows (t, x, u1, u2, u3), one per node state and grid point."""
    path = Path(path)
    n = traj.grid.n
    N = traj.timegrid.N
    t = np.repeat(traj.timegrid.nodes, n)
    x = np.tile(traj.grid.nodes, N + 1)
    flat = traj.states.reshape(-1, 3)
    data = np.column_stack([t, x, flat])
    np.savetxt(path, data, fmt="%.17g", delimiter=",", header="t,x,u1,u2,u3")


def dump_trajectory(traj: Trajectory, path: str | Path) -> None:
    """Binary layout: 16-byte header (magic 'RLTJ', u32 version, u32 n, u32 N),
    then f64 horizon T, the N+1 time nodes, and the (N+1)*n*3 state values,
    little-endian, C order."""
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(_TRAJ_MAGIC)
        fh.write(struct.pack("<III", _TRAJ_VERSION, traj.grid.n, traj.timegrid.N))
        fh.write(struct.pack("<d", traj.timegrid.T))
        fh.write(np.ascontiguousarray(traj.timegrid.nodes, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(traj.states, dtype="<f8").tobytes())


def load_trajectory(path: str | Path) -> Trajectory:
    path = Path(path)
    with path.open("rb") as fh:
        magic = fh.read(4)
        if magic != _TRAJ_MAGIC:
            raise ValueError(f"not a trajectory file (magic {magic!r})")
        version, n, N = struct.unpack("<III", fh.read(12))
        if version != _TRAJ_VERSION:
            raise ValueError(f"unsupported trajectory file version {version}")
        (T,) = struct.unpack("<d", fh.read(8))
        fh.read(8 * (N + 1))  # time nodes are derivable from (T, N)
        states = np.frombuffer(fh.read(8 * (N + 1) * n * 3), dtype="<f8")
    return Trajectory(Grid(n), TimeGrid(T=T, N=N), states.reshape(N + 1, n, 3).copy())
