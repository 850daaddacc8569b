"""Uniform periodic grid on the unit torus with finite differences and norms.

All fields are sampled on nodes x_i = i/n, i = 0..n-1, and take values in R^3
(stored as (n, 3) arrays).  Derivatives are second-order central differences
with periodic wrap; the implicit heat solve diagonalises the circulant
second-difference operator with the FFT, so it is exact up to roundoff.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TOL_SPHERE = 1e-10


@dataclass(frozen=True)
class Grid:
    """Uniform discretisation of the length-1 torus with n >= 4 points."""

    n: int

    def __post_init__(self):
        if self.n < 4:
            raise ValueError(f"need n >= 4 grid points, got {self.n}")

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n) / self.n

    def laplacian_eigenvalues(self) -> np.ndarray:
        """Eigenvalues lam_k >= 0 of minus the second-difference operator
        under the DFT: D2 f_k = -lam_k f_k."""
        k = np.arange(self.n)
        return (2.0 - 2.0 * np.cos(2.0 * np.pi * k / self.n)) / self.h**2


@dataclass(frozen=True)
class GridField:
    """An R^3-valued function sampled on a Grid (one time slice)."""

    grid: Grid
    values: np.ndarray  # (n, 3)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n, 3):
            raise ValueError(f"values must have shape ({self.grid.n}, 3), got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite entries")
        object.__setattr__(self, "values", v)

    def is_sphere_valued(self, tol: float = TOL_SPHERE) -> bool:
        r = np.linalg.norm(self.values, axis=1)
        return bool(np.max(np.abs(r - 1.0)) <= tol)


def diff_values(values: np.ndarray, order: int, h: float) -> np.ndarray:
    """Periodic central difference of a nodal array along axis 0."""
    if order == 1:
        return (np.roll(values, -1, axis=0) - np.roll(values, 1, axis=0)) / (2.0 * h)
    if order == 2:
        return (np.roll(values, -1, axis=0) - 2.0 * values + np.roll(values, 1, axis=0)) / h**2
    raise ValueError(f"derivative order must be 1 or 2, got {order}")


def diff(f: GridField, order: int) -> GridField:
    """First or second central difference of f, periodic wrap."""
    return GridField(f.grid, diff_values(f.values, order, f.grid.h))


def lp_norm_values(values: np.ndarray, p: float, h: float) -> float:
    """Discrete L^p norm (h-weighted) of a vector-valued nodal array."""
    mag = np.linalg.norm(values, axis=1) if values.ndim > 1 else np.abs(values)
    if np.isinf(p):
        return float(np.max(mag))
    if p < 1:
        raise ValueError("p must be >= 1")
    return float((h * np.sum(mag**p)) ** (1.0 / p))


def hk_norm_sq_values(values: np.ndarray, k: int, h: float) -> float:
    """Squared discrete H^k norm: sum of squared L^2 norms of iterated
    central differences, orders 0..k."""
    total = 0.0
    cur = values
    for j in range(k + 1):
        total += h * float(np.sum(cur * cur))
        if j < k:
            cur = diff_values(cur, 1, h)
    return total


def norm(f: GridField, space: str) -> float:
    """Discrete norm of f.  `space` is 'Lp' (p a number or 'inf') or 'Hk'."""
    h = f.grid.h
    if space.startswith("L"):
        tail = space[1:]
        p = np.inf if tail in ("inf", "Inf") else float(tail)
        return lp_norm_values(f.values, p, h)
    if space.startswith("H"):
        k = int(space[1:])
        return float(np.sqrt(hk_norm_sq_values(f.values, k, h)))
    raise ValueError(f"unknown space {space!r}")


def imex_solve_values(rhs: np.ndarray, dt: float, grid: Grid) -> np.ndarray:
    """Solve (I - dt*D2) v = rhs componentwise via the FFT diagonalisation."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    lam = grid.laplacian_eigenvalues()
    rhat = np.fft.fft(rhs, axis=0)
    vhat = rhat / (1.0 + dt * lam)[:, None] if rhs.ndim > 1 else np.fft.fft(rhs) / (1.0 + dt * lam)
    return np.real(np.fft.ifft(vhat, axis=0)) if rhs.ndim > 1 else np.real(np.fft.ifft(vhat))


def imex_solve(rhs: GridField, dt: float) -> GridField:
    """Return v with (I - dt*D2) v = rhs; the operator is SPD so this is total."""
    return GridField(rhs.grid, imex_solve_values(rhs.values, dt, rhs.grid))
