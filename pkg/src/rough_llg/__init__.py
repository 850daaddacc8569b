"""Rough-driver numerics for the stochastic Landau-Lifshitz-Gilbert equation
on the one-dimensional torus: driver construction from Brownian data, the
sphere-constrained IMEX solver, and the verification toolkit around them."""

__version__ = "0.1.0"

from ._kernels import backend as kernel_backend
from .grid import Grid, GridField, diff, imex_solve, norm
from .llg import SolverOptions, Trajectory, solve
from .noise import BMSample, CameronMartinPath, ModeRoughPath, sample_bm
from .rough import TimeGrid

__all__ = [
    "Grid",
    "GridField",
    "diff",
    "norm",
    "imex_solve",
    "TimeGrid",
    "BMSample",
    "ModeRoughPath",
    "CameronMartinPath",
    "sample_bm",
    "SolverOptions",
    "Trajectory",
    "solve",
    "kernel_backend",
    "__version__",
]
