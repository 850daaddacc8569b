"""Brownian mode sampling, piecewise-linear lifts, and Cameron-Martin paths.

A q-mode sample carries one scalar increment per (interval, mode); the
canonical lift of its piecewise-linear interpolant supplies the second level
bb_{t_i,t_{i+1}} = 1/2 db (x) db per finest interval (a linear segment has no
area), with coarser values given by Chen composition.  The enhanced Brownian
motion is represented operationally by the finest-level lift; dyadic
coarsenings of the same sample are what the refinement experiments compare.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.random import Generator, Philox

from ._kernels import chen_defect_scan_mode
from .rough import TimeGrid, additive_prefix, chen_prefixes, outer_cross


@dataclass(frozen=True)
class BMSample:
    """Increments of a q-mode Brownian path on a uniform time grid.

    `node_values` is authoritative when supplied (dyadic interpolants copy
    the parent's values at shared nodes bitwise); otherwise it is the prefix
    sum of the increments.
    """

    timegrid: TimeGrid
    q: int
    increments: np.ndarray  # (N, q)
    seed: int | None = None
    _node_values: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        inc = np.asarray(self.increments, dtype=float)
        if inc.shape != (self.timegrid.N, self.q):
            raise ValueError(f"increments must have shape ({self.timegrid.N}, {self.q})")
        object.__setattr__(self, "increments", inc)

    @property
    def node_values(self) -> np.ndarray:
        if self._node_values is not None:
            return self._node_values
        return additive_prefix(self.increments)

    @classmethod
    def from_node_values(cls, timegrid: TimeGrid, values: np.ndarray, seed=None) -> "BMSample":
        values = np.asarray(values, dtype=float)
        if values.shape[0] != timegrid.N + 1:
            raise ValueError("need one node value per grid node")
        return cls(timegrid, values.shape[1], np.diff(values, axis=0), seed, values)


def sample_bm(seed: int, timegrid: TimeGrid, q: int = 3) -> BMSample:
    """Gaussian increments with variance dt per component.

    Each mode draws from its own counter-based Philox stream keyed by
    (seed, mode), with the interval index as the draw position, so the output
    is bitwise reproducible for fixed (seed, N, q) regardless of evaluation
    order or parallel schedule.
    """
    if q < 1:
        raise ValueError("need at least one mode")
    scale = np.sqrt(timegrid.dt)
    cols = [
        Generator(Philox(key=[int(seed), mode])).standard_normal(timegrid.N) * scale
        for mode in range(q)
    ]
    return BMSample(timegrid, q, np.stack(cols, axis=1), seed=int(seed))


@dataclass(frozen=True)
class CameronMartinPath:
    """Node values of an absolutely continuous path with h_0 = 0, read as its
    piecewise-linear interpolant."""

    timegrid: TimeGrid
    values: np.ndarray  # (N+1, q)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != self.timegrid.N + 1:
            raise ValueError("values must have shape (N+1, q)")
        if np.any(v[0] != 0.0):
            raise ValueError("Cameron-Martin paths start at zero")
        object.__setattr__(self, "values", v)

    @property
    def q(self) -> int:
        return self.values.shape[1]

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.values, axis=0)

    @property
    def node_values(self) -> np.ndarray:
        return self.values

    @classmethod
    def linear(cls, timegrid: TimeGrid, velocity) -> "CameronMartinPath":
        """h(t) = t * velocity."""
        velocity = np.atleast_1d(np.asarray(velocity, dtype=float))
        return cls(timegrid, timegrid.nodes[:, None] * velocity[None, :])


def cm_rate(h: CameronMartinPath) -> float:
    """Action integral of |h'|^2, exact for the piecewise-linear interpolant:
    sum_i |h_{t_{i+1}} - h_{t_i}|^2 / dt.  (No factor 1/2; see README.)"""
    inc = h.increments
    return float(np.sum(np.sum(inc * inc, axis=1) / h.timegrid.dt))


@dataclass(frozen=True)
class ModeRoughPath:
    """Per-interval first and second levels of a q-mode rough path.

    Pairs over arbitrary node intervals come from Chen composition of the
    stored generators, so the Chen relation holds by construction; the
    geometric-shuffle identity Sym(bb) = 1/2 db (x) db certifies that the
    lift is canonical.
    """

    timegrid: TimeGrid
    q: int
    level1: np.ndarray  # (N, q)
    level2: np.ndarray  # (N, q, q)

    def __post_init__(self):
        l1 = np.asarray(self.level1, dtype=float)
        l2 = np.asarray(self.level2, dtype=float)
        N = self.timegrid.N
        if l1.shape != (N, self.q) or l2.shape != (N, self.q, self.q):
            raise ValueError("level shapes must be (N, q) and (N, q, q)")
        object.__setattr__(self, "level1", l1)
        object.__setattr__(self, "level2", l2)

    @property
    def prefixes(self) -> tuple[np.ndarray, np.ndarray]:
        """Base-point prefixes (b, B): b[i] = beta_{t_i}, B[i] = bb_{t_0,t_i}."""
        if not hasattr(self, "_prefixes"):
            object.__setattr__(
                self, "_prefixes", chen_prefixes(self.level1, self.level2, outer_cross)
            )
        return self._prefixes

    def pair(self, i: int, j: int) -> tuple[np.ndarray, np.ndarray]:
        """(db_{t_i,t_j}, bb_{t_i,t_j}) by Chen composition."""
        if i > j:
            raise ValueError(f"need i <= j, got ({i}, {j})")
        b, B = self.prefixes
        db = b[j] - b[i]
        return db, B[j] - B[i] - outer_cross(b[i], db)

    def chen_defect(self) -> float:
        """Max over all node triples of |delta bb_{s,u,t} - db_{s,u} (x) db_{u,t}|."""
        b, B = self.prefixes
        return chen_defect_scan_mode(
            np.ascontiguousarray(b), np.ascontiguousarray(B.reshape(len(B), -1))
        )

    def shuffle_defect(self) -> float:
        """Max over all node pairs of |Sym(bb_{s,t}) - 1/2 db (x) db|; zero for
        canonical lifts of piecewise-linear paths."""
        b, B = self.prefixes
        worst = 0.0
        m = len(b)
        for i in range(m - 1):
            db = b[i + 1 :] - b[i]  # (m-1-i, q)
            outer = b[i][None, :, None] * db[:, None, :]
            bb = B[i + 1 :] - B[i] - outer
            sym = 0.5 * (bb + np.swapaxes(bb, 1, 2))
            half = 0.5 * db[:, :, None] * db[:, None, :]
            worst = max(worst, float(np.max(np.abs(sym - half))))
        return worst

    def dilate(self, lam: float) -> "ModeRoughPath":
        if lam < 0:
            raise ValueError("dilation parameter must be nonnegative")
        return ModeRoughPath(self.timegrid, self.q, lam * self.level1, lam**2 * self.level2)


def piecewise_linear_lift(sample: BMSample | CameronMartinPath) -> ModeRoughPath:
    """Canonical (Stratonovich) lift of the piecewise-linear interpolant:
    per interval, bb = 1/2 db (x) db exactly."""
    inc = sample.increments
    level2 = 0.5 * np.einsum("ni,nj->nij", inc, inc)
    return ModeRoughPath(sample.timegrid, inc.shape[1], inc.copy(), level2)


def dyadic_approx(sample: BMSample, level: int) -> tuple[BMSample, ModeRoughPath]:
    """Level-`level` dyadic piecewise-linear interpolant of the sample,
    resampled on the full grid, together with its canonical lift.

    The interpolant agrees with the sample exactly (bitwise) at the coarse
    nodes T*i/2^level, and re-applying the same level is the identity.
    """
    N = sample.timegrid.N
    M = int(np.log2(N))
    if 2**M != N:
        raise ValueError(f"time grid must have 2^M steps, got {N}")
    if not 0 <= level <= M:
        raise ValueError(f"level must lie in [0, {M}], got {level}")
    stride = 2 ** (M - level)
    v = sample.node_values
    coarse = v[::stride]
    frac = (np.arange(stride) / stride)[None, :, None]
    blocks = coarse[:-1, None, :] + frac * (coarse[1:] - coarse[:-1])[:, None, :]
    w = np.concatenate([blocks.reshape(N, sample.q), coarse[-1:]], axis=0)
    approx = BMSample.from_node_values(sample.timegrid, w, seed=sample.seed)
    return approx, piecewise_linear_lift(approx)


# ---------------------------------------------------------------------------
# Replay dumps
# ---------------------------------------------------------------------------


def dump_increments_csv(sample: BMSample, path: str | Path) -> None:
    """Write increments with a provenance header: seed, N, q, T, then one row
    of q increments per interval (full double precision)."""
    path = Path(path)
    seed = "none" if sample.seed is None else str(sample.seed)
    header = (
        "rough-llg increments v1\n"
        f"seed={seed} N={sample.timegrid.N} q={sample.q} T={sample.timegrid.T!r}"
    )
    np.savetxt(path, sample.increments, fmt="%.17g", delimiter=",", header=header)


def load_increments_csv(path: str | Path) -> BMSample:
    path = Path(path)
    meta: dict[str, str] = {}
    with path.open() as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            for tok in line[1:].split():
                if "=" in tok:
                    k, _, val = tok.partition("=")
                    meta[k] = val
    inc = np.loadtxt(path, delimiter=",", ndmin=2)
    tg = TimeGrid(T=float(meta["T"]), N=int(meta["N"]))
    seed = None if meta.get("seed") in (None, "none") else int(meta["seed"])
    return BMSample(tg, int(meta["q"]), inc, seed=seed)
