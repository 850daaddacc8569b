"""Two-index map algebra, p-variation, controls, and the sewing construction.

Conventions.  A path g on the time grid induces the increment map
delta2(g)_{s,t} = g_t - g_s.  For a two-index map G the second-order defect is
delta3(G)_{s,u,t} = G_{s,t} - G_{s,u} - G_{u,t}; increments are exactly the
maps with vanishing defect.  Second levels are stored by per-interval
generators and expanded on demand through the Chen composition

    GG_{s,t} = GG_{s,u} + GG_{u,t} + cross(G_{s,u}, G_{u,t})

where `cross` is composition of linear maps for matrix-valued levels
(later increment acting on the left) and the outer product for mode-vector
levels.  Storing generators keeps the Chen relation true by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid t_i = i*T/N on [0, T] with N >= 2 steps."""

    T: float
    N: int

    def __post_init__(self):
        if self.N < 2:
            raise ValueError(f"need N >= 2 time steps, got {self.N}")
        if self.T <= 0:
            raise ValueError("horizon T must be positive")

    @property
    def dt(self) -> float:
        return self.T / self.N

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.N + 1) * (self.T / self.N)


def matrix_cross(left, right):
    """Chen cross term for operator-valued levels: the [u,t] increment is
    composed on the left of the [s,u] increment."""
    return right @ left


def outer_cross(left, right):
    """Chen cross term for mode-vector levels: (a (x) b)^{ij} = a^i b^j."""
    return np.multiply.outer(left, right)


class TwoIndexMap:
    """A map (i, j) -> V_{t_i, t_j} on node pairs i <= j of a time grid.

    Wraps either a dense evaluator or per-interval generators.  Used by the
    generic (small-N) code paths and by the property tests; the performance
    paths in `driver` operate on prefix arrays directly.
    """

    def __init__(self, N: int, value: Callable[[int, int], np.ndarray]):
        self.N = N
        self.value = value

    @classmethod
    def from_path(cls, path: np.ndarray) -> "TwoIndexMap":
        path = np.asarray(path, dtype=float)
        return cls(len(path) - 1, lambda i, j: path[j] - path[i])

    @classmethod
    def from_generators(cls, level1: np.ndarray) -> "TwoIndexMap":
        prefix = additive_prefix(level1)
        return cls(len(level1), lambda i, j: prefix[j] - prefix[i])

    def delta3(self, i: int, u: int, j: int) -> np.ndarray:
        return self.value(i, j) - self.value(i, u) - self.value(u, j)

    def max_increment_defect(self, norm=None) -> float:
        """Max |delta3| over all node triples; 0 (to roundoff) iff increment."""
        norm = norm or _default_norm
        worst = 0.0
        for u in range(1, self.N):
            for i in range(u):
                for j in range(u + 1, self.N + 1):
                    worst = max(worst, norm(self.delta3(i, u, j)))
        return worst


def _default_norm(v) -> float:
    return float(np.max(np.abs(v)))


def delta2(path: np.ndarray) -> TwoIndexMap:
    """Increment map of a node-indexed path."""
    return TwoIndexMap.from_path(path)


def delta3(value: Callable[[int, int], np.ndarray], i: int, u: int, j: int):
    """Second-order defect of a two-index map at the triple (i, u, j)."""
    return value(i, j) - value(i, u) - value(u, j)


def additive_prefix(level1: np.ndarray) -> np.ndarray:
    """Prefix array P with P[0] = 0 and P[j] - P[i] = sum of generators i..j-1."""
    level1 = np.asarray(level1, dtype=float)
    out = np.zeros((len(level1) + 1,) + level1.shape[1:])
    np.cumsum(level1, axis=0, out=out[1:])
    return out


def chen_prefixes(level1: np.ndarray, level2: np.ndarray, cross=matrix_cross):
    """Base-point prefixes (P, Q) with P[i] = G_{t_0,t_i}, Q[i] = GG_{t_0,t_i}.

    Arbitrary pairs then follow from
        G_{s,t}  = P[t] - P[s]
        GG_{s,t} = Q[t] - Q[s] - cross(P[s], P[t] - P[s]).
    """
    P = additive_prefix(level1)
    Q = np.zeros((len(level2) + 1,) + np.asarray(level2).shape[1:])
    for i in range(len(level2)):
        Q[i + 1] = Q[i] + level2[i] + cross(P[i], level1[i])
    return P, Q


def chen_pair(P: np.ndarray, Q: np.ndarray, i: int, j: int, cross=matrix_cross):
    """(G_{t_i,t_j}, GG_{t_i,t_j}) from base-point prefixes."""
    G = P[j] - P[i]
    return G, Q[j] - Q[i] - cross(P[i], G)


def chen_reconstruct(level1, level2, i: int, j: int, cross=matrix_cross):
    """Expand per-interval generators to the pair (G_{t_i,t_j}, GG_{t_i,t_j})
    by left-to-right Chen composition."""
    if i > j:
        raise ValueError(f"need i <= j, got ({i}, {j})")
    level1 = np.asarray(level1, dtype=float)
    level2 = np.asarray(level2, dtype=float)
    G = np.zeros_like(level1[0])
    GG = np.zeros_like(level2[0])
    for m in range(i, j):
        GG = GG + level2[m] + cross(G, level1[m])
        G = G + level1[m]
    return G, GG


# ---------------------------------------------------------------------------
# p-variation
# ---------------------------------------------------------------------------


def _pair_norm_callable(source, norm=None):
    if isinstance(source, TwoIndexMap):
        nrm = norm or _default_norm
        return lambda i, j: nrm(source.value(i, j))
    if isinstance(source, np.ndarray) and source.ndim == 2:
        return lambda i, j: float(source[i, j])
    if callable(source):
        return source
    raise TypeError("expected a TwoIndexMap, a dense (N+1, N+1) array, or a callable")


def p_variation_powersum(source, p: float, interval=None, N=None, norm=None) -> float:
    """sup over grid-node partitions of sum ||G_{t_i,t_j}||^p, by the O(N^2)
    dynamic programme V[j] = max_{i<j} (V[i] + ||G_{t_i,t_j}||^p)."""
    if p < 1:
        raise ValueError("p must be >= 1")
    if N is None:
        if isinstance(source, TwoIndexMap):
            N = source.N
        elif isinstance(source, np.ndarray) and source.ndim == 2:
            N = source.shape[0] - 1
        else:
            raise ValueError("N is required when passing a bare callable")
    a, b = interval if interval is not None else (0, N)
    if a > b:
        raise ValueError(f"empty interval ({a}, {b})")
    if a == b:
        return 0.0
    dist = _pair_norm_callable(source, norm)
    idx = range(a, b + 1)
    V = [0.0] * (b - a + 1)
    for jj in range(1, len(V)):
        V[jj] = max(V[ii] + dist(a + ii, a + jj) ** p for ii in range(jj))
    return V[-1]


def p_variation(source, p: float, interval=None, N=None, norm=None) -> float:
    """p-variation seminorm over [t_a, t_b] (default the whole grid)."""
    return p_variation_powersum(source, p, interval, N, norm) ** (1.0 / p)


def p_variation_brute(source, p: float, N=None, norm=None) -> float:
    """Reference value by exhaustive enumeration of all 2^(N-1) partitions.

    Partition sums are accumulated left to right, matching the DP's
    association order, so agreement with `p_variation` is exact.
    """
    if N is None:
        N = source.N if isinstance(source, TwoIndexMap) else source.shape[0] - 1
    if N > 20:
        raise ValueError("brute force is exponential; use N <= 20")
    dist = _pair_norm_callable(source, norm)
    best = 0.0
    for mask in range(2 ** max(N - 1, 0)):
        nodes = [0] + [m for m in range(1, N) if (mask >> (m - 1)) & 1] + [N]
        total = 0.0
        for a, b in zip(nodes[:-1], nodes[1:]):
            total = total + dist(a, b) ** p
        best = max(best, total)
    return best ** (1.0 / p)


class Control:
    """Superadditive two-index bookkeeping function omega(i, j) on node pairs."""

    def __init__(self, omega: Callable[[int, int], float], N: int):
        self.N = N
        self._omega = omega
        self._cache: dict[tuple[int, int], float] = {}

    def __call__(self, i: int, j: int) -> float:
        if i > j:
            raise ValueError(f"need i <= j, got ({i}, {j})")
        key = (i, j)
        if key not in self._cache:
            self._cache[key] = float(self._omega(i, j))
        return self._cache[key]

    def superadditivity_defect(self, max_triples: int | None = None) -> float:
        """max over node triples of omega(i,u) + omega(u,j) - omega(i,j);
        nonpositive (up to roundoff) for a genuine control."""
        worst = -np.inf
        count = 0
        for u in range(1, self.N):
            for i in range(u):
                for j in range(u + 1, self.N + 1):
                    worst = max(worst, self(i, u) + self(u, j) - self(i, j))
                    count += 1
                    if max_triples and count >= max_triples:
                        return worst
        return worst

    def __add__(self, other: "Control") -> "Control":
        if other.N != self.N:
            raise ValueError("controls live on different grids")
        return Control(lambda i, j: self(i, j) + other(i, j), self.N)


def control_from_pvar(source, p: float, N=None, norm=None) -> Control:
    """omega(i, j) = ||G||^p in p-variation over [t_i, t_j]; superadditive by
    construction since partitions of adjacent intervals concatenate."""
    if N is None:
        N = source.N if isinstance(source, TwoIndexMap) else source.shape[0] - 1
    return Control(lambda i, j: p_variation_powersum(source, p, (i, j), N, norm), N)


# ---------------------------------------------------------------------------
# Sewing
# ---------------------------------------------------------------------------


@dataclass
class SewResult:
    """Compensated Riemann sum of a germ and its certified remainder."""

    timegrid: TimeGrid
    path: np.ndarray  # I_{t_j}, shape (N+1, ...)
    germ: Callable[[int, int], np.ndarray]

    def remainder(self, i: int, j: int) -> np.ndarray:
        """I^nat_{s,t} = (I_t - I_s) - H_{s,t}; vanishes iff the germ is
        already an increment."""
        return (self.path[j] - self.path[i]) - self.germ(i, j)

    def window_scan(self, norm=None, lengths=None, max_windows_per_scale: int = 256):
        """(length, max ||remainder||) per dyadic window length, windows laid
        edge to edge."""
        norm = norm or _default_norm
        N = self.timegrid.N
        if lengths is None:
            lengths = [2**m for m in range(0, max(int(np.log2(N)), 1)) if 2**m <= N // 2]
        out = []
        for L in lengths:
            starts = range(0, N - L + 1, L)
            if len(starts) > max_windows_per_scale:
                starts = list(starts)[:max_windows_per_scale]
            out.append((L, max(norm(self.remainder(s, s + L)) for s in starts)))
        return out

    def remainder_ratio(self, omega: Control, zeta: float, norm=None, lengths=None) -> float:
        """max over dyadic windows of ||I^nat_{s,t}|| / omega(s,t)^zeta, the
        empirical constant of the sewing bound."""
        norm = norm or _default_norm
        N = self.timegrid.N
        if lengths is None:
            lengths = [2**m for m in range(0, max(int(np.log2(N)), 1)) if 2**m <= N // 2]
        worst = 0.0
        for L in lengths:
            for s in range(0, N - L + 1, L):
                w = omega(s, s + L)
                if w > 0:
                    worst = max(worst, norm(self.remainder(s, s + L)) / w**zeta)
        return worst


def sew(germ: Callable[[int, int], np.ndarray], timegrid: TimeGrid) -> SewResult:
    """Grid-level sewing: I_{t_j} = sum_{i<j} H_{t_i, t_{i+1}}, I_0 = 0.

    The increments of I are additive exactly, and the remainder
    (I_t - I_s) - H_{s,t} inherits the smallness of the germ's defect.
    """
    first = np.asarray(germ(0, 1), dtype=float)
    path = np.zeros((timegrid.N + 1,) + first.shape)
    acc = np.zeros_like(first)
    path[1] = acc = acc + first
    for i in range(1, timegrid.N):
        acc = acc + np.asarray(germ(i, i + 1), dtype=float)
        path[i + 1] = acc
    return SewResult(timegrid, path, germ)
