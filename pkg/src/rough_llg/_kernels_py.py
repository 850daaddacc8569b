"""NumPy implementations of the hot kernels.

Same contracts as the compiled versions in `_kernels_cy.pyx`; selected at
import time by `_kernels` when the extension is unavailable (or when
ROUGH_LLG_PURE_PYTHON=1).  Row-vectorised, so they stay usable up to a few
thousand time steps, just slower than the compiled code.
"""

from __future__ import annotations

import numpy as np


def pvar_powersum_additive(prefix: np.ndarray, p: float) -> float:
    """DP power sum for an additive two-index map embedded in Euclidean
    coordinates: ||G_{t_i,t_j}||^2 = sum_d (prefix[j,d] - prefix[i,d])^2."""
    prefix = np.ascontiguousarray(prefix, dtype=float)
    m = prefix.shape[0]
    if m < 2:
        return 0.0
    half_p = 0.5 * p
    V = np.zeros(m)
    for j in range(1, m):
        d2 = np.einsum("id,id->i", prefix[:j] - prefix[j], prefix[:j] - prefix[j])
        V[j] = np.max(V[:j] + d2**half_p)
    return float(V[-1])


def _chen_pair_rows(b: np.ndarray, B: np.ndarray, j: int) -> np.ndarray:
    """Rows i < j of the flattened second level bb_{t_i,t_j} from base-point
    prefixes b (mode values) and B (flattened second-level prefixes)."""
    q = b.shape[1]
    db = b[j][None, :] - b[:j]  # (j, q)
    outer = (b[:j, :, None] * db[:, None, :]).reshape(j, q * q)
    return B[j][None, :] - B[:j] - outer


def pvar_powersum_chen_mode(
    b1: np.ndarray,
    B1: np.ndarray,
    b2: np.ndarray,
    B2: np.ndarray,
    coord: np.ndarray,
    p: float,
) -> float:
    """DP power sum for the difference of two Chen second levels in mode
    space.  Pair values are bb1_{i,j} - bb2_{i,j} (flattened, built from
    base-point prefixes), and ||.||^2 = |coord @ value|^2 with `coord` the
    factor of the positive semidefinite spatial Gram matrix."""
    b1 = np.ascontiguousarray(b1, dtype=float)
    b2 = np.ascontiguousarray(b2, dtype=float)
    B1 = np.ascontiguousarray(B1, dtype=float)
    B2 = np.ascontiguousarray(B2, dtype=float)
    coordT = np.ascontiguousarray(coord, dtype=float).T
    m = b1.shape[0]
    if m < 2:
        return 0.0
    half_p = 0.5 * p
    V = np.zeros(m)
    for j in range(1, m):
        diff = _chen_pair_rows(b1, B1, j) - _chen_pair_rows(b2, B2, j)
        y = diff @ coordT
        d2 = np.einsum("ik,ik->i", y, y)
        V[j] = np.max(V[:j] + d2**half_p)
    return float(V[-1])


def chen_defect_scan_mode(b: np.ndarray, B: np.ndarray) -> float:
    """Max over all node triples s < u < t of the componentwise Chen defect

        | bb_{s,t} - bb_{s,u} - bb_{u,t} - db_{s,u} (x) db_{u,t} |

    for a mode-level second level given by base-point prefixes."""
    b = np.ascontiguousarray(b, dtype=float)
    B = np.ascontiguousarray(B, dtype=float)
    m, q = b.shape
    worst = 0.0
    for u in range(1, m - 1):
        s = np.arange(u)
        t = np.arange(u + 1, m)
        nt = len(t)
        bb_su = _chen_pair_rows(b, B, u)  # (u, q^2)
        db_su = b[u][None, :] - b[s]  # (u, q)
        db_ut = b[t] - b[u][None, :]  # (nt, q)
        db_st = b[t][None, :, :] - b[s][:, None, :]  # (u, nt, q)
        outer_st = (b[s][:, None, :, None] * db_st[:, :, None, :]).reshape(u, nt, q * q)
        bb_st = B[t][None, :, :] - B[s][:, None, :] - outer_st
        outer_ut = (np.broadcast_to(b[u], (nt, q))[:, :, None] * db_ut[:, None, :]).reshape(
            nt, q * q
        )
        bb_ut = B[t] - B[u][None, :] - outer_ut
        cross = (db_su[:, None, :, None] * db_ut[None, :, None, :]).reshape(u, nt, q * q)
        defect = bb_st - bb_su[:, None, :] - bb_ut[None, :, :] - cross
        worst = max(worst, float(np.max(np.abs(defect))))
    return worst
