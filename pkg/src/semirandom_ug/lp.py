"""Label weights from the max-of-mins program over super-short edges.

    maximise   sum_{((u,i),(v,j)) in Gamma} min(x(u,i), x(v,j))
    subject to sum_i x(u,i) = 1,  x >= 0

is solved through its linearisation with one y_e <= x(u,i), y_e <= x(v,j) per edge.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .core import UGInstance


@dataclass(frozen=True, eq=False)
class LPWeights:
    x: np.ndarray      # (n, k)
    objective: float

    def __post_init__(self):
        x = np.array(self.x, dtype=np.float64)
        if x.ndim != 2:
            raise ValueError("weights must be an (n, k) array")
        if (x < 0).any():
            raise ValueError("weights must be nonnegative")
        if not np.allclose(x.sum(axis=1), 1.0, atol=1e-9):
            raise ValueError("weights of every vertex must sum to 1")
        x.setflags(write=False)
        object.__setattr__(self, "x", x)

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def k(self):
        return self.x.shape[1]


def lp_objective(x: np.ndarray, gamma_edges: np.ndarray) -> float:
    """sum over listed label-extended edges of min(x(u,i), x(v,j))."""
    if len(gamma_edges) == 0:
        return 0.0
    u, i, v, j = np.asarray(gamma_edges).T
    return float(np.minimum(x[u, i], x[v, j]).sum())


def _clean(x):
    x = np.clip(x, 0.0, None)
    s = x.sum(axis=1, keepdims=True)
    k = x.shape[1]
    bad = s[:, 0] <= 0
    x[bad] = 1.0 / k
    s[bad] = 1.0
    return x / s


def layer_weights(labeling, k) -> np.ndarray:
    x = labeling.x if hasattr(labeling, "x") else np.asarray(labeling)
    w = np.zeros((len(x), k))
    w[np.arange(len(x)), x] = 1.0
    return w


def solve_lp(gamma, inst: UGInstance) -> LPWeights:
    """Optimal weights for a super-short set (or a raw (T, 4) array of label-extended edges)."""
    edges = np.asarray(getattr(gamma, "edges", gamma), dtype=np.int64).reshape(-1, 4)
    n, k = inst.n, inst.k
    if len(edges) == 0:
        return LPWeights(np.full((n, k), 1.0 / k), 0.0)
    u, i, v, j = edges.T
    if u.max() >= n or v.max() >= n or i.max() >= k or j.max() >= k:
        raise ValueError("super-short set does not match the instance")
    T, N = len(edges), n * k
    # variables: x (N) then y (T); linprog minimises, so negate the objective
    c = np.concatenate([np.zeros(N), -np.ones(T)])
    rows = np.repeat(np.arange(2 * T), 2)
    cols = np.empty(4 * T, dtype=np.int64)
    vals = np.empty(4 * T)
    ey = N + np.arange(T)
    cols[0::4], cols[1::4] = ey, u * k + i
    cols[2::4], cols[3::4] = ey, v * k + j
    vals[0::2], vals[1::2] = 1.0, -1.0
    A_ub = sp.csr_matrix((vals, (rows, cols)), shape=(2 * T, N + T))
    A_eq = sp.csr_matrix((np.ones(N), (np.repeat(np.arange(n), k), np.arange(N))), shape=(n, N + T))
    res = linprog(c, A_ub=A_ub, b_ub=np.zeros(2 * T), A_eq=A_eq, b_eq=np.ones(n),
                  bounds=(0, None), method="highs-ds")
    if res.status != 0:
        raise RuntimeError(f"LP solve failed: {res.message}")
    x = _clean(res.x[:N].reshape(n, k))
    return LPWeights(x, lp_objective(x, edges))
