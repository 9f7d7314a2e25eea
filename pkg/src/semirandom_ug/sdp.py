"""First-order solvers for the standard, crude and shift-invariant vector programs.

Every flavor minimises the average edge cost (1/2m) sum_e sum_i ||u_i - v_pi(i)||^2
over an explicit low-rank factorisation W (one d-vector per vertex-label pair).

The per-vertex equality constraints are kept exactly by optimising on a manifold:

* crude / shift-invariant: each block U_u is a k x d matrix with orthonormal rows;
* standard: each block has unit Frobenius norm, so sum_i ||u_i||^2 = 1 exactly.

The remaining families (orthogonality inside standard blocks, nonnegativity,
edge-local triangle constraints for the crude program, sampled triangle
inequalities for the standard program) go through an augmented Lagrangian; the
inequality families grow by lazy separation between rounds.
Inner iterations are Riemannian gradient steps with Armijo backtracking, so the
merit function of a round never increases across accepted iterates.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .core import UGInstance, VectorSolution, build_label_extended, edge_lengths

log = logging.getLogger(__name__)

FULL_GRAM_LIMIT = 4000


@dataclass(frozen=True)
class SdpConfig:
    flavor: str = "standard"
    dim: int | None = None
    tol_feas: float = 1e-5
    tol_opt: float = 1e-9
    tol_grad: float = 1e-7
    max_iters: int = 4000
    # None picks the flavor default: lazy for crude, off otherwise
    triangle: str | None = None
    # None picks the flavor default: lazy for standard, off otherwise
    nonneg: str | None = None
    batch_size: int = 20000
    rho: float = 100.0
    rho_growth: float = 5.0
    rho_max: float = 1e7
    max_rounds: int = 60
    round_iters: int = 200
    stall_window: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.flavor not in ("standard", "crude", "shift"):
            raise ValueError("flavor must be 'standard', 'crude' or 'shift'")
        if self.dim is not None and self.dim < 2:
            raise ValueError("embedding dimension must be >= 2")
        if min(self.tol_feas, self.tol_opt, self.tol_grad) <= 0:
            raise ValueError("tolerances must be positive")
        if self.triangle not in (None, "off", "lazy"):
            raise ValueError("triangle must be 'off' or 'lazy'")
        if self.nonneg not in (None, "off", "lazy"):
            raise ValueError("nonneg must be 'off' or 'lazy'")

    @property
    def triangle_mode(self) -> str:
        if self.triangle is not None:
            return self.triangle
        return "lazy" if self.flavor == "crude" else "off"

    @property
    def nonneg_mode(self) -> str:
        if self.flavor == "crude":
            return "off"
        if self.nonneg is not None:
            return self.nonneg
        return "lazy" if self.flavor == "standard" else "off"


def default_dim(n, k) -> int:
    d = math.ceil(math.sqrt(2 * n * k))
    return max(2, min(max(d, k), n * k))


@dataclass
class SdpResult:
    solution: VectorSolution
    objective: float
    status: str
    iterations: int
    residuals: dict
    # merit values of accepted iterates, one list per augmented-Lagrangian round
    history: list = field(default_factory=list)
    rounds: int = 0

    @property
    def stalled(self) -> bool:
        return self.status != "converged"

    def __iter__(self):
        yield self.solution
        yield self.objective


# --- penalised inequality families ----------------------------------------

class _Family:
    """Constraints g_t(W) = sum_p coef[t,p] <w_rows[t,p], w_cols[t,p]> + const[t] <= 0.

    Inner products are stored once per unordered pair; g = M @ dots + const with a
    sparse constraint-by-pair matrix M.
    """

    def __init__(self, name, N):
        self.name = name
        self.N = N
        self.pair_id = {}
        self.pa = np.zeros(0, dtype=np.int64)
        self.pb = np.zeros(0, dtype=np.int64)
        self.M = sp.csr_matrix((0, 0))
        self.const = np.zeros(0)
        self.mu = np.zeros(0)
        self._keys = set()
        self._order = None
        self._indptr = None

    def __len__(self):
        return len(self.const)

    def add(self, rows, cols, coef, const, keys):
        keep = []
        for t, key in enumerate(keys):
            if key not in self._keys:
                self._keys.add(key)
                keep.append(t)
        if not keep:
            return 0
        keep = np.asarray(keep)
        rows, cols, coef = rows[keep], cols[keep], coef[keep]
        lo, hi = np.minimum(rows, cols).ravel(), np.maximum(rows, cols).ravel()
        ids = np.empty(len(lo), dtype=np.int64)
        new_a, new_b = [], []
        for q, pair in enumerate(zip(lo.tolist(), hi.tolist())):
            pid = self.pair_id.get(pair)
            if pid is None:
                pid = len(self.pair_id)
                self.pair_id[pair] = pid
                new_a.append(pair[0])
                new_b.append(pair[1])
            ids[q] = pid
        self.pa = np.concatenate([self.pa, np.asarray(new_a, dtype=np.int64)])
        self.pb = np.concatenate([self.pb, np.asarray(new_b, dtype=np.int64)])
        T, P = len(keep), len(self.pa)
        block = sp.csr_matrix((coef.ravel(), (np.repeat(np.arange(T), rows.shape[1]), ids)), shape=(T, P))
        old = self.M
        old.resize((old.shape[0], P))
        self.M = sp.vstack([old, block]).tocsr()
        self.const = np.concatenate([self.const, const[keep]])
        self.mu = np.concatenate([self.mu, np.zeros(T)])
        self._order = np.lexsort((self.pb, self.pa))
        self._indptr = np.searchsorted(self.pa[self._order], np.arange(self.N + 1))
        self._indices = self.pb[self._order]
        return T

    def values(self, W):
        if not len(self):
            return np.zeros(0)
        dots = np.einsum("pd,pd->p", W[self.pa], W[self.pb])
        return self.M @ dots + self.const

    def penalty(self, W, rho):
        g = self.values(W)
        lam = np.maximum(0.0, self.mu + rho * g)
        return float(((lam**2 - self.mu**2) / (2 * rho)).sum()), lam

    def grad(self, W, lam):
        """Gradient of sum_t phi(g_t) given the clipped multipliers lam."""
        if not len(self):
            return np.zeros_like(W)
        w = self.M.T @ lam
        S = sp.csr_matrix((w[self._order], self._indices, self._indptr), shape=(self.N, self.N))
        return S @ W + S.T @ W

    def update_multipliers(self, W, rho):
        self.mu = np.maximum(0.0, self.mu + rho * self.values(W))


# --- separation oracles ---------------------------------------------------

def _edge_blocks(W3, eu, ev, chunk=2048):
    for s in range(0, len(eu), chunk):
        yield s, np.einsum("ekd,eld->ekl", W3[eu[s:s + chunk]], W3[ev[s:s + chunk]])


def separate_crude_triangles(W3, inst, tol, limit):
    """Violated (1/2)||u_i - v_j||^2 + (1/2)||u_i' - v_j||^2 >= 1 in both orientations.

    With unit vectors the constraint reads <u_i, v_j> + <u_i', v_j> <= 1.
    Returns (a, b1, b2, violation) with a the shared vector's flat index.
    """
    k = inst.k
    out_a, out_b1, out_b2, out_v = [], [], [], []
    iu, iu2 = np.triu_indices(k, 1)
    for s, C in _edge_blocks(W3, inst.eu, inst.ev):
        e_idx = np.arange(s, s + len(C))
        for side in (0, 1):
            # side 0: two labels on u, one on v (columns of C); side 1: the transpose
            M = C if side == 0 else C.transpose(0, 2, 1)
            srt = -np.sort(-M, axis=1)
            cand_e, cand_j = np.nonzero(srt[:, 0, :] + srt[:, 1, :] > 1.0 + tol)
            if not len(cand_e):
                continue
            cols = M[cand_e, :, cand_j]  # (c, k)
            sums = cols[:, iu] + cols[:, iu2]
            ci, pi = np.nonzero(sums > 1.0 + tol)
            e = e_idx[cand_e[ci]]
            j = cand_j[ci]
            i1, i2 = iu[pi], iu2[pi]
            single = inst.ev[e] if side == 0 else inst.eu[e]
            pair = inst.eu[e] if side == 0 else inst.ev[e]
            out_a.append(single * k + j)
            out_b1.append(pair * k + i1)
            out_b2.append(pair * k + i2)
            out_v.append(sums[ci, pi] - 1.0)
    if not out_a:
        z = np.zeros(0, dtype=np.int64)
        return z, z, z, np.zeros(0)
    a, b1, b2, v = (np.concatenate(x) for x in (out_a, out_b1, out_b2, out_v))
    order = np.argsort(-v, kind="stable")[:limit]
    return a[order], b1[order], b2[order], v[order]


def _negative_pairs_full(W, k, tol, limit):
    N = W.shape[0]
    rows, cols, vals = [], [], []
    for s in range(0, N, 512):
        G = W[s:s + 512] @ W.T
        a, b = np.nonzero(G < -tol)
        a = a + s
        keep = (a // k != b // k) & (a < b)
        rows.append(a[keep])
        cols.append(b[keep])
        vals.append(G[a[keep] - s, b[keep]])
    a, b, v = (np.concatenate(x) for x in (rows, cols, vals))
    order = np.argsort(v, kind="stable")[:limit]
    return a[order], b[order], v[order], True


def _negative_pairs_sampled(W3, inst, tol, limit, rng, batch):
    n, k, _ = W3.shape
    vu = np.concatenate([inst.eu, rng.integers(n, size=batch // max(1, k * k) + 1)])
    vv = np.concatenate([inst.ev, rng.integers(n, size=len(vu) - inst.m)])
    keep = vu != vv
    vu, vv = np.minimum(vu[keep], vv[keep]), np.maximum(vu[keep], vv[keep])
    rows, cols, vals = [], [], []
    for s, C in _edge_blocks(W3, vu, vv):
        e, i, j = np.nonzero(C < -tol)
        rows.append(vu[s + e] * k + i)
        cols.append(vv[s + e] * k + j)
        vals.append(C[e, i, j])
    a, b, v = (np.concatenate(x) if x else np.zeros(0) for x in (rows, cols, vals))
    order = np.argsort(v, kind="stable")[:limit]
    return a[order].astype(np.int64), b[order].astype(np.int64), v[order], False


def negative_pairs(W, inst, tol, limit=10**6, rng=None, batch=20000):
    """Pairs (a, b) in different blocks with <w_a, w_b> < -tol; exhaustive when small."""
    n, k = inst.n, inst.k
    if n * k <= FULL_GRAM_LIMIT:
        return _negative_pairs_full(W, k, tol, limit)
    rng = rng or np.random.default_rng(0)
    return _negative_pairs_sampled(W.reshape(n, k, -1), inst, tol, limit, rng, batch)


def _sample_triangles(W, n, k, rng, batch, tol):
    """Sampled ||w_a - w_b||^2 <= ||w_a - w_c||^2 + ||w_c - w_b||^2 violations."""
    verts = np.stack([rng.integers(n, size=batch) for _ in range(3)], axis=1)
    ok = (verts[:, 0] != verts[:, 1]) & (verts[:, 1] != verts[:, 2]) & (verts[:, 0] != verts[:, 2])
    verts = verts[ok]
    labels = rng.integers(k, size=verts.shape)
    a, b, c = (verts[:, t] * k + labels[:, t] for t in range(3))
    g = (-2 * np.einsum("td,td->t", W[a], W[b]) + 2 * np.einsum("td,td->t", W[a], W[c])
         + 2 * np.einsum("td,td->t", W[c], W[b]) - 2 * np.einsum("td,td->t", W[c], W[c]))
    bad = g > tol
    return a[bad], b[bad], c[bad], g[bad]


# --- manifold state -----------------------------------------------------------

def _qf_rows(X):
    """Orthonormalise the k rows of each block of X (n, k, d) via QR."""
    Q, R = np.linalg.qr(np.swapaxes(X, 1, 2))
    sgn = np.sign(np.diagonal(R, axis1=1, axis2=2))
    sgn[sgn == 0] = 1.0
    return np.swapaxes(Q * sgn[:, None, :], 1, 2)


def _proj_stiefel(F, Z):
    S = Z @ np.swapaxes(F, 1, 2)
    return Z - 0.5 * (S + np.swapaxes(S, 1, 2)) @ F


def _proj_sphere(W, Z):
    return Z - np.einsum("ukd,ukd->u", Z, W)[:, None, None] * W


class _Point:
    """A point W (n, k, d) on a product of per-block manifolds.

    ``stiefel``: orthonormal rows per block.  ``sphere``: unit Frobenius norm per block.
    """

    def __init__(self, W3, kind):
        self.W3 = W3
        self.kind = kind

    def project(self, Z):
        if self.kind == "stiefel":
            return _proj_stiefel(self.W3, Z)
        return _proj_sphere(self.W3, Z)

    def retract(self, direction, t):
        X = self.W3 - t * direction
        if self.kind == "stiefel":
            return _Point(_qf_rows(X), self.kind)
        return _Point(X / np.linalg.norm(X, axis=(1, 2))[:, None, None], self.kind)


def _dot(a, b):
    return float(np.vdot(a, b))


def _lbfgs_direction(point, rg, mem):
    """Two-loop recursion; stored pairs live in the ambient space and are re-projected."""
    if not mem:
        return rg
    q = rg
    alphas = []
    for s, y, r in reversed(mem):
        a = r * _dot(s, q)
        alphas.append(a)
        q = q - a * y
    s, y, _ = mem[-1]
    q = q * (_dot(s, y) / _dot(y, y))
    for (s, y, r), a in zip(mem, reversed(alphas)):
        q = q + (a - r * _dot(y, q)) * s
    return point.project(q)


def _init_point(n, k, d, flavor, rng):
    F = _qf_rows(rng.standard_normal((n, k, d)))
    if flavor != "standard":
        return _Point(F, "stiefel")
    lam = np.sqrt(rng.dirichlet(np.ones(k), size=n))
    return _Point(lam[:, :, None] * F, "sphere")


# --- the solver ------------------------------------------------------------

class _BlockOrthogonality:
    """Equality constraints <u_i, u_j> = 0 (i != j) inside every block."""

    name = "orthogonality"

    def __init__(self, n, k):
        self.mu = np.zeros((n, k, k))
        self.off = 1.0 - np.eye(k)

    def values(self, W3):
        return np.einsum("uid,ujd->uij", W3, W3) * self.off

    def penalty(self, W3, rho):
        g = self.values(W3)
        # every pair appears twice in the symmetric matrix
        return 0.5 * float((self.mu * g + 0.5 * rho * g * g).sum()), self.mu + rho * g

    def grad(self, W3, lam):
        return lam @ W3

    def update_multipliers(self, W3, rho):
        self.mu = self.mu + rho * self.values(W3)

    def max_violation(self, W3):
        return float(np.abs(self.values(W3)).max())


class _Problem:
    def __init__(self, inst: UGInstance, cfg: SdpConfig, d: int):
        self.inst = inst
        self.cfg = cfg
        self.n, self.k, self.d = inst.n, inst.k, d
        self.m = inst.m
        self.scale = 1.0 / max(self.m, 1)
        self.A = build_label_extended(inst).adjacency()
        self.deg = inst.degrees().astype(float)
        self.orth = _BlockOrthogonality(self.n, self.k) if cfg.flavor == "standard" else None
        self.families = []
        if cfg.nonneg_mode == "lazy":
            self.families.append(_Family("nonnegativity", self.n * self.k))
        if cfg.triangle_mode == "lazy":
            self.families.append(_Family("triangle", self.n * self.k))

    @property
    def has_constraints(self):
        return bool(self.families) or self.orth is not None

    def objective(self, W, AW):
        """Average edge cost (1/2m) sum_e sum_i ||u_i - v_pi(i)||^2 from the quadratic form."""
        if self.m == 0:
            return 0.0
        W3 = W.reshape(self.n, self.k, self.d)
        block = np.einsum("ukd,ukd->u", W3, W3)
        return self.scale * 0.5 * (float(self.deg @ block) - float(np.vdot(W, AW)))

    def merit(self, point, rho):
        W3 = point.W3
        W = W3.reshape(-1, self.d)
        AW = self.A @ W
        val = self.objective(W, AW)
        lams = []
        for fam in self.families:
            p, lam = fam.penalty(W, rho)
            val += self.scale * p
            lams.append(lam)
        olam = None
        if self.orth is not None:
            p, olam = self.orth.penalty(W3, rho)
            val += self.scale * p
        return val, (W, AW, lams, olam)

    def grad(self, point, cache):
        W, AW, lams, olam = cache
        G = -self.scale * AW
        for fam, lam in zip(self.families, lams):
            G = G + self.scale * fam.grad(W, lam)
        G = G.reshape(self.n, self.k, self.d)
        if olam is not None:
            G = G + self.scale * self.orth.grad(point.W3, olam)
        return point.project(G)

    def separate(self, point, rng):
        cfg = self.cfg
        W3 = point.W3
        W = W3.reshape(-1, self.d)
        tol = 0.1 * cfg.tol_feas
        added = 0
        for fam in self.families:
            if fam.name == "nonnegativity":
                a, b, _, _ = negative_pairs(W, self.inst, tol, cfg.batch_size, rng, cfg.batch_size)
                keys = list(zip(a.tolist(), b.tolist()))
                added += fam.add(a[:, None], b[:, None], -np.ones((len(a), 1)), np.zeros(len(a)), keys)
            elif cfg.flavor == "crude":
                a, b1, b2, _ = separate_crude_triangles(W3, self.inst, tol, cfg.batch_size)
                lo, hi = np.minimum(b1, b2), np.maximum(b1, b2)
                keys = list(zip(a.tolist(), lo.tolist(), hi.tolist()))
                rows = np.stack([a, a], axis=1)
                cols = np.stack([b1, b2], axis=1)
                added += fam.add(rows, cols, np.ones((len(a), 2)), -np.ones(len(a)), keys)
            else:
                a, b, c, _ = _sample_triangles(W, self.n, self.k, rng, cfg.batch_size, tol)
                keys = list(zip(a.tolist(), b.tolist(), c.tolist()))
                rows = np.stack([a, a, c, c], axis=1)
                cols = np.stack([b, c, b, c], axis=1)
                coef = np.tile([-1.0, 1.0, 1.0, -1.0], (len(a), 1))
                added += fam.add(rows, cols, coef, np.zeros(len(a)), keys)
        return added

    def update_multipliers(self, point, rho):
        W = point.W3.reshape(-1, self.d)
        for fam in self.families:
            fam.update_multipliers(W, rho)
        if self.orth is not None:
            self.orth.update_multipliers(point.W3, rho)

    def max_violation(self, point):
        W = point.W3.reshape(-1, self.d)
        worst = 0.0
        for fam in self.families:
            if len(fam):
                worst = max(worst, float(fam.values(W).max()))
        if self.orth is not None:
            worst = max(worst, self.orth.max_violation(point.W3))
        return worst


def _inner(problem, point, rho, budget, history, memory=10):
    cfg = problem.cfg
    val, cache = problem.merit(point, rho)
    rg = problem.grad(point, cache)
    vals = [val]
    history.append(val)
    mem = []
    status, it = "max-iters", 0
    while it < budget:
        if math.sqrt(_dot(rg, rg)) <= cfg.tol_grad:
            status = "converged"
            break
        p = _lbfgs_direction(point, rg, mem)
        slope = _dot(rg, p)
        if slope <= 1e-12 * math.sqrt(_dot(rg, rg) * _dot(p, p)):
            mem.clear()
            p, slope = rg, _dot(rg, rg)
        t = 1.0 if mem else 0.1 / math.sqrt(slope)
        accepted = False
        for _ in range(60):
            cand = point.retract(p, t)
            cval, ccache = problem.merit(cand, rho)
            if cval <= val - 1e-4 * t * slope:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            if mem:
                mem.clear()
                continue
            status = "stalled"
            break
        it += 1
        new_rg = problem.grad(cand, ccache)
        s = cand.W3 - point.W3
        y = new_rg - rg
        sy = _dot(s, y)
        if sy > 1e-12 * math.sqrt(_dot(s, s) * _dot(y, y)):
            mem.append((s, y, 1.0 / sy))
            if len(mem) > memory:
                mem.pop(0)
        point, val, rg = cand, cval, new_rg
        vals.append(val)
        history.append(val)
        w = cfg.stall_window
        if len(vals) > w and vals[-w - 1] - vals[-1] <= cfg.tol_opt * max(1.0, abs(vals[-1])):
            status = "stalled"
            break
    return point, status, it


def _solve(inst: UGInstance, cfg: SdpConfig, flavor_out: str) -> SdpResult:
    n, k = inst.n, inst.k
    d = cfg.dim or default_dim(n, k)
    d = max(d, k)
    rng = np.random.default_rng(cfg.seed)
    problem = _Problem(inst, cfg, d)
    point = _init_point(n, k, d, cfg.flavor, rng)
    history = []
    rho = cfg.rho
    total_it, rounds = 0, 0
    status = "max-iters"
    prev_viol = math.inf
    if inst.m == 0:
        status = "converged"
    while inst.m and total_it < cfg.max_iters:
        rounds += 1
        budget = cfg.max_iters - total_it
        if problem.has_constraints:
            budget = min(budget, cfg.round_iters)
        history.append([])
        point, status, it = _inner(problem, point, rho, budget, history[-1])
        total_it += it
        if not problem.has_constraints:
            break
        added = problem.separate(point, rng)
        viol = problem.max_violation(point)
        problem.update_multipliers(point, rho)
        log.debug("round %d: %s after %d its, rho %.3g, active %s, added %d, violation %.3g",
                  rounds, status, it, rho, [len(f) for f in problem.families], added, viol)
        if added == 0 and viol <= cfg.tol_feas and status != "max-iters":
            break
        if rounds >= cfg.max_rounds:
            status = "stalled"
            break
        if viol > 0.25 * prev_viol:
            rho = min(rho * cfg.rho_growth, cfg.rho_max)
        prev_viol = viol
    feasible = not (problem.has_constraints and inst.m and problem.max_violation(point) > cfg.tol_feas)
    if not feasible:
        status = "max-iters" if total_it >= cfg.max_iters else "stalled"
    sol = VectorSolution(point.W3, flavor_out)
    res = residual_report(sol, inst, cfg, rng)
    obj = objective(sol, inst)
    # edge costs are sums of squares, so a feasible point with cost near zero is optimal
    if feasible and status != "converged" and inst.m and edge_lengths(sol, inst).mean() <= cfg.tol_opt:
        status = "converged"
    if status != "converged":
        log.info("%s solve ended with status %s after %d iterations", cfg.flavor, status, total_it)
    return SdpResult(sol, obj, status, total_it, res, history, rounds)


# --- public operations -------------------------------------------------------

def objective(sol: VectorSolution, inst: UGInstance) -> float:
    """Objective in the flavor's own units.

    standard:          (1/2|E|) sum_e sum_i ||u_i - v_pi(i)||^2
    crude:             sum_e sum_i ||u_i - v_pi(i)||^2 / 2
    shift-invariant:   (1/k) (1/2|E|) sum_e sum_i ||u_i - v_pi(i)||^2
    """
    if inst.m == 0:
        return 0.0
    total = float(edge_lengths(sol, inst).sum())
    if sol.flavor == "crude":
        return total
    if sol.flavor == "shift-invariant":
        return total / (inst.k * inst.m)
    return total / inst.m


def solve_standard(inst: UGInstance, cfg: SdpConfig | None = None) -> SdpResult:
    cfg = replace(cfg or SdpConfig(), flavor="standard")
    return _solve(inst, cfg, "standard")


def solve_crude(inst: UGInstance, cfg: SdpConfig | None = None) -> SdpResult:
    cfg = replace(cfg or SdpConfig(flavor="crude"), flavor="crude")
    return _solve(inst, cfg, "crude")


def symmetrize(sol: VectorSolution, inst: UGInstance) -> VectorSolution:
    """u'_i = (1/sqrt k) (u_i, u_{i+1}, ..., u_{i+k-1}) stacked into dimension k*d."""
    if not inst.is_linear:
        raise ValueError("symmetrization needs a linear instance")
    sol.check_for(inst)
    k = inst.k
    idx = (np.arange(k)[:, None] + np.arange(k)[None, :]) % k  # idx[i, j] = i + j
    out = sol.vectors[:, idx, :].reshape(sol.n, k, k * sol.d) / math.sqrt(k)
    return VectorSolution(out, "shift-invariant")


def solve_shift_invariant(inst: UGInstance, cfg: SdpConfig | None = None) -> SdpResult:
    if not inst.is_linear:
        raise ValueError("the shift-invariant program needs a linear instance")
    cfg = replace(cfg or SdpConfig(flavor="shift"), flavor="shift")
    res = _solve(inst, cfg, "shift-invariant")
    sym = symmetrize(res.solution, inst)
    residuals = residual_report(sym, inst, cfg, np.random.default_rng(cfg.seed))
    residuals["shift_invariance"] = shift_invariance_residual(sym, inst)
    return SdpResult(sym, objective(sym, inst), res.status, res.iterations, residuals, res.history, res.rounds)


def shift_invariance_residual(sol: VectorSolution, inst: UGInstance) -> float:
    """max over edges, labels and shifts of | ||u_i - v_j|| - ||u_{i+s} - v_{j+s}|| |."""
    if inst.m == 0:
        return 0.0
    k = inst.k
    U = sol.vectors[inst.eu]
    V = sol.vectors[inst.ev]
    D = np.sqrt(np.maximum(0.0, np.einsum("eid,eid->ei", U, U)[:, :, None]
                           + np.einsum("ejd,ejd->ej", V, V)[:, None, :]
                           - 2 * np.einsum("eid,ejd->eij", U, V)))
    worst = 0.0
    for s in range(1, k):
        rolled = np.roll(np.roll(D, -s, axis=1), -s, axis=2)
        worst = max(worst, float(np.abs(rolled - D).max()))
    return worst


def residual_report(sol: VectorSolution, inst: UGInstance, cfg: SdpConfig, rng=None) -> dict:
    """Worst violation per constraint family at the returned point."""
    rng = rng or np.random.default_rng(0)
    V = sol.vectors
    sq = sol.sq_norms()
    rep = {}
    if sol.flavor == "standard":
        rep["normalization"] = float(np.abs(sq.sum(axis=1) - 1.0).max())
    else:
        rep["unit_norm"] = float(np.abs(sq - 1.0).max())
    gram = np.einsum("uid,ujd->uij", V, V)
    off = gram - np.einsum("uii->ui", gram)[:, :, None] * np.eye(sol.k)[None]
    rep["orthogonality"] = float(np.abs(off).max())
    W = sol.flat
    if sol.flavor == "standard" or cfg.nonneg_mode == "lazy":
        a, b, v, exhaustive = negative_pairs(W, inst, 0.0, 1, rng, cfg.batch_size)
        rep["nonnegativity"] = float(-v.min()) if len(v) else 0.0
        rep["nonnegativity_exhaustive"] = bool(exhaustive)
    if sol.flavor == "crude":
        _, _, _, viol = separate_crude_triangles(V, inst, 0.0, 1)
        rep["edge_triangle"] = float(viol.max()) if len(viol) else 0.0
    elif cfg.triangle_mode == "lazy":
        _, _, _, g = _sample_triangles(W, sol.n, sol.k, rng, cfg.batch_size, 0.0)
        rep["triangle_sampled"] = float(g.max()) if len(g) else 0.0
    return rep


# --- geometric measurements ---------------------------------------------------

@dataclass(frozen=True)
class SuperShortSet:
    eta: float
    cstar: float
    threshold: float
    edges: np.ndarray       # rows (u, i, v, j)
    sq_lengths: np.ndarray

    def __len__(self):
        return len(self.edges)

    def in_layer(self, labeling) -> np.ndarray:
        x = labeling.x if hasattr(labeling, "x") else np.asarray(labeling)
        u, i, v, j = self.edges.T if len(self.edges) else (np.zeros(0, dtype=np.int64),) * 4
        return (x[u] == i) & (x[v] == j)

    def reference_layer(self, labeling) -> np.ndarray:
        """Rows of the set lying in the given layer (the planted layer when truth is known)."""
        return self.edges[self.in_layer(labeling)]


def super_short_threshold(eta, k, cstar=1.0) -> float:
    if k < 2:
        raise ValueError("super-short threshold needs k >= 2 (log k vanishes at k = 1)")
    return cstar * eta * eta / math.log(k)


def super_short_edges(sol: VectorSolution, inst: UGInstance, eta: float, cstar: float = 1.0) -> SuperShortSet:
    """Label-extended edges ((u,i),(v,pi(i))) with ||u_i - v_j||^2 <= c* eta^2 / ln k."""
    if sol.flavor == "standard":
        raise ValueError("super-short edges are defined for unit-vector (crude) solutions")
    sol.check_for(inst)
    thr = super_short_threshold(eta, inst.k, cstar)
    le = build_label_extended(inst).edges
    if not len(le):
        return SuperShortSet(eta, cstar, thr, le, np.zeros(0))
    u, i, v, j = le.T
    diff = sol.vectors[u, i] - sol.vectors[v, j]
    sq = np.einsum("td,td->t", diff, diff)
    keep = sq <= thr
    return SuperShortSet(eta, cstar, thr, le[keep], sq[keep])


@dataclass(frozen=True)
class EdgePartition:
    eta: float
    long: np.ndarray       # boolean mask over edges
    lengths: np.ndarray    # the quantity compared against eta

    @property
    def short(self):
        return ~self.long

    @property
    def num_long(self):
        return int(self.long.sum())


def classify_long_edges(sol: VectorSolution, inst: UGInstance, eta: float) -> EdgePartition:
    """An edge is eta-long when its length exceeds eta.

    For shift-invariant solutions of linear instances the length is taken per label,
    max_i (1/2)||u_i - v_{i+s}||^2, which is the same for every i after symmetrisation.
    """
    sol.check_for(inst)
    if sol.flavor == "shift-invariant" and inst.is_linear:
        U = sol.vectors[inst.eu]
        V = sol.vectors[inst.ev[:, None], inst.perms]
        per_label = 0.5 * np.einsum("ekd,ekd->ek", U - V, U - V)
        lengths = per_label.max(axis=1) if inst.m else np.zeros(0)
    else:
        lengths = edge_lengths(sol, inst)
    return EdgePartition(eta, lengths > eta, lengths)
