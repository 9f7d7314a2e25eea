"""Semi-random instance generators and the 2-to-2 reduction.

Model numbering:
  1  random edges, adversarial constraints  (E_eps sampled, adversary rewrites it)
  2  adversarial edges, random constraints  (adversary picks E_eps, nature rewrites it)
  3  random initial constraints             (nature picks constraints around a planted labeling)
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from math import floor

import networkx as nx
import numpy as np

from .core import CorruptionRecord, Labeling, UGInstance, is_permutation_rows

MODELS = {
    1: "random-edges-adversarial-constraints",
    2: "adversarial-edges-random-constraints",
    3: "random-initial-constraints",
}
ADVERSARIES = ("random-replacement", "shift-by-one", "planted-second-layer", "mixed-instance")
GRAPH_KINDS = ("gnm", "regular", "file")
MAX_AMPLIFIED_EDGES = 5_000_000


class GenerationError(RuntimeError):
    """An adversary produced something that is not a valid constraint."""


@dataclass(frozen=True)
class AdversaryStrategy:
    kind: str = "random-replacement"
    # mixed-instance: edge index -> corrupted permutation pi'_uv
    payload: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ADVERSARIES:
            raise ValueError(f"unknown adversary {self.kind!r}; choose from {ADVERSARIES}")


@dataclass(frozen=True)
class GenConfig:
    n: int
    k: int
    eps: float
    model: int = 1
    m: int | None = None
    deg: float | None = None
    adversary: str = "random-replacement"
    linear: bool = False
    seed: int = 0
    graph: str = "gnm"
    graph_file: str | None = None
    initial: str = "planted-random"
    fixed_size: bool = False
    edge_choice: str = "uniform"
    connected: bool = False

    def __post_init__(self):
        if not 0.0 <= self.eps <= 1.0:
            raise ValueError("eps must lie in [0, 1]")
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {sorted(MODELS)}")
        if self.k < 2:
            raise ValueError("k must be at least 2")
        if self.graph not in GRAPH_KINDS:
            raise ValueError(f"graph must be one of {GRAPH_KINDS}")
        if self.initial not in ("planted-random", "identity"):
            raise ValueError("initial must be 'planted-random' or 'identity'")
        if self.edge_choice not in ("uniform", "concentrated"):
            raise ValueError("edge_choice must be 'uniform' or 'concentrated'")
        if self.connected and self.m is not None and self.m < self.n - 1:
            raise ValueError("a connected graph needs m >= n - 1")

    def edge_count(self) -> int:
        if self.m is not None:
            return int(self.m)
        if self.deg is None:
            raise ValueError("either m or deg is required")
        return int(round(self.n * self.deg / 2))


# --- permutation samplers -------------------------------------------------

def random_permutation(rng, k) -> np.ndarray:
    return rng.permutation(k)


def random_permutation_fixing(rng, k, a, b) -> np.ndarray:
    """Uniform among the (k-1)! permutations with pi(a) = b."""
    perm = np.empty(k, dtype=np.int64)
    perm[a] = b
    sources = np.delete(np.arange(k), a)
    perm[sources] = rng.permutation(np.delete(np.arange(k), b))
    return perm


def _shift_perm(k, s):
    return (np.arange(k) + s) % k


# --- graphs ---------------------------------------------------------------

def gen_graph(n, m=None, kind="gnm", seed=0, deg=None, edges=None, connected=False) -> np.ndarray:
    """Simple graph as an (m, 2) array of canonical (u < v) edges."""
    rng = np.random.default_rng(seed)
    if kind == "file":
        if edges is None:
            raise ValueError("explicit-edge-list graphs need an edge list")
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        e = np.sort(e, axis=1)
        if np.any(e[:, 0] == e[:, 1]) or len({tuple(r) for r in e}) != len(e):
            raise ValueError("edge list has self-loops or duplicates")
        if len(e) and (e.min() < 0 or e.max() >= n):
            raise ValueError("edge endpoint out of range")
        return e
    if kind == "regular":
        if deg is None:
            raise ValueError("random-regular graphs need deg")
        deg = int(deg)
        if (n * deg) % 2 or deg >= n or deg < 0:
            raise ValueError(f"no {deg}-regular graph on {n} vertices")
        g = nx.random_regular_graph(deg, n, seed=int(rng.integers(2**31)))
        return np.array(sorted(tuple(sorted(e)) for e in g.edges()), dtype=np.int64).reshape(-1, 2)
    if kind != "gnm":
        raise ValueError(f"unknown graph kind {kind!r}")
    if m is None:
        if deg is None:
            raise ValueError("gnm graphs need m or deg")
        m = int(round(n * deg / 2))
    total = n * (n - 1) // 2
    if m > total or m < 0:
        raise ValueError(f"m={m} edges do not fit in a simple graph on {n} vertices (max {total})")
    if connected and m < n - 1:
        raise ValueError("a connected graph needs m >= n - 1")
    iu, iv = np.triu_indices(n, 1)
    for _ in range(100):
        pick = np.sort(rng.choice(total, size=m, replace=False))
        e = np.stack([iu[pick], iv[pick]], axis=1).astype(np.int64)
        if not connected or _is_connected(n, e):
            return e
    raise ValueError("could not sample a connected graph in 100 attempts")


def _is_connected(n, e):
    g = nx.Graph()
    g.add_nodes_from(range(n))
    g.add_edges_from(map(tuple, e))
    return nx.is_connected(g)


# --- initial satisfiable instances ------------------------------------------

def planted_instance(edges, n, k, planted: Labeling, rng, linear=False) -> UGInstance:
    """Constraints drawn uniformly among those satisfied by ``planted``."""
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    x = planted.x
    if linear:
        return UGInstance.linear(n, k, edges, (x[edges[:, 1]] - x[edges[:, 0]]) % k)
    perms = np.empty((len(edges), k), dtype=np.int64)
    for e, (u, v) in enumerate(edges):
        perms[e] = random_permutation_fixing(rng, k, x[u], x[v])
    return UGInstance.from_edges(n, k, edges, perms)


def identity_instance(edges, n, k, linear=False) -> UGInstance:
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if linear:
        return UGInstance.linear(n, k, edges, np.zeros(len(edges), dtype=np.int64))
    return UGInstance.from_edges(n, k, edges)


# --- adversaries ------------------------------------------------------------

def _adversary_constraint(strategy: AdversaryStrategy, inst, e, planted, rng, linear):
    k = inst.k
    perm = inst.perms[e]
    shift = int(inst.shifts[e]) if inst.is_linear else None
    kind = strategy.kind
    if kind == "mixed-instance":
        if e not in strategy.payload:
            return perm.copy(), shift
        new = np.asarray(strategy.payload[e], dtype=np.int64)
        if linear:
            if new.ndim == 0:
                return _shift_perm(k, int(new)), int(new) % k
            s = int(new[0]) % k if len(new) else 0
            if len(new) != k or not np.array_equal(new, _shift_perm(k, s)):
                raise GenerationError(f"mixed-instance constraint for edge {e} is not a shift")
            return new, s
        return new, None
    if kind == "random-replacement":
        if linear:
            s = int(rng.integers(k))
            return _shift_perm(k, s), s
        return random_permutation(rng, k), None
    if kind == "shift-by-one":
        if linear:
            return _shift_perm(k, shift + 1), (shift + 1) % k
        return (perm + 1) % k, None
    # planted-second-layer: route the planted label of u to a second label of v
    if planted is None:
        raise GenerationError("planted-second-layer needs the planted labeling")
    u, v = inst.eu[e], inst.ev[e]
    xu, xv = planted.x[u], planted.x[v]
    yv = (xv + 1) % k
    if linear:
        s = (yv - xu) % k
        return _shift_perm(k, s), int(s)
    new = perm.copy()
    a = int(np.flatnonzero(perm == yv)[0])
    new[xu], new[a] = yv, perm[xu]
    return new, None


def _apply_corruption(inst, chosen, make, linear):
    perms = inst.perms.copy()
    shifts = inst.shifts.copy() if inst.is_linear else None
    for e in chosen:
        p, s = make(int(e))
        p = np.asarray(p, dtype=np.int64)
        if p.shape != (inst.k,) or not is_permutation_rows(p[None, :])[0]:
            raise GenerationError(f"constraint emitted for edge {e} is not a permutation of [k]")
        perms[e] = p
        if linear:
            if s is None:
                raise GenerationError(f"linear instance needs a shift for edge {e}")
            shifts[e] = s
    return inst.with_constraints(perms, shifts)


def _record(inst, chosen, planted, model, meta):
    chosen = np.asarray(sorted(int(e) for e in chosen), dtype=np.int64)
    orig = inst.perms[chosen] if len(chosen) else np.zeros((0, inst.k), dtype=np.int64)
    orig_sh = inst.shifts[chosen] if inst.is_linear else None
    return CorruptionRecord(chosen, orig, planted, model, orig_sh, meta)


def _check_satisfied(inst, planted):
    if planted is None:
        return
    ok = inst.perms[np.arange(inst.m), planted.x[inst.eu]] == planted.x[inst.ev]
    if not ok.all():
        raise ValueError("initial instance is not satisfied by the planted labeling")


def sample_edges_fixed(rng, m, count, inst=None, how="uniform") -> np.ndarray:
    if count > m:
        raise ValueError("cannot choose more edges than the graph has")
    if how == "concentrated" and inst is not None:
        # pile the corruption onto the lowest-index vertices
        order = np.lexsort((np.arange(m), inst.ev, inst.eu))
        return np.sort(order[:count])
    return np.sort(rng.choice(m, size=count, replace=False)) if count else np.zeros(0, dtype=np.int64)


def gen_model1(cfg: GenConfig, initial: UGInstance, planted: Labeling | None, rng,
               adversary: AdversaryStrategy | None = None):
    """Random edge selection (Bernoulli(eps) per edge, or fixed size) then adversarial rewrite."""
    _check_satisfied(initial, planted)
    adversary = adversary or AdversaryStrategy(cfg.adversary)
    m = initial.m
    if cfg.fixed_size:
        chosen = sample_edges_fixed(rng, m, floor(cfg.eps * m + 1e-9))
    else:
        chosen = np.flatnonzero(rng.random(m) < cfg.eps)
    out = _apply_corruption(
        initial, chosen,
        lambda e: _adversary_constraint(adversary, initial, e, planted, rng, initial.is_linear),
        initial.is_linear,
    )
    meta = {"adversary": adversary.kind, "eps": cfg.eps, "fixed_size": bool(cfg.fixed_size)}
    return out, _record(initial, chosen, planted, 1, meta)


def gen_model2(cfg: GenConfig, initial: UGInstance, planted: Labeling | None, chosen, rng):
    """Adversarial edge set of size floor(eps*m); each gets a uniformly random constraint."""
    _check_satisfied(initial, planted)
    m, k = initial.m, initial.k
    chosen = np.asarray(chosen, dtype=np.int64).reshape(-1)
    need = floor(cfg.eps * m + 1e-9)
    if len(chosen) != need:
        raise ValueError(f"model 2 corrupts exactly floor(eps*m) = {need} edges, got {len(chosen)}")
    if len(chosen) and (chosen.min() < 0 or chosen.max() >= m or len(np.unique(chosen)) != len(chosen)):
        raise ValueError("corrupted edge choice out of range or repeated")
    linear = initial.is_linear

    def make(e):
        if linear:
            s = int(rng.integers(k))
            return _shift_perm(k, s), s
        return random_permutation(rng, k), None

    out = _apply_corruption(initial, np.sort(chosen), make, linear)
    return out, _record(initial, chosen, planted, 2, {"eps": cfg.eps, "edge_choice": cfg.edge_choice})


def gen_model3(cfg: GenConfig, edges, planted: Labeling, chosen, rng,
               adversary: AdversaryStrategy | None = None):
    """Random constraints around a planted labeling, then at most eps*m adversarial rewrites."""
    adversary = adversary or AdversaryStrategy(cfg.adversary)
    chosen = np.asarray(chosen, dtype=np.int64).reshape(-1)
    initial = planted_instance(edges, len(planted), planted.k, planted, rng, linear=cfg.linear)
    if len(chosen) > cfg.eps * initial.m + 1e-9:
        raise ValueError("model 3 corrupts at most eps*m edges")
    if len(chosen) and (chosen.min() < 0 or chosen.max() >= initial.m):
        raise ValueError("corrupted edge index out of range")
    out = _apply_corruption(
        initial, np.sort(chosen),
        lambda e: _adversary_constraint(adversary, initial, e, planted, rng, cfg.linear),
        cfg.linear,
    )
    return out, _record(initial, chosen, planted, 3, {"adversary": adversary.kind, "eps": cfg.eps})


def generate(cfg: GenConfig, edges=None, adversary: AdversaryStrategy | None = None):
    """Build a full semi-random instance from a config; returns (instance, truth)."""
    g_ss, p_ss, i_ss, s_ss, c_ss = np.random.SeedSequence(cfg.seed).spawn(5)
    graph_seed = int(np.random.default_rng(g_ss).integers(2**63))
    if cfg.graph == "file" and edges is None:
        if cfg.graph_file is None:
            raise ValueError("graph 'file' needs graph_file or explicit edges")
        edges = np.loadtxt(cfg.graph_file, dtype=np.int64, ndmin=2)
    e = gen_graph(cfg.n, cfg.m if cfg.graph != "regular" else None, cfg.graph, graph_seed,
                  deg=cfg.deg, edges=edges, connected=cfg.connected)
    k = cfg.k
    if cfg.initial == "identity" and cfg.model != 3:
        planted = Labeling(np.zeros(cfg.n, dtype=np.int64), k)
    else:
        planted = Labeling(np.random.default_rng(p_ss).integers(k, size=cfg.n), k)
    select_rng = np.random.default_rng(s_ss)
    corrupt_rng = np.random.default_rng(c_ss)
    if cfg.model == 3:
        m = len(e)
        chosen = sample_edges_fixed(select_rng, m, floor(cfg.eps * m + 1e-9),
                                    UGInstance.from_edges(cfg.n, k, e), cfg.edge_choice)
        return gen_model3(cfg, e, planted, chosen, np.random.default_rng(i_ss), adversary)
    if cfg.initial == "identity":
        initial = identity_instance(e, cfg.n, k, cfg.linear)
    else:
        initial = planted_instance(e, cfg.n, k, planted, np.random.default_rng(i_ss), cfg.linear)
    if cfg.model == 1:
        return gen_model1(cfg, initial, planted, select_rng, adversary)
    chosen = sample_edges_fixed(select_rng, initial.m, floor(cfg.eps * initial.m + 1e-9), initial, cfg.edge_choice)
    return gen_model2(cfg, initial, planted, chosen, corrupt_rng)


# --- 2-to-2 games -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TwoToTwoGame:
    n: int
    k: int
    eu: np.ndarray
    ev: np.ndarray
    predicates: np.ndarray  # (m, k, k) booleans

    def __post_init__(self):
        pred = np.asarray(self.predicates, dtype=bool)
        eu = np.asarray(self.eu, dtype=np.int64).reshape(-1)
        ev = np.asarray(self.ev, dtype=np.int64).reshape(-1)
        if self.k % 2:
            raise ValueError("2-to-2 games need an even alphabet")
        if pred.shape != (len(eu), self.k, self.k):
            raise ValueError("predicates must have shape (m, k, k)")
        if len(eu) and (not (pred.sum(axis=2) == 2).all() or not (pred.sum(axis=1) == 2).all()):
            raise ValueError("every row and column of a 2-to-2 predicate must hold exactly two ones")
        if np.any(eu == ev):
            raise ValueError("self-loops are not allowed")
        for name, arr in (("eu", eu), ("ev", ev), ("predicates", pred)):
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def m(self):
        return len(self.eu)

    def value(self, x) -> float:
        x = np.asarray(x)
        if self.m == 0:
            return 1.0
        return float(self.predicates[np.arange(self.m), x[self.eu], x[self.ev]].mean())


def random_2to2_game(n, k, edges, rng, planted=None) -> TwoToTwoGame:
    """Each predicate is the union of two disjoint random perfect matchings."""
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    pred = np.zeros((len(edges), k, k), dtype=bool)
    for e, (u, v) in enumerate(edges):
        if planted is not None:
            sigma = random_permutation_fixing(rng, k, planted[u], planted[v])
        else:
            sigma = rng.permutation(k)
        while True:
            delta = rng.permutation(k)
            if not np.any(delta == np.arange(k)):
                break
        pred[e, np.arange(k), sigma] = True
        pred[e, np.arange(k), sigma[delta]] = True
    return TwoToTwoGame(n, k, edges[:, 0], edges[:, 1], pred)


def split_matchings(pred: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Decompose a 2-regular bipartite compatibility graph into two perfect matchings."""
    k = pred.shape[0]
    if not ((pred.sum(axis=1) == 2).all() and (pred.sum(axis=0) == 2).all()):
        raise ValueError("predicate is not 2-regular; cannot split into two matchings")
    right = [np.flatnonzero(pred[i]) for i in range(k)]
    left = [np.flatnonzero(pred[:, j]) for j in range(k)]
    m0 = np.full(k, -1, dtype=np.int64)
    m1 = np.full(k, -1, dtype=np.int64)
    for i0 in range(k):
        if m0[i0] >= 0:
            continue
        i, j = i0, int(right[i0][0])
        while True:
            m0[i] = j
            i2 = int(left[j][0] if left[j][0] != i else left[j][1])
            m1[i2] = j
            if i2 == i0:
                break
            j = int(right[i2][0] if right[i2][0] != j else right[i2][1])
            i = i2
    return m0, m1


def reduce_2to2(game: TwoToTwoGame, seed=0) -> UGInstance:
    """Unique game keeping one of the two matchings of each predicate, chosen uniformly."""
    rng = np.random.default_rng(seed)
    perms = np.empty((game.m, game.k), dtype=np.int64)
    for e in range(game.m):
        m0, m1 = split_matchings(game.predicates[e])
        perms[e] = m1 if rng.random() < 0.5 else m0
    return UGInstance(game.n, game.k, game.eu, game.ev, perms)


def amplify_degree(game: TwoToTwoGame, N: int) -> TwoToTwoGame:
    """Replace every vertex by a cloud of N copies joined completely along each edge."""
    if N < 1:
        raise ValueError("cloud size must be >= 1")
    total = N * N * game.m
    if total > MAX_AMPLIFIED_EDGES:
        raise OverflowError(f"amplified game would have {total} edges (limit {MAX_AMPLIFIED_EDGES})")
    a, b = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    a, b = a.ravel(), b.ravel()
    eu = (game.eu[:, None] * N + a[None, :]).ravel()
    ev = (game.ev[:, None] * N + b[None, :]).ravel()
    pred = np.repeat(game.predicates, N * N, axis=0)
    return TwoToTwoGame(game.n * N, game.k, eu, ev, pred)


def with_seed(cfg: GenConfig, seed: int) -> GenConfig:
    return replace(cfg, seed=seed)
