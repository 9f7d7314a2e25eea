"""Unique Games instances, labelings, vector solutions and the label-extended graph."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

FLAVORS = ("standard", "crude", "shift-invariant")


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


def is_permutation_rows(perms: np.ndarray) -> np.ndarray:
    """Boolean mask of rows of ``perms`` that are bijections on range(k)."""
    m, k = perms.shape
    if m == 0:
        return np.zeros(0, dtype=bool)
    in_range = ((perms >= 0) & (perms < k)).all(axis=1)
    srt = np.sort(np.where(in_range[:, None], perms, 0), axis=1)
    return in_range & (srt == np.arange(k)).all(axis=1)


def invert_perms(perms: np.ndarray) -> np.ndarray:
    m, k = perms.shape
    inv = np.empty_like(perms)
    rows = np.repeat(np.arange(m), k)
    inv[rows, perms.ravel()] = np.tile(np.arange(k), m)
    return inv


@dataclass(frozen=True, eq=False)
class UGInstance:
    """A Unique Games instance with edges stored in canonical orientation u < v.

    ``perms[e, i]`` is the label of ``v`` that satisfies edge ``e`` when ``u``
    carries label ``i``.  Linear instances also keep ``shifts`` with
    ``perms[e, i] == (i + shifts[e]) % k``.
    """

    n: int
    k: int
    eu: np.ndarray
    ev: np.ndarray
    perms: np.ndarray
    shifts: np.ndarray | None = None

    def __post_init__(self):
        if self.k < 2:
            raise ValueError(f"alphabet size must be >= 2, got {self.k}")
        if self.n < 1:
            raise ValueError("instance needs at least one vertex")
        eu = np.asarray(self.eu, dtype=np.int64).reshape(-1)
        ev = np.asarray(self.ev, dtype=np.int64).reshape(-1)
        perms = np.asarray(self.perms, dtype=np.int64).reshape(len(eu), self.k)
        if len(ev) != len(eu):
            raise ValueError("edge endpoint arrays differ in length")
        if len(eu) and (min(eu.min(), ev.min()) < 0 or max(eu.max(), ev.max()) >= self.n):
            raise ValueError("edge endpoint out of range")
        if np.any(eu == ev):
            raise ValueError("self-loops are not allowed")
        if not is_permutation_rows(perms).all():
            bad = int(np.flatnonzero(~is_permutation_rows(perms))[0])
            raise ValueError(f"constraint on edge {bad} is not a permutation")
        shifts = None
        if self.shifts is not None:
            shifts = np.asarray(self.shifts, dtype=np.int64).reshape(-1) % self.k
            expect = (np.arange(self.k)[None, :] + shifts[:, None]) % self.k
            if len(shifts) != len(eu) or not np.array_equal(expect, perms):
                raise ValueError("shifts disagree with permutations")
        # canonical orientation: u < v, flipping stores the inverse permutation
        flip = eu > ev
        if flip.any():
            perms = perms.copy()
            perms[flip] = invert_perms(perms[flip])
            eu, ev = np.where(flip, ev, eu), np.where(flip, eu, ev)
            if shifts is not None:
                shifts = np.where(flip, (-shifts) % self.k, shifts)
        keys = eu * self.n + ev
        if len(np.unique(keys)) != len(keys):
            raise ValueError("duplicate edges (multigraphs are not supported)")
        object.__setattr__(self, "eu", _frozen(eu, np.int64))
        object.__setattr__(self, "ev", _frozen(ev, np.int64))
        object.__setattr__(self, "perms", _frozen(perms, np.int64))
        if shifts is not None:
            object.__setattr__(self, "shifts", _frozen(shifts, np.int64))

    @classmethod
    def from_edges(cls, n, k, edges, perms=None, shifts=None):
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if shifts is not None:
            shifts = np.asarray(shifts, dtype=np.int64) % k
            perms = (np.arange(k)[None, :] + shifts[:, None]) % k
        if perms is None:
            perms = np.tile(np.arange(k), (len(edges), 1))
        return cls(n, k, edges[:, 0], edges[:, 1], perms, shifts)

    @classmethod
    def linear(cls, n, k, edges, shifts):
        return cls.from_edges(n, k, edges, shifts=shifts)

    @property
    def m(self) -> int:
        return len(self.eu)

    @property
    def is_linear(self) -> bool:
        return self.shifts is not None

    @property
    def edges(self) -> np.ndarray:
        return np.stack([self.eu, self.ev], axis=1)

    @cached_property
    def inv_perms(self) -> np.ndarray:
        inv = invert_perms(self.perms)
        inv.setflags(write=False)
        return inv

    def pi(self, e: int, a: int, i: int) -> int:
        """Image of label ``i`` of endpoint ``a`` across edge ``e`` (either direction)."""
        if a == self.eu[e]:
            return int(self.perms[e, i])
        if a == self.ev[e]:
            return int(self.inv_perms[e, i])
        raise ValueError(f"vertex {a} is not an endpoint of edge {e}")

    def degrees(self) -> np.ndarray:
        return np.bincount(np.concatenate([self.eu, self.ev]), minlength=self.n)

    def with_constraints(self, perms, shifts=None) -> "UGInstance":
        return UGInstance(self.n, self.k, self.eu, self.ev, perms, shifts)

    def subgraph(self, keep) -> "UGInstance":
        """Same vertex set restricted to the edges selected by boolean mask ``keep``."""
        keep = np.asarray(keep, dtype=bool)
        shifts = self.shifts[keep] if self.shifts is not None else None
        return UGInstance(self.n, self.k, self.eu[keep], self.ev[keep], self.perms[keep], shifts)

    def __eq__(self, other):
        if not isinstance(other, UGInstance):
            return NotImplemented
        same_shift = (self.shifts is None and other.shifts is None) or (
            self.shifts is not None and other.shifts is not None
            and np.array_equal(self.shifts, other.shifts)
        )
        return (self.n == other.n and self.k == other.k and same_shift
                and np.array_equal(self.eu, other.eu) and np.array_equal(self.ev, other.ev)
                and np.array_equal(self.perms, other.perms))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Labeling:
    x: np.ndarray
    k: int

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.int64).reshape(-1)
        if len(x) and (x.min() < 0 or x.max() >= self.k):
            raise ValueError("labels must lie in [0, k)")
        object.__setattr__(self, "x", _frozen(x, np.int64))

    def __len__(self):
        return len(self.x)

    def __eq__(self, other):
        return isinstance(other, Labeling) and self.k == other.k and np.array_equal(self.x, other.x)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class CorruptionRecord:
    """Ground truth kept away from the solvers."""

    corrupted: np.ndarray
    original_perms: np.ndarray
    planted: Labeling | None = None
    model: int | None = None
    original_shifts: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        idx = np.asarray(self.corrupted, dtype=np.int64).reshape(-1)
        order = np.argsort(idx, kind="stable")
        op = np.asarray(self.original_perms, dtype=np.int64)
        op = op.reshape(len(idx), op.size // len(idx) if len(idx) else 0)
        object.__setattr__(self, "corrupted", _frozen(idx[order], np.int64))
        object.__setattr__(self, "original_perms", _frozen(op[order], np.int64))
        if self.original_shifts is not None:
            sh = np.asarray(self.original_shifts, dtype=np.int64).reshape(-1)
            object.__setattr__(self, "original_shifts", _frozen(sh[order], np.int64))

    def corrupted_mask(self, m: int) -> np.ndarray:
        mask = np.zeros(m, dtype=bool)
        mask[self.corrupted] = True
        return mask

    def validate(self, inst: UGInstance) -> None:
        if len(self.corrupted) and (self.corrupted.min() < 0 or self.corrupted.max() >= inst.m):
            raise ValueError("corrupted edge index out of range")
        if self.planted is not None:
            ok = satisfied_edges(inst, self.planted)
            clean = ~self.corrupted_mask(inst.m)
            if not ok[clean].all():
                raise ValueError("planted labeling violates an uncorrupted edge")


def satisfied_edges(inst: UGInstance, lab: Labeling | np.ndarray) -> np.ndarray:
    x = lab.x if isinstance(lab, Labeling) else np.asarray(lab, dtype=np.int64)
    if len(x) != inst.n:
        raise ValueError(f"labeling has length {len(x)}, instance has {inst.n} vertices")
    if inst.m == 0:
        return np.zeros(0, dtype=bool)
    return inst.perms[np.arange(inst.m), x[inst.eu]] == x[inst.ev]


def satisfied_count(inst: UGInstance, lab) -> int:
    return int(satisfied_edges(inst, lab).sum())


def value(inst: UGInstance, lab) -> float:
    """Fraction of constraints satisfied by ``lab`` (1.0 for an edgeless graph)."""
    ok = satisfied_edges(inst, lab)
    if inst.m == 0:
        return 1.0
    return float(ok.sum()) / inst.m


@dataclass(frozen=True)
class LabelExtendedGraph:
    n: int
    k: int
    # rows (u, i, v, j) for every label-extended edge, grouped edge by edge
    edges: np.ndarray

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def block(self, v: int) -> np.ndarray:
        return v * self.k + np.arange(self.k)

    def node(self, v: int, i: int) -> int:
        return v * self.k + i

    def layer_edges(self, labeling) -> np.ndarray:
        """Mask of label-extended edges whose both endpoints lie in the given layer."""
        x = labeling.x if isinstance(labeling, Labeling) else np.asarray(labeling)
        u, i, v, j = self.edges.T
        return (x[u] == i) & (x[v] == j)

    def adjacency(self) -> sp.csr_matrix:
        u, i, v, j = self.edges.T
        a = u * self.k + i
        b = v * self.k + j
        N = self.n * self.k
        A = sp.coo_matrix((np.ones(2 * len(a)), (np.concatenate([a, b]), np.concatenate([b, a]))), shape=(N, N))
        return A.tocsr()


def build_label_extended(inst: UGInstance) -> LabelExtendedGraph:
    m, k = inst.m, inst.k
    u = np.repeat(inst.eu, k)
    v = np.repeat(inst.ev, k)
    i = np.tile(np.arange(k), m)
    j = inst.perms.reshape(-1)
    return LabelExtendedGraph(inst.n, k, np.stack([u, i, v, j], axis=1))


@dataclass(frozen=True, eq=False)
class VectorSolution:
    """One d-dimensional vector per (vertex, label): ``vectors[u, i]``."""

    vectors: np.ndarray
    flavor: str

    def __post_init__(self):
        if self.flavor not in FLAVORS:
            raise ValueError(f"unknown flavor {self.flavor!r}")
        vec = np.asarray(self.vectors, dtype=np.float64)
        if vec.ndim != 3:
            raise ValueError("vectors must have shape (n, k, d)")
        object.__setattr__(self, "vectors", _frozen(vec, np.float64))

    @property
    def n(self):
        return self.vectors.shape[0]

    @property
    def k(self):
        return self.vectors.shape[1]

    @property
    def d(self):
        return self.vectors.shape[2]

    @property
    def flat(self) -> np.ndarray:
        return self.vectors.reshape(self.n * self.k, self.d)

    def sq_norms(self) -> np.ndarray:
        return np.einsum("uid,uid->ui", self.vectors, self.vectors)

    def check_for(self, inst: UGInstance) -> None:
        if self.n != inst.n or self.k != inst.k:
            raise ValueError(f"solution is {self.n}x{self.k}, instance is {inst.n}x{inst.k}")


def integral_solution(lab: Labeling, flavor: str = "standard", d: int | None = None) -> VectorSolution:
    """Indicator embedding of a labeling.

    standard: u_i = e if x_u = i else 0.  crude / shift-invariant: u_i = f_{(i - x_u) mod k}
    for a fixed orthonormal frame, which is integral along every layer shift.
    """
    n, k = len(lab), lab.k
    if flavor == "standard":
        d = d or 1
        vec = np.zeros((n, k, d))
        vec[np.arange(n), lab.x, 0] = 1.0
        return VectorSolution(vec, "standard")
    d = d or k
    frame = np.eye(d)[:k]
    idx = (np.arange(k)[None, :] - lab.x[:, None]) % k
    return VectorSolution(frame[idx], flavor)


def edge_lengths(sol: VectorSolution, inst: UGInstance) -> np.ndarray:
    """(1/2) sum_i ||u_i - v_{pi(i)}||^2 for every edge."""
    sol.check_for(inst)
    if inst.m == 0:
        return np.zeros(0)
    U = sol.vectors[inst.eu]
    V = sol.vectors[inst.ev[:, None], inst.perms]
    return 0.5 * np.einsum("ekd,ekd->e", U - V, U - V)


def edge_length(sol: VectorSolution, inst: UGInstance, edge: int) -> float:
    sol.check_for(inst)
    u, v = inst.eu[edge], inst.ev[edge]
    diff = sol.vectors[u] - sol.vectors[v][inst.perms[edge]]
    return 0.5 * float(np.sum(diff * diff))
