"""Integral labelings from vector solutions.

* LP-weighted orthogonal separators with iterative singleton assignment,
* Gaussian-projection rounding for standard solutions (best of several trials),
* norm-threshold rounding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Labeling, UGInstance, VectorSolution, value
from .lp import LPWeights
from .normal import norm_isf

GAUSSIAN_TRIALS = 25


@dataclass(frozen=True)
class SeparatorParams:
    k: int
    alpha: float
    t: float
    max_iters: int
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.alpha <= 0.125:
            raise ValueError("alpha must lie in (0, 1/8]")

    @classmethod
    def for_instance(cls, n: int, k: int, seed: int = 0) -> "SeparatorParams":
        alpha = 1.0 / (2 * k * k)
        return cls(k, alpha, norm_isf(alpha), int(np.ceil(n * k / alpha)), seed)


def _check(sol: VectorSolution, w: LPWeights):
    if sol.flavor == "standard":
        raise ValueError("separators need a unit-vector solution")
    if w.x.shape != (sol.n, sol.k):
        raise ValueError("weights and solution have different shapes")


def sample_separator(sol: VectorSolution, w: LPWeights, params: SeparatorParams, rng) -> np.ndarray:
    """One separator S as an (n, k) boolean mask: <u_i, g> >= t and x(u,i) >= r."""
    _check(sol, w)
    g = rng.standard_normal(sol.d)
    r = 1.0 - rng.random()  # uniform on (0, 1], so zero weights never pass
    return (sol.vectors @ g >= params.t) & (w.x >= r)


def separator_batch(sol: VectorSolution, w: LPWeights, params: SeparatorParams, rng, size: int) -> np.ndarray:
    """``size`` independent separators stacked as an (size, n, k) boolean array."""
    _check(sol, w)
    g = rng.standard_normal((size, sol.d))
    r = 1.0 - rng.random(size)
    proj = np.einsum("ukd,bd->buk", sol.vectors, g)
    return (proj >= params.t) & (w.x[None] >= r[:, None, None])


def round_lp_sdp(inst: UGInstance, sol: VectorSolution, w: LPWeights, params: SeparatorParams,
                 batch: int = 512) -> Labeling:
    """Repeatedly sample separators; a vertex takes label i the first time S_u = {i}.

    Vertices left after the iteration cap get label 0.  Separators are drawn in
    batches; each vertex only looks at the first separator in which it is a
    singleton, so the output distribution does not depend on ``batch``, though the
    exact labels for a given seed do.
    """
    sol.check_for(inst)
    rng = np.random.default_rng(params.seed)
    n = inst.n
    x = np.zeros(n, dtype=np.int64)
    todo = np.ones(n, dtype=bool)
    done_iters = 0
    while todo.any() and done_iters < params.max_iters:
        size = min(batch, params.max_iters - done_iters)
        S = separator_batch(sol, w, params, rng, size)
        single = S.sum(axis=2) == 1                     # (size, n)
        hit = single & todo[None, :]
        first = np.argmax(hit, axis=0)
        newly = hit.any(axis=0)
        idx = np.nonzero(newly)[0]
        x[idx] = np.argmax(S[first[idx], idx], axis=1)
        todo &= ~newly
        done_iters += size
    return Labeling(x, inst.k)


def round_gaussian(inst: UGInstance, sol: VectorSolution, rng, trials: int = GAUSSIAN_TRIALS) -> Labeling:
    """Gaussian projection of normalised vectors among labels with ||u_i||^2 >= 1/(2k)."""
    if sol.flavor != "standard":
        raise ValueError("round_gaussian needs a standard-flavor solution")
    sol.check_for(inst)
    k = inst.k
    sq = sol.sq_norms()
    if (sq.sum(axis=1) <= 0).any():
        raise ValueError("solution has an all-zero block")
    norms = np.sqrt(sq)
    unit = sol.vectors / np.where(norms > 0, norms, 1.0)[:, :, None]
    heavy = sq >= 1.0 / (2 * k)
    fallback = np.argmax(sq, axis=1)
    has_heavy = heavy.any(axis=1)
    best, best_val = None, -1.0
    for _ in range(trials):
        g = rng.standard_normal(sol.d)
        proj = np.where(heavy, unit @ g, -np.inf)
        lab = np.where(has_heavy, np.argmax(proj, axis=1), fallback)
        val = value(inst, lab)
        if val > best_val:
            best, best_val = lab, val
    return Labeling(best, k)


def round_threshold(sol: VectorSolution) -> Labeling:
    """Label with squared norm above 1/2 when there is one, else the first label of largest norm."""
    if sol.flavor != "standard":
        raise ValueError("threshold rounding needs a standard-flavor solution")
    sq = sol.sq_norms()
    # argmax returns the first maximiser, and a label above 1/2 is always the maximiser
    return Labeling(np.argmax(sq, axis=1), sol.k)
