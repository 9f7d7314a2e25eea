import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from semirandom_ug.core import Labeling, UGInstance, build_label_extended
from semirandom_ug.lp import LPWeights, layer_weights, lp_objective, solve_lp


def grid_opt(n, k, edges, steps=12):
    """Best objective over every weight vector on a 1/steps grid of the simplex product."""
    simplex = [np.array(c) / steps for c in itertools.product(range(steps + 1), repeat=k) if sum(c) == steps]
    return max(lp_objective(np.array(xs), edges) for xs in itertools.product(simplex, repeat=n))


def _host(n, k):
    return UGInstance.from_edges(n, k, [(0, 1)])


def test_single_edge_k2():
    inst = UGInstance.from_edges(2, 2, [(0, 1)])
    w = solve_lp(np.array([[0, 0, 1, 0]]), inst)
    assert w.objective == pytest.approx(1.0)
    assert w.x[0, 0] == pytest.approx(1.0) and w.x[1, 0] == pytest.approx(1.0)


def test_full_layer_gives_edge_count():
    inst = UGInstance.from_edges(3, 3, [(0, 1), (1, 2)], perms=[[1, 2, 0], [0, 2, 1]])
    w = solve_lp(build_label_extended(inst).edges, inst)
    assert w.objective == pytest.approx(inst.m)


def test_empty_set_uniform():
    w = solve_lp(np.zeros((0, 4), dtype=int), _host(3, 4))
    assert w.objective == 0.0 and np.allclose(w.x, 0.25)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31))
def test_matches_grid_oracle(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 4))
    k = int(rng.integers(2, 4)) if n == 2 else 2
    pool = [(u, i, v, j) for u in range(n) for v in range(u + 1, n) for i in range(k) for j in range(k)]
    pick = rng.choice(len(pool), size=int(rng.integers(1, len(pool) + 1)), replace=False)
    edges = np.array([pool[p] for p in pick])
    w = solve_lp(edges, _host(n, k))
    assert w.objective == pytest.approx(grid_opt(n, k, edges), abs=1e-9)
    assert lp_objective(w.x, edges) == pytest.approx(w.objective)


def test_layer_weights_indicator():
    x = layer_weights(Labeling([2, 0, 1], 3), 3)
    assert x.tolist() == [[0, 0, 1], [1, 0, 0], [0, 1, 0]]


def test_weights_validation():
    with pytest.raises(ValueError):
        LPWeights(np.array([[0.5, 0.6]]), 0.0)
    with pytest.raises(ValueError):
        LPWeights(np.array([[-0.1, 1.1]]), 0.0)
    w = LPWeights(np.array([[0.5, 0.5]]), 0.0)
    with pytest.raises(ValueError):
        w.x[0, 0] = 1.0


def test_rejects_mismatched_set():
    with pytest.raises(ValueError):
        solve_lp(np.array([[0, 5, 1, 0]]), _host(2, 2))
