from math import floor

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from semirandom_ug.core import satisfied_edges
from semirandom_ug.generators import (
    AdversaryStrategy, GenConfig, GenerationError, TwoToTwoGame, amplify_degree, gen_graph,
    generate, random_2to2_game, random_permutation_fixing, reduce_2to2, split_matchings,
)
from semirandom_ug.oracle import brute_force_2to2, brute_force_opt


def test_gnm_graph_shape():
    e = gen_graph(20, 50, seed=1)
    assert e.shape == (50, 2) and (e[:, 0] < e[:, 1]).all()
    assert len({tuple(r) for r in e}) == 50


def test_regular_graph():
    e = gen_graph(20, kind="regular", deg=4, seed=2)
    assert np.array_equal(np.bincount(e.ravel(), minlength=20), np.full(20, 4))
    with pytest.raises(ValueError):
        gen_graph(5, kind="regular", deg=3)


def test_graph_errors():
    with pytest.raises(ValueError):
        gen_graph(4, 7)
    with pytest.raises(ValueError):
        gen_graph(3, kind="file", edges=[(0, 0)])


def test_fixing_sampler_is_uniform():
    rng = np.random.default_rng(0)
    counts = {}
    for _ in range(6000):
        p = tuple(random_permutation_fixing(rng, 4, 1, 2))
        assert p[1] == 2
        counts[p] = counts.get(p, 0) + 1
    assert len(counts) == 6
    assert max(counts.values()) - min(counts.values()) < 200


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from([1, 2, 3]), st.booleans(),
       st.sampled_from(["random-replacement", "shift-by-one", "planted-second-layer"]))
def test_planted_satisfies_clean_edges(seed, model, linear, adversary):
    cfg = GenConfig(n=15, k=4, eps=0.2, model=model, deg=4, seed=seed, linear=linear, adversary=adversary)
    inst, truth = generate(cfg)
    truth.validate(inst)
    assert inst.is_linear == linear
    if model in (2, 3):
        assert len(truth.corrupted) == floor(0.2 * inst.m + 1e-9)


def test_model2_corrupted_edges_are_random():
    cfg = GenConfig(n=30, k=8, eps=0.5, model=2, deg=10, seed=4)
    inst, truth = generate(cfg)
    ok = satisfied_edges(inst, truth.planted)
    # a random permutation keeps the planted pair with probability 1/k
    assert ok[truth.corrupted].mean() < 0.4


def test_shift_by_one_breaks_every_chosen_edge():
    cfg = GenConfig(n=20, k=5, eps=0.3, model=1, deg=6, seed=7, adversary="shift-by-one")
    inst, truth = generate(cfg)
    ok = satisfied_edges(inst, truth.planted)
    assert not ok[truth.corrupted].any()
    assert ok[~truth.corrupted_mask(inst.m)].all()


def test_generation_is_deterministic():
    cfg = GenConfig(n=25, k=4, eps=0.1, model=3, deg=6, seed=11)
    a, ta = generate(cfg)
    b, tb = generate(cfg)
    assert a == b and np.array_equal(ta.corrupted, tb.corrupted)
    c, _ = generate(GenConfig(n=25, k=4, eps=0.1, model=3, deg=6, seed=12))
    assert not a == c


def test_identity_initial():
    cfg = GenConfig(n=10, k=3, eps=0.0, model=1, deg=4, initial="identity")
    inst, truth = generate(cfg)
    assert (inst.perms == np.arange(3)).all()
    assert truth.planted.x.tolist() == [0] * 10


def test_mixed_instance_rejects_non_permutation():
    adv = AdversaryStrategy("mixed-instance", {e: [0, 0, 1] for e in range(100)})
    with pytest.raises(GenerationError):
        generate(GenConfig(n=10, k=3, eps=1.0, model=1, deg=4), adversary=adv)


def test_config_validation():
    with pytest.raises(ValueError):
        GenConfig(n=5, k=3, eps=1.5)
    with pytest.raises(ValueError):
        GenConfig(n=5, k=1, eps=0.1)
    with pytest.raises(ValueError):
        AdversaryStrategy("nonsense")


def test_split_matchings_partition():
    rng = np.random.default_rng(1)
    game = random_2to2_game(3, 6, [(0, 1), (1, 2)], rng)
    for pred in game.predicates:
        m0, m1 = split_matchings(pred)
        assert sorted(m0) == list(range(6)) and sorted(m1) == list(range(6))
        assert (m0 != m1).all()
        both = np.zeros_like(pred)
        both[np.arange(6), m0] = both[np.arange(6), m1] = True
        assert np.array_equal(both, pred)


def test_reduce_keeps_one_matching_per_edge():
    rng = np.random.default_rng(2)
    game = random_2to2_game(4, 4, [(0, 1), (1, 2), (2, 3)], rng)
    inst = reduce_2to2(game, seed=5)
    for e in range(game.m):
        assert game.predicates[e, np.arange(4), inst.perms[e]].all()


def test_amplify_preserves_optimum():
    rng = np.random.default_rng(8)
    game = random_2to2_game(3, 2 * 2, [(0, 1), (1, 2), (0, 2)], rng)
    big = amplify_degree(game, 2)
    assert big.n == 6 and big.m == 12
    assert brute_force_2to2(big) == pytest.approx(brute_force_2to2(game))
    with pytest.raises(ValueError):
        amplify_degree(game, 0)


def test_2to2_validation():
    with pytest.raises(ValueError):
        TwoToTwoGame(2, 3, [0], [1], np.ones((1, 3, 3), dtype=bool))


def test_reduction_never_beats_game():
    rng = np.random.default_rng(9)
    game = random_2to2_game(4, 4, gen_graph(4, 5, seed=3), rng)
    for s in range(5):
        assert brute_force_opt(reduce_2to2(game, s))[1] <= brute_force_2to2(game) + 1e-12
