import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from semirandom_ug.core import UGInstance, value
from semirandom_ug.generators import TwoToTwoGame, gen_graph, random_2to2_game
from semirandom_ug.oracle import SizeGuardError, brute_force_2to2, brute_force_opt

from conftest import enumerate_opt, random_instance


def test_identity_instance_all_zero():
    inst = UGInstance.from_edges(4, 3, [(0, 1), (1, 2), (2, 3)])
    lab, val = brute_force_opt(inst)
    assert val == 1.0 and lab.x.tolist() == [0, 0, 0, 0]


def test_triangle_xor(triangle_xor):
    lab, val = brute_force_opt(triangle_xor)
    assert val == pytest.approx(2 / 3)
    # lexicographically first optimum among the 8 labelings
    assert lab.x.tolist() == [0, 0, 1]


def test_five_cycle(five_cycle_xor):
    assert brute_force_opt(five_cycle_xor)[1] == pytest.approx(4 / 5)


def test_size_guard():
    inst = UGInstance.from_edges(24, 2, [(0, 1)])
    with pytest.raises(SizeGuardError, match="10000000"):
        brute_force_opt(inst)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 5), st.integers(2, 3))
def test_matches_enumeration(seed, n, k):
    inst = random_instance(np.random.default_rng(seed), n, k)
    lab, val = brute_force_opt(inst)
    assert val == pytest.approx(enumerate_opt(inst))
    assert value(inst, lab) == pytest.approx(val)


def test_single_2to2_edge():
    k = 4
    pred = np.zeros((1, k, k), dtype=bool)
    for i in range(k):
        pred[0, i, i] = pred[0, i, (i + 1) % k] = True
    game = TwoToTwoGame(2, k, [0], [1], pred)
    assert brute_force_2to2(game) == 1.0


def test_2to2_matches_enumeration():
    import itertools
    rng = np.random.default_rng(3)
    for _ in range(10):
        e = gen_graph(4, 5, seed=int(rng.integers(1 << 30)))
        game = random_2to2_game(4, 2 * int(rng.integers(1, 3)), e, rng)
        best = max(game.value(np.array(x)) for x in itertools.product(range(game.k), repeat=game.n))
        assert brute_force_2to2(game) == pytest.approx(best)
