import numpy as np
import pytest

from semirandom_ug.core import Labeling, VectorSolution, integral_solution, value
from semirandom_ug.generators import GenConfig, generate
from semirandom_ug.lp import LPWeights, layer_weights
from semirandom_ug.normal import norm_sf
from semirandom_ug.rounding import (
    SeparatorParams, round_gaussian, round_lp_sdp, round_threshold, sample_separator, separator_batch,
)


@pytest.fixture
def planted_case():
    inst, truth = generate(GenConfig(n=30, k=4, eps=0.1, model=1, deg=6, seed=3))
    return inst, truth.planted


def test_params_for_instance():
    p = SeparatorParams.for_instance(10, 4, seed=1)
    assert p.alpha == pytest.approx(1 / 32)
    assert norm_sf(p.t) == pytest.approx(1 / 32, rel=1e-9)
    assert p.max_iters == 10 * 4 * 32
    with pytest.raises(ValueError):
        SeparatorParams(4, 0.2, 1.0, 10)


def test_separator_marginals_small():
    rng = np.random.default_rng(0)
    k = 3
    sol = integral_solution(Labeling([0, 1], k), "crude")
    w = LPWeights(np.array([[0.6, 0.3, 0.1], [0.2, 0.2, 0.6]]), 0.0)
    params = SeparatorParams.for_instance(2, k)
    S = separator_batch(sol, w, params, rng, 200_000)
    emp = S.mean(axis=0)
    want = params.alpha * w.x
    sigma = np.sqrt(want * (1 - want) / 200_000)
    assert np.all(np.abs(emp - want) <= 4 * sigma)


def test_single_sample_matches_batch_shape(planted_case):
    inst, lab = planted_case
    sol = integral_solution(lab, "crude")
    w = LPWeights(layer_weights(lab, inst.k), 0.0)
    S = sample_separator(sol, w, SeparatorParams.for_instance(inst.n, inst.k), np.random.default_rng(1))
    assert S.shape == (inst.n, inst.k)
    # indicator weights confine every separator to the layer
    assert not (S & (w.x == 0)).any()


def test_lpsdp_recovers_layer(planted_case):
    inst, lab = planted_case
    sol = integral_solution(lab, "crude")
    w = LPWeights(layer_weights(lab, inst.k), 0.0)
    out = round_lp_sdp(inst, sol, w, SeparatorParams.for_instance(inst.n, inst.k, seed=2))
    assert out == lab


def test_lpsdp_fallback_label_zero(planted_case):
    inst, lab = planted_case
    sol = integral_solution(lab, "crude")
    w = LPWeights(layer_weights(lab, inst.k), 0.0)
    p = SeparatorParams.for_instance(inst.n, inst.k)
    out = round_lp_sdp(inst, sol, w, SeparatorParams(p.k, p.alpha, p.t, 0, 0))
    assert out.x.tolist() == [0] * inst.n


def test_lpsdp_deterministic(planted_case):
    inst, lab = planted_case
    rng = np.random.default_rng(5)
    V = np.empty((inst.n, inst.k, 6))
    for u in range(inst.n):
        V[u] = np.linalg.qr(rng.standard_normal((6, inst.k)))[0].T
    sol = VectorSolution(V, "crude")
    w = LPWeights(rng.dirichlet(np.ones(inst.k), size=inst.n), 0.0)
    p = SeparatorParams.for_instance(inst.n, inst.k, seed=7)
    assert round_lp_sdp(inst, sol, w, p, batch=64) == round_lp_sdp(inst, sol, w, p, batch=64)


def test_gaussian_on_integral(planted_case):
    inst, lab = planted_case
    out = round_gaussian(inst, integral_solution(lab, "standard", d=3), np.random.default_rng(0))
    assert out == lab
    with pytest.raises(ValueError):
        round_gaussian(inst, integral_solution(lab, "crude"), np.random.default_rng(0))


def test_threshold_rounding():
    V = np.zeros((3, 3, 2))
    V[0, 1, 0] = 1.0
    V[1, 0, 0], V[1, 2, 1] = np.sqrt(0.4), np.sqrt(0.6)
    V[2, 0, 0], V[2, 1, 1] = np.sqrt(0.5), np.sqrt(0.5)
    lab = round_threshold(VectorSolution(V, "standard"))
    # ties go to the first label
    assert lab.x.tolist() == [1, 2, 0]
    with pytest.raises(ValueError):
        round_threshold(VectorSolution(V, "crude"))


def test_separators_reject_standard(planted_case):
    inst, lab = planted_case
    w = LPWeights(layer_weights(lab, inst.k), 0.0)
    with pytest.raises(ValueError):
        sample_separator(integral_solution(lab), w, SeparatorParams.for_instance(inst.n, inst.k),
                         np.random.default_rng(0))


def test_value_of_layer_rounding(planted_case):
    inst, lab = planted_case
    w = LPWeights(layer_weights(lab, inst.k), 0.0)
    out = round_lp_sdp(inst, integral_solution(lab, "crude"), w, SeparatorParams.for_instance(inst.n, inst.k))
    assert value(inst, out) == value(inst, lab)
