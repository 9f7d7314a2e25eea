"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The harness-driven criteria share one run of configs/acceptance.json.  The whole
module takes roughly an hour on one core.
"""

import math
from pathlib import Path

import numpy as np
import pytest

from semirandom_ug import harness, io, pipeline, sdp
from semirandom_ug.core import UGInstance, integral_solution, value
from semirandom_ug.generators import (
    GenConfig, amplify_degree, gen_graph, generate, random_2to2_game, reduce_2to2,
)
from semirandom_ug.lp import LPWeights, solve_lp
from semirandom_ug.oracle import brute_force_2to2, brute_force_opt
from semirandom_ug.rounding import SeparatorParams, round_lp_sdp, separator_batch

CONFIG = Path(__file__).resolve().parents[1] / "configs" / "acceptance.json"
VERDICTS = []


def report(number, title, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2} {title}: {detail}"
    VERDICTS.append(line)
    print(line)
    return passed


@pytest.fixture(scope="session")
def sweep(tmp_path_factory):
    out = tmp_path_factory.mktemp("acceptance") / "results.csv"
    rows = harness.run_experiment(CONFIG, out)
    return rows


@pytest.fixture(scope="session")
def model1_solution():
    """A solved crude program on a desk-scale model-1 instance."""
    inst, truth = generate(GenConfig(n=100, k=8, eps=0.05, model=1, deg=84, seed=101))
    res = sdp.solve_crude(inst, sdp.SdpConfig(flavor="crude", seed=5))
    return inst, truth, res


# 1 ----------------------------------------------------------------------------

def _tiny_instance(rng):
    n = int(rng.integers(2, 7))
    k = int(rng.integers(2, 4))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    m = int(rng.integers(1, len(pairs) + 1))
    pick = sorted(rng.choice(len(pairs), size=m, replace=False))
    perms = np.array([rng.permutation(k) for _ in range(m)])
    return UGInstance.from_edges(n, k, [pairs[i] for i in pick], perms=perms)


def test_relaxation_soundness():
    rng = np.random.default_rng(1)
    worst = -math.inf
    for t in range(200):
        inst = _tiny_instance(rng)
        opt = brute_force_opt(inst)[1]
        obj = sdp.solve_standard(inst, sdp.SdpConfig(seed=t)).objective
        worst = max(worst, obj - (1 - opt))
    ok = worst <= 1e-3
    report(1, "relaxation soundness", ok,
           f"max over 200 tiny instances of SDP - (1 - opt) = {worst:.2e} (limit 1e-3)")
    assert ok


# 2 ----------------------------------------------------------------------------

def test_separator_marginals(model1_solution):
    inst, truth, res = model1_solution
    sol = res.solution
    rng = np.random.default_rng(2)
    w = LPWeights(rng.dirichlet(np.ones(inst.k), size=inst.n), 0.0)
    params = SeparatorParams.for_instance(inst.n, inst.k)
    alpha, eta, N, chunk = params.alpha, 0.3, 100_000, 5_000

    # 50 (vertex, label) pairs stratified over weight deciles
    flat = w.x.ravel()
    order = np.argsort(flat, kind="stable")
    strata = np.array_split(order, 50)
    picks = np.array([s[rng.integers(len(s))] for s in strata])
    pu, pi = np.divmod(picks, inst.k)

    # 50 super-short edges stratified by the smaller endpoint weight
    gamma = sdp.super_short_edges(sol, inst, eta)
    mins = np.minimum(w.x[gamma.edges[:, 0], gamma.edges[:, 1]], w.x[gamma.edges[:, 2], gamma.edges[:, 3]])
    g_order = np.argsort(mins, kind="stable")
    g_pick = np.array([s[rng.integers(len(s))] for s in np.array_split(g_order, 50)])
    eu, ei, ev, ej = gamma.edges[g_pick].T

    hits = np.zeros(50)
    pair_hits = np.zeros(50)
    for _ in range(N // chunk):
        S = separator_batch(sol, w, params, rng, chunk)
        hits += S[:, pu, pi].sum(axis=0)
        pair_hits += (S[:, eu, ei] & S[:, ev, ej]).sum(axis=0)

    want = alpha * w.x[pu, pi]
    sigma = np.sqrt(want * (1 - want) / N)
    z = np.abs(hits / N - want) / sigma
    floor_ = alpha * mins[g_pick] * (1 - eta)
    emp_pair = pair_hits / N
    pair_sigma = np.sqrt(np.maximum(emp_pair * (1 - emp_pair), floor_ * (1 - floor_)) / N)
    pair_gap = (emp_pair - (floor_ - 3 * pair_sigma)) / pair_sigma

    worst = int(np.argmax(z))
    ok_marg = bool(np.all(z <= 3))
    ok_pair = bool(np.all(pair_gap >= 0))
    report(2, "separator marginals", ok_marg and ok_pair,
           f"max |emp - alpha x| = {z.max():.2f} sigma over 50 pairs (limit 3; worst pair "
           f"{int(hits[worst])} hits vs {want[worst] * N:.1f} expected); "
           f"min pairing slack {pair_gap.min():.2f} sigma over 50 super-short edges "
           f"(|Gamma| = {len(gamma)}, crude status {res.status})")
    assert ok_marg and ok_pair


# 3 ----------------------------------------------------------------------------

def test_rounding_guarantee():
    eta = 0.3
    lines, ok = [], True
    for k, seed in ((4, 31), (8, 32), (16, 33)):
        inst, truth = generate(GenConfig(n=100, k=k, eps=0.1, model=1, deg=60, seed=seed))
        # unit vectors in the planted frame: the planted layer is exact, other labels stay orthogonal
        sol = integral_solution(truth.planted, "crude")
        gamma = sdp.super_short_edges(sol, inst, eta)
        w = solve_lp(gamma, inst)
        xbar = w.objective / inst.m
        vals = np.array([value(inst, round_lp_sdp(inst, sol, w, SeparatorParams.for_instance(inst.n, k, s)))
                         for s in range(200)])
        bound = (1 - eta) * xbar / (2 - (1 - eta) * xbar) - 2 / k
        sigma = vals.std(ddof=1) / math.sqrt(len(vals))
        passed = vals.mean() >= bound - 3 * sigma
        ok &= passed
        lines.append(f"k={k}: mean {vals.mean():.4f} vs bound {bound:.4f} (xbar {xbar:.3f})")
    report(3, "rounding guarantee", ok, "; ".join(lines))
    assert ok


# 4-9 --------------------------------------------------------------------------

def _check(sweep, number, title, check):
    res = harness.check_theorem_stats(sweep, check)
    report(number, title, res.passed, f"{res.detail} (margin {res.margin:+.4f})")
    return res.passed


def test_super_short_edges(sweep):
    assert _check(sweep, 4, "super-short planted edges", "super-short")


def test_model1_end_to_end(sweep):
    assert _check(sweep, 5, "model-1 value", "model1-value")


def test_long_corrupted_edges(sweep):
    general = _check(sweep, 6, "long corrupted edges (general)", "long-corrupted")
    linear = _check(sweep, 6, "long corrupted edges (linear)", "long-corrupted-linear")
    assert general and linear


def test_model2_end_to_end(sweep):
    assert _check(sweep, 7, "model-2 value", "model2-value")


def test_model3_end_to_end(sweep):
    assert _check(sweep, 8, "model-3 value", "model3-value")


def test_distinguisher(sweep):
    assert _check(sweep, 9, "distinguisher", "distinguisher")


# 10 ---------------------------------------------------------------------------

def test_reduction_correctness():
    rng = np.random.default_rng(10)
    never_above = True
    for t in range(100):
        n = int(rng.integers(2, 6))
        k = int(rng.choice([2, 4]))
        edges = gen_graph(n, int(rng.integers(1, n * (n - 1) // 2 + 1)), seed=int(rng.integers(1 << 30)))
        game = random_2to2_game(n, k, edges, rng)
        if brute_force_opt(reduce_2to2(game, seed=t))[1] > brute_force_2to2(game) + 1e-12:
            never_above = False

    sat_values = []
    for t in range(100):
        n, k = 5, 4
        edges = gen_graph(n, 7, seed=1000 + t)
        planted = rng.integers(k, size=n)
        game = random_2to2_game(n, k, edges, rng, planted=planted)
        assert brute_force_2to2(game) == 1.0
        sat_values.append(brute_force_opt(reduce_2to2(game, seed=t))[1])
    sat_mean = float(np.mean(sat_values))

    preserved = True
    for t in range(20):
        game = random_2to2_game(3, 4, gen_graph(3, int(rng.integers(1, 4)), seed=t), rng)
        if abs(brute_force_2to2(amplify_degree(game, 2)) - brute_force_2to2(game)) > 1e-12:
            preserved = False

    ok = never_above and sat_mean >= 0.5 and preserved
    report(10, "2-to-2 reduction", ok,
           f"reduction never above game optimum: {never_above}; mean value on satisfiable games "
           f"{sat_mean:.3f} (bar 0.5); amplification preserves optimum on 20 games: {preserved}")
    assert ok


# 11 ---------------------------------------------------------------------------

def _reports(seed):
    out = []
    inst, _ = generate(GenConfig(n=40, k=4, eps=0.05, model=1, deg=20, seed=seed))
    res = pipeline.solve_model1(inst, eta=0.3, seed=seed)
    out.append(io.dumps(io.report_to_json(dict(res.report, labeling=res.labeling.x))))
    for linear in (False, True):
        inst, _ = generate(GenConfig(n=40, k=4, eps=0.1, model=2, deg=20, seed=seed, linear=linear))
        res = pipeline.solve_model2(inst, seed=seed)
        out.append(io.dumps(io.report_to_json(dict(res.report, labeling=res.labeling.x))))
        out.append(io.dumps(io.report_to_json(pipeline.distinguish(inst, 0.1, seed=seed))))
    inst, _ = generate(GenConfig(n=40, k=4, eps=0.05, model=3, deg=20, seed=seed))
    res = pipeline.solve_model3(inst, seed=seed)
    out.append(io.dumps(io.report_to_json(dict(res.report, labeling=res.labeling.x))))
    return out


def test_determinism(monkeypatch):
    monkeypatch.setenv("UG_THREADS", "1")
    same_reports = _reports(3) == _reports(3)
    cfg = {"master_seed": 5, "reps": 2, "cells": [
        {"pipeline": "model1", "n": 30, "k": 4, "eps": 0.05, "deg": 12, "eta": 0.3},
        {"pipeline": "model3", "n": 30, "k": 4, "eps": 0.05, "deg": 12}]}
    same_csv = harness.to_csv(harness.run_experiment(cfg)) == harness.to_csv(harness.run_experiment(cfg))
    ok = same_reports and same_csv
    report(11, "determinism", ok, f"pipeline reports identical: {same_reports}; harness CSV identical: {same_csv}")
    assert ok
