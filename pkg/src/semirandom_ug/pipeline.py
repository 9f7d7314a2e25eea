"""End-to-end algorithms for the three semi-random models and the SDP-value distinguisher.

Every pipeline takes a single integer seed; the seeds of the stages are derived from
it with ``SeedSequence`` so reruns are reproducible.  Pipelines never look at ground
truth; evaluation against a truth sidecar happens in the harness.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from . import sdp
from .core import Labeling, UGInstance, value
from .lp import solve_lp
from .rounding import SeparatorParams, round_gaussian, round_lp_sdp, round_threshold

log = logging.getLogger(__name__)

MODEL1_ETA = 0.2
LONG_ETA = 1.0 / 16
LONG_ETA_LINEAR = 1.0 / 32
DISTINGUISH_FACTOR = 1.0 / 32


@dataclass
class PipelineResult:
    labeling: Labeling
    report: dict
    artifacts: dict = field(default_factory=dict)

    @property
    def value(self) -> float:
        return self.report["value"]


def _stage_seeds(seed, count):
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(count)]


def _sdp_summary(res: sdp.SdpResult, prefix="sdp"):
    return {
        f"{prefix}_objective": res.objective,
        f"{prefix}_status": res.status,
        f"{prefix}_iterations": res.iterations,
        f"{prefix}_residuals": res.residuals,
    }


def solve_model1(inst: UGInstance, eta: float = MODEL1_ETA, cstar: float = 1.0, seed: int = 0,
                 cfg: sdp.SdpConfig | None = None) -> PipelineResult:
    """Crude program, super-short edges, LP weights, separator rounding."""
    s_sdp, s_round = _stage_seeds(seed, 2)
    cfg = replace(cfg or sdp.SdpConfig(flavor="crude"), flavor="crude", seed=s_sdp)
    res = sdp.solve_crude(inst, cfg)
    gamma = sdp.super_short_edges(res.solution, inst, eta, cstar)
    weights = solve_lp(gamma, inst)
    params = SeparatorParams.for_instance(inst.n, inst.k, s_round)
    lab = round_lp_sdp(inst, res.solution, weights, params)
    report = {"pipeline": "model1", "seed": seed, "eta": eta, "cstar": cstar, "m": inst.m,
              **_sdp_summary(res), "gamma_size": len(gamma), "gamma_threshold": gamma.threshold,
              "lp_value": weights.objective, "value": value(inst, lab)}
    return PipelineResult(lab, report, {"sdp": res, "gamma": gamma, "weights": weights})


def solve_model2(inst: UGInstance, eta: float | None = None, seed: int = 0,
                 cfg: sdp.SdpConfig | None = None) -> PipelineResult:
    """Drop long edges of the first SDP solution, re-solve on the rest, Gaussian rounding.

    Linear instances use the shift-invariant program and its per-label length for the
    pruning step.  The labeling is evaluated on the full edge set.
    """
    s_first, s_second, s_round = _stage_seeds(seed, 3)
    cfg = cfg or sdp.SdpConfig()
    if inst.is_linear:
        eta = LONG_ETA_LINEAR if eta is None else eta
        first = sdp.solve_shift_invariant(inst, replace(cfg, flavor="shift", seed=s_first))
    else:
        eta = LONG_ETA if eta is None else eta
        first = sdp.solve_standard(inst, replace(cfg, flavor="standard", seed=s_first))
    part = sdp.classify_long_edges(first.solution, inst, eta)
    kept = inst.subgraph(part.short)
    report = {"pipeline": "model2", "seed": seed, "eta": eta, "m": inst.m, "linear": inst.is_linear,
              **_sdp_summary(first, "sdp"), "removed": part.num_long}
    artifacts = {"sdp": first, "long": part}
    if kept.m == 0:
        log.warning("every edge was removed as long; returning the all-zero labeling")
        lab = Labeling(np.zeros(inst.n, dtype=np.int64), inst.k)
    else:
        second = sdp.solve_standard(kept, replace(cfg, flavor="standard", seed=s_second))
        lab = round_gaussian(kept, second.solution, np.random.default_rng(s_round))
        report.update(_sdp_summary(second, "sdp2"))
        artifacts["sdp2"] = second
    report["value"] = value(inst, lab)
    return PipelineResult(lab, report, artifacts)


def solve_model3(inst: UGInstance, seed: int = 0, cfg: sdp.SdpConfig | None = None) -> PipelineResult:
    """Standard SDP followed by norm-threshold rounding."""
    (s_sdp,) = _stage_seeds(seed, 1)
    res = sdp.solve_standard(inst, replace(cfg or sdp.SdpConfig(), flavor="standard", seed=s_sdp))
    lab = round_threshold(res.solution)
    report = {"pipeline": "model3", "seed": seed, "m": inst.m, **_sdp_summary(res), "value": value(inst, lab)}
    return PipelineResult(lab, report, {"sdp": res})


def verdict_for(objective: float, eps: float) -> str:
    return "semi-random-unsat" if objective >= eps * DISTINGUISH_FACTOR else "almost-satisfiable"


def distinguish(inst: UGInstance, eps: float, seed: int = 0, cfg: sdp.SdpConfig | None = None) -> dict:
    """Verdict from the standard SDP value against the threshold eps/32."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError("eps must lie in [0, 1]")
    (s_sdp,) = _stage_seeds(seed, 1)
    res = sdp.solve_standard(inst, replace(cfg or sdp.SdpConfig(), flavor="standard", seed=s_sdp))
    return {"pipeline": "distinguish", "seed": seed, "eps": eps, "threshold": eps * DISTINGUISH_FACTOR,
            **_sdp_summary(res), "verdict": verdict_for(res.objective, eps)}


PIPELINES = {1: solve_model1, 2: solve_model2, 3: solve_model3}
