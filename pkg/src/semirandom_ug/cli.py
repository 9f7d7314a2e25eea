"""Command line entry point: ``semirandom-ug <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import harness, io, oracle, pipeline, sdp
from .core import value
from .generators import ADVERSARIES, GRAPH_KINDS, GenConfig, generate
from .lp import solve_lp
from .rounding import SeparatorParams, round_gaussian, round_lp_sdp, round_threshold

log = logging.getLogger("semirandom_ug")

FLAVORS = ("standard", "crude", "shift")


def _load_instance(path):
    return io.instance_from_json(io.read_json(path))


def _load_solution(path):
    return io.solution_from_json(io.read_json(path))


def cmd_gen(args):
    cfg = GenConfig(n=args.n, k=args.k, eps=args.eps, model=args.model, m=args.m, deg=args.deg,
                    adversary=args.adversary, linear=args.linear, seed=args.seed, graph=args.graph,
                    graph_file=args.graph_file, fixed_size=args.fixed_size)
    inst, truth = generate(cfg)
    io.write_json(args.out, io.instance_to_json(inst))
    io.write_json(args.truth or io.truth_path(args.out), io.truth_to_json(truth))
    print(f"wrote {args.out}: n={inst.n} k={inst.k} m={inst.m} corrupted={len(truth.corrupted)}")
    return 0


def cmd_sdp(args):
    inst = _load_instance(args.inp)
    cfg = sdp.SdpConfig(flavor=args.flavor, dim=args.dim, tol_feas=args.tol_feas, tol_opt=args.tol_opt,
                        max_iters=args.max_iters, seed=args.seed)
    solve = {"standard": sdp.solve_standard, "crude": sdp.solve_crude, "shift": sdp.solve_shift_invariant}
    res = solve[args.flavor](inst, cfg)
    io.write_json(args.out, io.solution_to_json(res.solution, res.objective, res.residuals, res.status))
    print(f"objective {res.objective:.6g} status {res.status} iterations {res.iterations}")
    return 0


def cmd_lp(args):
    inst = _load_instance(args.inp)
    sol = _load_solution(args.sdp)
    gamma = sdp.super_short_edges(sol, inst, args.eta, args.cstar)
    w = solve_lp(gamma, inst)
    io.write_json(args.out, io.weights_to_json(w))
    print(f"|Gamma| = {len(gamma)}  LP value {w.objective:.6g}")
    return 0


def cmd_round(args):
    inst = _load_instance(args.inp)
    sol = _load_solution(args.sdp)
    if args.method == "lpsdp":
        if args.lp is None:
            raise SystemExit("round --method lpsdp needs --lp weights.json")
        w = io.weights_from_json(io.read_json(args.lp))
        lab = round_lp_sdp(inst, sol, w, SeparatorParams.for_instance(inst.n, inst.k, args.seed))
    elif args.method == "cmm":
        lab = round_gaussian(inst, sol, np.random.default_rng(args.seed))
    else:
        lab = round_threshold(sol)
    val = value(inst, lab)
    io.write_json(args.out, io.labeling_to_json(lab, {"value": val, "method": args.method}))
    print(f"value {val:.6g}")
    return 0


def _write_report(path, report):
    io.write_json(path, io.report_to_json(report))


def cmd_pipeline(args):
    inst = _load_instance(args.inp)
    res = pipeline.PIPELINES[args.model](inst, seed=args.seed)
    report = dict(res.report, labeling=res.labeling.x)
    _write_report(args.report, report)
    print(f"value {res.value:.6g}")
    return 0


def cmd_distinguish(args):
    inst = _load_instance(args.inp)
    side = io.truth_path(args.inp)
    if side.exists():
        model = io.read_json(side).get("model")
        if model is not None and model != 2:
            log.warning("truth sidecar says model %s; the distinguisher is only meaningful on model-2 "
                        "instances with random corruption", model)
    report = pipeline.distinguish(inst, args.eps, seed=args.seed)
    _write_report(args.report, report)
    print(f"{report['verdict']} (objective {report['sdp_objective']:.6g}, threshold {report['threshold']:.6g})")
    return 0


def cmd_oracle(args):
    inst = _load_instance(args.inp)
    lab, val = oracle.brute_force_opt(inst)
    io.write_json(args.out, io.labeling_to_json(lab, {"value": val}))
    print(f"optimum {val:.6g}")
    return 0


def cmd_eval(args):
    config = harness.load_config(args.config)
    rows = harness.run_experiment(config, args.out)
    checks = harness.run_checks(rows, config.get("checks", []))
    for c in checks:
        print(c.line())
    errors = sum(1 for r in rows if r.get("status") == "error")
    if errors:
        print(f"{errors} runs failed; see the error column of {args.out}")
    return 0 if all(c.passed for c in checks) else 1


def cmd_plot(args):
    rows = harness.read_csv(args.inp)
    text = harness.plot_columns(rows, args.x, args.y)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="semirandom-ug", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a semi-random instance and its truth sidecar")
    g.add_argument("--model", type=int, choices=(1, 2, 3), required=True)
    g.add_argument("--n", type=int, required=True)
    size = g.add_mutually_exclusive_group()
    size.add_argument("--m", type=int)
    size.add_argument("--deg", type=float)
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--eps", type=float, required=True)
    g.add_argument("--adversary", choices=ADVERSARIES, default="random-replacement")
    g.add_argument("--linear", action="store_true")
    g.add_argument("--graph", choices=GRAPH_KINDS, default="gnm")
    g.add_argument("--graph-file")
    g.add_argument("--fixed-size", action="store_true", help="corrupt exactly floor(eps m) edges")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--truth")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("sdp", help="solve one of the vector programs")
    s.add_argument("--flavor", choices=FLAVORS, default="standard")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--dim", type=int)
    s.add_argument("--tol-feas", type=float, default=1e-5)
    s.add_argument("--tol-opt", type=float, default=1e-9)
    s.add_argument("--max-iters", type=int, default=4000)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_sdp)

    lp = sub.add_parser("lp", help="LP weights on the super-short edges of a unit-vector solution")
    lp.add_argument("--in", dest="inp", required=True)
    lp.add_argument("--sdp", required=True)
    lp.add_argument("--eta", type=float, default=pipeline.MODEL1_ETA)
    lp.add_argument("--cstar", type=float, default=1.0)
    lp.add_argument("--out", required=True)
    lp.set_defaults(func=cmd_lp)

    r = sub.add_parser("round", help="round a vector solution to a labeling")
    r.add_argument("--method", choices=("lpsdp", "cmm", "threshold"), required=True)
    r.add_argument("--in", dest="inp", required=True)
    r.add_argument("--sdp", required=True)
    r.add_argument("--lp")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_round)

    pl = sub.add_parser("pipeline", help="run the end-to-end algorithm for one model")
    pl.add_argument("--model", type=int, choices=(1, 2, 3), required=True)
    pl.add_argument("--in", dest="inp", required=True)
    pl.add_argument("--seed", type=int, default=0)
    pl.add_argument("--report", required=True)
    pl.set_defaults(func=cmd_pipeline)

    d = sub.add_parser("distinguish", help="SDP-value test against eps/32")
    d.add_argument("--in", dest="inp", required=True)
    d.add_argument("--eps", type=float, required=True)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--report", required=True)
    d.set_defaults(func=cmd_distinguish)

    o = sub.add_parser("oracle", help="exhaustive optimum of a tiny instance")
    o.add_argument("--in", dest="inp", required=True)
    o.add_argument("--out", required=True)
    o.set_defaults(func=cmd_oracle)

    e = sub.add_parser("eval", help="run an experiment config and its checks")
    e.add_argument("--config", required=True)
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_eval)

    pt = sub.add_parser("plot", help="gnuplot-ready columns from a results CSV")
    pt.add_argument("--in", dest="inp", required=True)
    pt.add_argument("--x", default="eps")
    pt.add_argument("--y", default="value")
    pt.add_argument("--out")
    pt.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, oracle.SizeGuardError, io.FormatError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
