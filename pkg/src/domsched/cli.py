"""Command-line entry point: campaigns, single-instance runs and self-checks."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import kernels, maxsum
from .experiments import (ExperimentConfig, certify_graph, certify_theorem, emit_results,
                          generate_instance, run_reuse1_baseline, run_static_experiment)
from .maxsum import Problem
from .network import NetworkInstance
from .oracle import InstanceTooLargeError, exhaustive_optimum
from .region import project_indices
from .utility import build_utility_tables, parse_utility, total_utility


def _int_list(text: str) -> tuple:
    return tuple(int(t) for t in text.split(",") if t.strip())


def _on_off(text: str) -> bool:
    if text.lower() not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected on or off")
    return text.lower() == "on"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="domsched", description=__doc__)
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="multi-drop static campaign")
    r.add_argument("--scenario", choices=["apartment", "road", "synthetic"], default="apartment")
    r.add_argument("--drops", type=int, default=100)
    r.add_argument("--utility", choices=["log", "sumrate", "betafair"], default="log")
    r.add_argument("--beta", type=float, default=1.0)
    r.add_argument("--bp-iters", type=_int_list, default=(1, 4))
    r.add_argument("--damping", type=float, default=1.0,
                   help="damping of the fixed-iteration runs")
    r.add_argument("--converged-damping", type=float, default=0.5)
    r.add_argument("--max-iters", type=int, default=200)
    r.add_argument("--tol", type=float, default=1e-6)
    r.add_argument("--oracle", type=_on_off, default=False)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--workers", type=int, default=1)
    r.add_argument("--config", type=Path, help="JSON file; its keys override the flags")
    r.add_argument("--dump-instances", action="store_true")
    r.add_argument("--out", type=Path, required=True)

    s = sub.add_parser("solve", help="BP on one saved or generated instance")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--instance", type=Path, help="instance JSON written by --dump-instances")
    src.add_argument("--scenario", choices=["apartment", "road", "synthetic"])
    s.add_argument("--drop", type=int, default=0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--utility", choices=["log", "sumrate", "betafair"], default="log")
    s.add_argument("--beta", type=float, default=1.0)
    s.add_argument("--damping", type=float, default=0.5)
    s.add_argument("--max-iters", type=int, default=200)
    s.add_argument("--tol", type=float, default=1e-6)
    s.add_argument("--oracle", type=_on_off, default=False)
    s.add_argument("--trace", type=Path, help="write per-iteration JSON lines here")
    s.add_argument("--save-instance", type=Path)

    t = sub.add_parser("check-theorem", help="BP fixed points against the exhaustive optimum")
    t.add_argument("--instances", type=int, default=500)
    t.add_argument("--n", type=_int_list, default=(2, 3, 4))
    t.add_argument("--grid", type=_int_list, default=(5, 10, 25))
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--min-converged", type=float, default=0.9)

    g = sub.add_parser("check-graph", help="single-cycle property of random sigma maps")
    g.add_argument("--trials", type=int, default=10000)
    g.add_argument("--n", type=int, default=50)
    g.add_argument("--seed", type=int, default=0)
    return p


def cmd_run(args) -> int:
    doc = {"scenario": args.scenario, "drops": args.drops, "utility": args.utility,
           "beta": args.beta, "bp_iters": args.bp_iters, "damping": args.damping,
           "converged_damping": args.converged_damping, "max_iters": args.max_iters,
           "tol": args.tol, "oracle": args.oracle, "seed": args.seed, "workers": args.workers}
    if args.config is not None:
        doc.update(json.loads(args.config.read_text()))
    cfg = ExperimentConfig.from_dict(doc)
    report = run_static_experiment(cfg)
    paths = emit_results(report, args.out, dump_instances=args.dump_instances)
    summary = report.summary()
    for m, pct in summary["percentiles"].items():
        print(f"{m:>10}  p10 {pct['p10']:.4f}  p50 {pct['p50']:.4f}")
    print(f"converged {summary['converged']}/{summary['drops']}; wrote {paths['cdf']} and {paths['report']}")
    return 0


def cmd_solve(args) -> int:
    if args.instance is not None:
        inst = NetworkInstance.load(args.instance)
    else:
        cfg = ExperimentConfig(scenario=args.scenario, drops=1, seed=args.seed)
        inst, _ = generate_instance(cfg, args.drop)
    if args.save_instance is not None:
        inst.save(args.save_instance)
    kind = parse_utility(args.utility, args.beta)
    problem = Problem(inst, build_utility_tables(inst, kind))
    trace = open(args.trace, "w") if args.trace else None
    try:
        res = maxsum.run(problem, max_iters=args.max_iters, damping=args.damping, tol=args.tol, trace=trace)
    finally:
        if trace is not None:
            trace.close()
    x = project_indices(inst, res.decisions)
    out = {"converged": res.converged, "iterations": res.iterations_used,
           "tie_resolution": res.tie_resolution,
           "rates": inst.grid.points[x].tolist(),
           "reuse1_rates": run_reuse1_baseline(inst).tolist(),
           "utility": total_utility(problem.tables, problem.sigma, x)}
    if args.oracle:
        try:
            opt = exhaustive_optimum(problem)
            out["oracle_rates"] = inst.grid.points[opt.x].tolist()
            out["oracle_utility"] = opt.utility
        except InstanceTooLargeError as exc:
            logging.warning("oracle skipped: %s", exc)
    print(json.dumps(out, indent=2))
    return 0


def cmd_check_theorem(args) -> int:
    res = certify_theorem(args.instances, args.n, args.grid, seed=args.seed)
    frac = res.converged_fraction
    print(f"instances {res.instances}  converged {res.converged} ({frac:.1%})  "
          f"violations {len(res.violations)}  max |gap| {res.max_gap:.3g}  ties {res.tie_resolution}")
    for v in res.violations[:10]:
        print("violation:", json.dumps(v))
    return 0 if not res.violations and frac >= args.min_converged else 1


def cmd_check_graph(args) -> int:
    res = certify_graph(args.trials, args.n, seed=args.seed)
    print(f"trials {args.trials} per variant, n {args.n}: {len(res['violations'])} violations")
    for v in res["violations"][:10]:
        print("violation:", json.dumps(v))
    return 0 if not res["violations"] else 1


COMMANDS = {"run": cmd_run, "solve": cmd_solve, "check-theorem": cmd_check_theorem,
            "check-graph": cmd_check_graph}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger(__name__).debug("kernel backend: %s", kernels.BACKEND)
    try:
        return COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
