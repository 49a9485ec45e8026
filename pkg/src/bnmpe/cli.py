"""Command-line front end: ``bnmpe {validate,enumerate,solve,bench,gen,baseline}``.

Exit codes: 0 success, 1 validation or semantic error, 2 I/O error,
3 enumeration or refinement cap exceeded.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import baselines, bench
from .baselines import CapExceeded
from .ga import SELECTORS, GaConfig, run
from .io import (GeneratorSpec, NetworkFormatError, format_assignment, generate_random_network,
                 parse_assignment, parse_evidence, parse_network, serialize_network)
from .network import NO_EVIDENCE, Evaluator, log_joint_probability, state_space_size, validate_network

EXIT_OK, EXIT_SEMANTIC, EXIT_IO, EXIT_CAP = 0, 1, 2, 3


def _read(path) -> str:
    return Path(path).read_text(encoding="utf-8")


def _load(args):
    net = parse_network(_read(args.net))
    evidence = parse_evidence(_read(args.evidence)) if getattr(args, "evidence", None) else NO_EVIDENCE
    evidence.resolve(net)
    return net, evidence


def _emit(args, payload: dict, text: str):
    if getattr(args, "json", False):
        print(json.dumps(payload, indent=2))
    else:
        print(text)


def _oracle(args, net, evidence, k=50):
    """Load ``--oracle PATH`` or compute one when the value is ``compute``."""
    source = getattr(args, "oracle", None)
    if source is None:
        return None
    if source == "compute":
        return baselines.enumerate_top_k(net, evidence, k=max(k, 50))
    return bench.load_oracle(_read(source), net, evidence)


def _ga_config(args, **overrides) -> GaConfig:
    base = GaConfig()
    values = {
        "evolving_population": args.pop if args.pop is not None else base.evolving_population,
        "average_lifetime": args.lifetime if args.lifetime is not None else base.average_lifetime,
        "mutation_frequency": args.mutation if args.mutation is not None else base.mutation_frequency,
        "breeding_selectivity": (args.selectivity if args.selectivity is not None
                                 else base.breeding_selectivity),
        "max_generations": args.max_gens if args.max_gens is not None else base.max_generations,
        "selector": args.selector or base.selector,
        "seed": args.seed,
    }
    values.update(overrides)
    return GaConfig(**values)


def cmd_validate(args) -> int:
    try:
        text = _read(args.net)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        net = parse_network(text)
    except NetworkFormatError as exc:
        _emit(args, {"ok": False, "violations": [str(exc)]}, f"invalid: {exc}")
        return EXIT_SEMANTIC
    problems = validate_network(net)
    payload = {
        "ok": not problems,
        "network": net.name,
        "nodes": len(net),
        "state_space_size": state_space_size(net),
        "violations": [str(p) for p in problems],
    }
    text = f"{net.name}: {len(net)} nodes, {state_space_size(net)} states, " + (
        "ok" if not problems else "\n".join(str(p) for p in problems))
    _emit(args, payload, text)
    return EXIT_OK if not problems else EXIT_SEMANTIC


def cmd_enumerate(args) -> int:
    net, evidence = _load(args)
    ranked = baselines.enumerate_top_k(net, evidence, k=args.k, cap=args.cap)
    doc = bench.oracle_document(net, evidence, ranked)
    if args.out:
        bench.write_atomic(args.out, json.dumps(doc, indent=2) + "\n")
    lines = [f"{net.name}: visited {ranked.visited} assignments, total mass {ranked.total_mass:.12g}"]
    for s in doc["solutions"][: args.show]:
        lines.append(f"{s['rank']:>4}  {s['assignment']}  p={s['probability']:.6g}  "
                     f"cum={s['cumulative_mass']:.4f}")
    if doc["solutions"]:
        lines.append(f"top-{len(ranked)} cumulative mass {doc['solutions'][-1]['cumulative_mass']:.6g}")
    _emit(args, doc, "\n".join(lines))
    return EXIT_OK


def cmd_solve(args) -> int:
    net, evidence = _load(args)
    cfg = _ga_config(args)
    result = run(net, evidence, cfg)
    oracle = _oracle(args, net, evidence)
    rank = oracle.rank_of(result.best.genotype) if oracle is not None else None
    payload = {
        "network": net.name,
        "config": cfg.as_dict(),
        "assignment": format_assignment(result.best.genotype),
        "probability": math.exp(result.best.log_phenotype),
        "log_probability": result.best.log_phenotype,
        "rank": rank,
        "G": result.G,
        "Gc": result.Gc,
        "evaluations_at_G": result.evaluations_at_G,
        "evaluations_at_Gc": result.evaluations_at_Gc,
        "evaluations": result.evaluations,
        "fraction_evaluated": result.fraction_evaluated,
        "generations": result.generations,
    }
    if args.trajectory:
        bench.write_atomic(args.trajectory, bench.trajectory_csv(result))
    if args.out:
        bench.write_atomic(args.out, json.dumps(payload, indent=2) + "\n")
    text = "\n".join([
        f"best        {payload['assignment']}",
        f"probability {payload['probability']:.6g} (log {payload['log_probability']:.6f})",
        f"rank        {rank if rank is not None else '-'}",
        f"G           {result.G}",
        f"Gc          {result.Gc if result.Gc is not None else 'not converged'}",
        f"evaluations {result.evaluations_at_G} at G, "
        f"{result.evaluations_at_Gc if result.evaluations_at_Gc is not None else '-'} at Gc, "
        f"{result.evaluations} total ({100 * result.fraction_evaluated:.4g}% of the space)",
    ])
    _emit(args, payload, text)
    return EXIT_OK


def cmd_bench(args) -> int:
    net, evidence = _load(args)
    oracle = _oracle(args, net, evidence)
    selectors = tuple(args.selector.split(",")) if args.selector else ("uniform",)
    for s in selectors:
        if s not in SELECTORS:
            raise ValueError(f"unknown selector {s!r}")
    spec = bench.BenchSpec(net, evidence, selectors, runs=args.runs, master_seed=args.seed,
                           config=_ga_config(args, selector=selectors[0]), oracle=oracle,
                           jobs=args.jobs)
    out = Path(args.out)
    finished = []
    try:
        rows, summary = bench.run_bench(spec, on_row=finished.append)
    except KeyboardInterrupt:
        if finished:
            bench.write_atomic(out / "runs.csv", bench.runs_csv(finished))
        raise
    bench.write_atomic(out / "runs.csv", bench.runs_csv(rows))
    bench.write_atomic(out / "summary.json", json.dumps(summary, indent=2) + "\n")
    lines = []
    for sel, e in summary["selectors"].items():
        tops = " ".join(f"TOP{n}={e[f'top{n}']:.0f}%" if e[f"top{n}"] is not None else f"TOP{n}=-"
                        for n in bench.TOP_N)
        lines.append(f"{sel:<13} {tops} rank={_fmt(e['rank_mean'])} G={_fmt(e['G_mean'])} "
                     f"Gc={_fmt(e['Gc_mean'])} (missing {e['Gc_missing']}) "
                     f"evalG={_fmt(e['eval_G_mean'])} evalGc={_fmt(e['eval_Gc_mean'])} "
                     f"runs={e['runs']}")
    _emit(args, summary, "\n".join(lines))
    return EXIT_OK


def _fmt(x):
    return "-" if x is None else f"{x:.4g}"


def _parse_states(text: str):
    """``2x15,3x5`` -> [(2, 15), (3, 5)]; a bare ``2`` means every node is binary."""
    out = []
    for part in text.split(","):
        k, _, n = part.partition("x")
        out.append((int(k), int(n)) if n else (int(k),))
    if len(out) == 1 and len(out[0]) == 1:
        return [out[0][0]]
    return [p if len(p) == 2 else (p[0], 1) for p in out]


def cmd_gen(args) -> int:
    spec = GeneratorSpec(args.nodes, _parse_states(args.states), target_cycles=args.cycles,
                         max_parents=args.max_parents, seed=args.seed, name=args.name)
    net = generate_random_network(spec)
    text = serialize_network(net)
    if args.out:
        bench.write_atomic(args.out, text)
        _emit(args, {"network": net.name, "path": args.out,
                     "state_space_size": state_space_size(net)},
              f"wrote {args.out}: {len(net)} nodes, {state_space_size(net)} states")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_baseline(args) -> int:
    net, evidence = _load(args)
    rng = np.random.default_rng(args.seed)
    evaluator = Evaluator(net)
    oracle = _oracle(args, net, evidence)
    if args.algorithm == "greedy":
        best = baselines.greedy_restarts(net, evidence, args.budget, rng, evaluator)
    elif args.algorithm == "random":
        best = baselines.random_search(net, evidence, args.budget, rng, evaluator)
    else:
        if args.center:
            center = parse_assignment(args.center, net)
        elif oracle is not None and len(oracle):
            center = oracle.assignments[0]
        else:
            raise ValueError("refine needs --center or an oracle")
        best = baselines.local_refine(net, evidence, center, args.radius, metric=args.metric,
                                      evaluator=evaluator)
    lp = log_joint_probability(net, best)
    rank = oracle.rank_of(best) if oracle is not None else None
    payload = {
        "algorithm": args.algorithm,
        "assignment": format_assignment(best),
        "probability": math.exp(lp),
        "log_probability": lp,
        "evaluations": evaluator.count,
        "rank": rank,
    }
    if args.out:
        bench.write_atomic(args.out, json.dumps(payload, indent=2) + "\n")
    _emit(args, payload,
          f"{args.algorithm}: {payload['assignment']}  p={payload['probability']:.6g}  "
          f"evaluations={evaluator.count}  rank={rank if rank is not None else '-'}")
    return EXIT_OK


def _ga_flags(p):
    p.add_argument("--pop", type=int, help="evolving population size")
    p.add_argument("--lifetime", type=float, help="average lifetime in generations")
    p.add_argument("--mutation", type=float, help="mutation frequency")
    p.add_argument("--selector", help="uniform | proportional | transformed (comma list for bench)")
    p.add_argument("--selectivity", type=float, help="breeding selectivity in (0, 1]")
    p.add_argument("--max-gens", type=int, help="generation limit")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bnmpe", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, net=True, evidence=True):
        if net:
            p.add_argument("--net", required=True, help="network file (.bnet)")
        if evidence:
            p.add_argument("--evidence", help="evidence file (.ev)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out")
        p.add_argument("--json", action="store_true", help="print JSON instead of text")

    p = sub.add_parser("validate", help="check a network file")
    common(p, evidence=False)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("enumerate", help="exact top-k by exhaustive enumeration")
    common(p)
    p.add_argument("--k", type=int, default=50)
    p.add_argument("--cap", type=int, default=baselines.DEFAULT_ENUMERATION_CAP)
    p.add_argument("--show", type=int, default=10, help="rows to print")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("solve", help="one seeded GA run")
    common(p)
    _ga_flags(p)
    p.add_argument("--trajectory", help="write per-generation CSV here")
    p.add_argument("--oracle", help="oracle JSON or 'compute'")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="many seeded GA runs scored against an oracle")
    common(p)
    _ga_flags(p)
    p.add_argument("--runs", type=int, default=20)
    p.add_argument("--oracle", help="oracle JSON or 'compute'")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_bench, out="bench-out")

    p = sub.add_parser("gen", help="write a random network")
    common(p, net=False, evidence=False)
    p.add_argument("--nodes", type=int, required=True)
    p.add_argument("--states", default="2", help="e.g. 2x15,3x5")
    p.add_argument("--cycles", type=int, default=0)
    p.add_argument("--max-parents", type=int, default=3)
    p.add_argument("--name")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("baseline", help="greedy, random or local-refinement search")
    common(p)
    p.add_argument("--algorithm", choices=("greedy", "random", "refine"), required=True)
    p.add_argument("--budget", type=int, default=1000, help="evaluation budget")
    p.add_argument("--radius", type=int, default=2)
    p.add_argument("--metric", choices=("difference", "hamming"), default="difference")
    p.add_argument("--center", help="1-based assignment, e.g. '1 2 2 1 ...'")
    p.add_argument("--oracle", help="oracle JSON or 'compute'")
    p.set_defaults(func=cmd_baseline)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CapExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NetworkFormatError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SEMANTIC


if __name__ == "__main__":
    sys.exit(main())
