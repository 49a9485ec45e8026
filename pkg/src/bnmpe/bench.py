"""Multi-run experiment harness: oracle files, run scoring and summary tables."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import statistics
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .baselines import RankedSolutions
from .ga import GaConfig, RunResult, run
from .io import format_assignment, parse_assignment, serialize_evidence, serialize_network
from .network import NO_EVIDENCE, Evidence, Network, state_space_size

ORACLE_FORMAT = "bnmpe-oracle/1"
TOP_N = (1, 10, 50)

RUN_FIELDS = [
    "selector", "run", "seed", "assignment", "probability", "log_probability", "rank",
    "G", "Gc", "evaluations_at_G", "evaluations_at_Gc", "evaluations",
    "fraction_evaluated", "evolving_population",
]

TRAJECTORY_FIELDS = [
    "generation", "evaluations", "offline", "offline_log", "online",
    "population_mass", "improvement_fraction", "mode_fraction",
]


class StaleOracle(ValueError):
    """Oracle file was computed for a different network or evidence."""


def write_atomic(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def instance_digest(net: Network, evidence: Evidence = NO_EVIDENCE) -> str:
    payload = serialize_network(net) + "\n#evidence\n" + serialize_evidence(net, evidence) + "\n"
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def oracle_document(net: Network, evidence: Evidence, ranked: RankedSolutions) -> dict:
    cumulative = ranked.cumulative_mass
    return {
        "format": ORACLE_FORMAT,
        "network": net.name,
        "digest": instance_digest(net, evidence),
        "evidence": serialize_evidence(net, evidence),
        "k": len(ranked),
        "visited": ranked.visited,
        "total_mass": ranked.total_mass,
        "solutions": [
            {
                "rank": i + 1,
                "assignment": format_assignment(a),
                "probability": float(math.exp(lp)),
                "log_probability": float(lp),
                "cumulative_mass": float(cumulative[i]),
            }
            for i, (a, lp) in enumerate(zip(ranked.assignments, ranked.log_probabilities))
        ],
    }


def dump_oracle(net: Network, evidence: Evidence, ranked: RankedSolutions) -> str:
    return json.dumps(oracle_document(net, evidence, ranked), indent=2) + "\n"


def load_oracle(text: str, net: Network, evidence: Evidence = NO_EVIDENCE) -> RankedSolutions:
    doc = json.loads(text)
    if doc.get("format") != ORACLE_FORMAT:
        raise ValueError(f"not an oracle file (format {doc.get('format')!r})")
    if doc["digest"] != instance_digest(net, evidence):
        raise StaleOracle(
            f"oracle was computed for another instance ({doc.get('network')!r}, "
            f"evidence {doc.get('evidence')!r})")
    assignments = [parse_assignment(s["assignment"], net) for s in doc["solutions"]]
    lps = np.array([s["log_probability"] for s in doc["solutions"]], dtype=float)
    return RankedSolutions(assignments, lps, float(doc["total_mass"]), int(doc["visited"]))


def run_seed(master_seed: int, run_index: int) -> int:
    """64-bit seed of one run, a pure function of (master seed, run index)."""
    ss = np.random.SeedSequence([int(master_seed) & (2**64 - 1), int(run_index)])
    return int(ss.generate_state(1, np.uint64)[0])


def trajectory_csv(result: RunResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRAJECTORY_FIELDS)
    for r in result.trajectory:
        w.writerow([
            r.generation, r.evaluations, repr(math.exp(r.best_log_phenotype)),
            repr(r.best_log_phenotype), repr(r.mean_phenotype), repr(r.population_mass),
            "" if r.improvement_fraction is None else repr(r.improvement_fraction),
            repr(r.mode_fraction),
        ])
    return buf.getvalue()


def run_row(selector: str, index: int, seed: int, result: RunResult,
            oracle: RankedSolutions | None, population: int) -> dict:
    rank = oracle.rank_of(result.best.genotype) if oracle is not None else None
    return {
        "selector": selector,
        "run": index,
        "seed": seed,
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
        "evolving_population": population,
    }


def runs_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, RUN_FIELDS, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: ("" if row[k] is None else repr(row[k]) if isinstance(row[k], float) else row[k])
                    for k in RUN_FIELDS})
    return buf.getvalue()


_INT_FIELDS = {"run", "seed", "rank", "G", "Gc", "evaluations_at_G", "evaluations_at_Gc",
               "evaluations", "evolving_population"}
_FLOAT_FIELDS = {"probability", "log_probability", "fraction_evaluated"}


def read_runs_csv(text: str) -> list[dict]:
    rows = []
    for raw in csv.DictReader(io.StringIO(text)):
        row = {}
        for k, v in raw.items():
            if v == "" and k not in ("selector", "assignment"):
                row[k] = None
            elif k in _INT_FIELDS:
                row[k] = int(v)
            elif k in _FLOAT_FIELDS:
                row[k] = float(v)
            else:
                row[k] = v
        rows.append(row)
    return rows


def _mean_std(values):
    if not values:
        return None, None
    mean = statistics.fmean(values)
    std = statistics.stdev(values) if len(values) > 1 else None
    return mean, std


def summarize(rows: list[dict], space_size: int, oracle_size: int | None) -> dict:
    """Table-style statistics per selector, computed only from the run rows."""
    out = {}
    for selector in dict.fromkeys(r["selector"] for r in rows):
        block = [r for r in rows if r["selector"] == selector]
        n = len(block)
        ranks = [r["rank"] for r in block if r["rank"] is not None]
        entry = {"runs": n}
        for top in TOP_N:
            key = f"top{top}"
            if oracle_size is None or oracle_size < top:
                entry[key] = None
            else:
                entry[key] = 100.0 * sum(1 for r in ranks if r <= top) / n
        entry["rank_mean"], entry["rank_std"] = _mean_std(ranks)
        entry["unranked_runs"] = n - len(ranks) if oracle_size is not None else n
        entry["G_mean"], entry["G_std"] = _mean_std([r["G"] for r in block])
        gcs = [r["Gc"] for r in block if r["Gc"] is not None]
        entry["Gc_mean"], entry["Gc_std"] = _mean_std(gcs)
        entry["Gc_missing"] = n - len(gcs)
        entry["eval_G_mean"] = statistics.fmean(r["evaluations_at_G"] for r in block)
        eval_gc = [r["evaluations_at_Gc"] for r in block if r["evaluations_at_Gc"] is not None]
        entry["eval_Gc_mean"] = statistics.fmean(eval_gc) if eval_gc else None
        entry["evaluations_mean"] = statistics.fmean(r["evaluations"] for r in block)
        entry["percent_evaluated"] = 100.0 * entry["evaluations_mean"] / space_size
        entry["evolving_population"] = block[0]["evolving_population"]
        out[selector] = entry
    return out


@dataclass
class BenchSpec:
    net: Network
    evidence: Evidence = NO_EVIDENCE
    selectors: tuple[str, ...] = ("uniform",)
    runs: int = 20
    master_seed: int = 0
    config: GaConfig = field(default_factory=GaConfig)
    oracle: RankedSolutions | None = None
    jobs: int = 1

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be >= 1")


def _one_run(args):
    net, evidence, cfg = args
    return run(net, evidence, cfg)


def run_bench(spec: BenchSpec, on_row=None) -> tuple[list[dict], dict]:
    """Run every (selector, run) pair; returns per-run rows and the summary.

    ``on_row`` is called with each finished row, in deterministic order.
    """
    tasks = []
    for selector in spec.selectors:
        for i in range(spec.runs):
            seed = run_seed(spec.master_seed, i)
            tasks.append((selector, i, seed,
                          replace(spec.config, selector=selector, seed=seed)))
    rows = []
    if spec.jobs > 1:
        with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
            results = pool.map(_one_run, [(spec.net, spec.evidence, t[3]) for t in tasks])
            for (selector, i, seed, cfg), res in zip(tasks, results):
                row = run_row(selector, i, seed, res, spec.oracle, cfg.evolving_population)
                rows.append(row)
                if on_row:
                    on_row(row)
    else:
        for selector, i, seed, cfg in tasks:
            res = run(spec.net, spec.evidence, cfg)
            row = run_row(selector, i, seed, res, spec.oracle, cfg.evolving_population)
            rows.append(row)
            if on_row:
                on_row(row)
    return rows, bench_summary(spec, rows)


def oracle_depth(oracle: RankedSolutions | None) -> int | None:
    """How many top ranks the oracle can certify (all of them when complete)."""
    if oracle is None:
        return None
    return len(oracle) if len(oracle) < oracle.visited else max(len(oracle), max(TOP_N))


def bench_summary(spec: BenchSpec, rows: list[dict]) -> dict:
    return {
        "network": spec.net.name,
        "evidence": serialize_evidence(spec.net, spec.evidence),
        "state_space_size": state_space_size(spec.net),
        "master_seed": spec.master_seed,
        "oracle_k": len(spec.oracle) if spec.oracle is not None else None,
        "config": {k: v for k, v in spec.config.as_dict().items() if k not in ("seed", "selector")},
        "selectors": summarize(rows, state_space_size(spec.net), oracle_depth(spec.oracle)),
    }
