"""Steady-state genetic search for the most probable complete assignment.

Genotypes are assignment tuples over the network's nodes. Recombination
works on the graph: two children swap the values of a breadth-first ball
around a random center node of the undirected skeleton.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .network import NO_EVIDENCE, Evaluator, Evidence, Network, state_space_size, undirected_skeleton

SELECTORS = ("uniform", "proportional", "transformed")

_P_MIN = 1e-300
_P_MAX = 1.0 - 1e-12


@dataclass(frozen=True)
class Individual:
    genotype: tuple[int, ...]
    log_phenotype: float
    birth_generation: int

    @property
    def phenotype(self) -> float:
        return math.exp(self.log_phenotype)


@dataclass
class GaConfig:
    evolving_population: int = 75
    breeding_selectivity: float = 1.0
    average_lifetime: float = 5.0
    mutation_frequency: float = 0.025
    selector: str = "uniform"
    max_generations: int = 200
    convergence_mode_fraction: float = 0.95
    convergence_patience: int = 3
    seed: int = 0
    max_evaluations: int | None = None

    def __post_init__(self):
        if self.evolving_population < 2:
            raise ValueError("evolving_population must be >= 2")
        if not 0 < self.breeding_selectivity <= 1:
            raise ValueError("breeding_selectivity must be in (0, 1]")
        if not self.average_lifetime >= 1:
            raise ValueError("average_lifetime must be >= 1 generation")
        if not 0 <= self.mutation_frequency <= 1:
            raise ValueError("mutation_frequency must be in [0, 1]")
        if self.selector not in SELECTORS:
            raise ValueError(f"selector must be one of {SELECTORS}")
        if self.max_generations < 0:
            raise ValueError("max_generations must be >= 0")
        if not 0 < self.convergence_mode_fraction <= 1:
            raise ValueError("convergence_mode_fraction must be in (0, 1]")
        if self.convergence_patience < 1:
            raise ValueError("convergence_patience must be >= 1")

    @property
    def replacements(self) -> int:
        # at least one survivor, so the best is never evicted
        return max(1, min(self.evolving_population - 1,
                          round(self.evolving_population / self.average_lifetime)))

    @property
    def pool_size(self) -> int:
        return math.ceil(self.breeding_selectivity * self.evolving_population)

    @property
    def mutants(self) -> int:
        return math.ceil(self.mutation_frequency * self.evolving_population - 1e-12)

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class GenerationRecord:
    generation: int
    evaluations: int
    best_log_phenotype: float
    mean_phenotype: float
    population_mass: float
    improvement_fraction: float | None
    mode_fraction: float
    best_share: float


@dataclass
class RunResult:
    best: Individual
    G: int
    Gc: int | None
    evaluations_at_G: int
    evaluations_at_Gc: int | None
    evaluations: int
    fraction_evaluated: float
    generations: int
    trajectory: list[GenerationRecord] = field(default_factory=list)
    mutation_noop: bool = False

    def as_dict(self) -> dict:
        return {
            "best": {
                "genotype": list(self.best.genotype),
                "log_phenotype": self.best.log_phenotype,
                "birth_generation": self.best.birth_generation,
            },
            "G": self.G,
            "Gc": self.Gc,
            "evaluations_at_G": self.evaluations_at_G,
            "evaluations_at_Gc": self.evaluations_at_Gc,
            "evaluations": self.evaluations,
            "fraction_evaluated": self.fraction_evaluated,
            "generations": self.generations,
            "mutation_noop": self.mutation_noop,
            "trajectory": [asdict(r) for r in self.trajectory],
        }


def init_population(net: Network, evidence: Evidence, cfg: GaConfig,
                    rng: np.random.Generator, evaluator: Evaluator) -> list[Individual]:
    """Uniform random genotypes with evidence nodes pinned; each one evaluated."""
    fixed = evidence.resolve(net)
    out = []
    for _ in range(cfg.evolving_population):
        g = tuple(
            fixed[i] if i in fixed else int(rng.integers(k))
            for i, k in enumerate(net.state_counts)
        )
        out.append(Individual(g, evaluator(g), 0))
    return out


def selection_weights(log_phenotypes: Sequence[float], selector: str) -> np.ndarray:
    """Unnormalized parent-selection weights for a breeding pool.

    ``proportional`` exponentiates after shifting by the pool maximum;
    ``transformed`` uses 1/(ln p)^2 with p clamped away from 0 and 1.
    Zero-probability members get weight 0 except under ``uniform``.
    """
    lp = np.asarray(log_phenotypes, dtype=float)
    if selector == "uniform":
        return np.ones(len(lp))
    finite = np.isfinite(lp)
    w = np.zeros(len(lp))
    if not finite.any():
        return w
    if selector == "proportional":
        w[finite] = np.exp(lp[finite] - lp[finite].max())
    elif selector == "transformed":
        clamped = np.clip(lp[finite], math.log(_P_MIN), math.log(_P_MAX))
        w[finite] = 1.0 / clamped**2
    else:
        raise ValueError(f"unknown selector {selector!r}")
    return w


def transformed_weight(p: float) -> float:
    """1/(ln p)^2 on the clamped probability."""
    p = min(max(p, _P_MIN), _P_MAX)
    return 1.0 / math.log(p) ** 2


def select_parents(population: Sequence[Individual], cfg: GaConfig,
                   rng: np.random.Generator) -> tuple[Individual, Individual]:
    """Draw two parents with replacement from the breeding pool.

    ``population`` must already be sorted by phenotype, best first.
    """
    pool = population[: cfg.pool_size]
    if not pool:
        raise ValueError("empty breeding pool")
    w = selection_weights([ind.log_phenotype for ind in pool], cfg.selector)
    if w.sum() <= 0:
        w = np.ones(len(pool))
    i, j = rng.choice(len(pool), size=2, replace=True, p=w / w.sum())
    return pool[int(i)], pool[int(j)]


def cluster_select(net: Network, center: int, adjacency=None) -> frozenset[int]:
    """Whole BFS layers around ``center`` until at least half the nodes are in.

    Stops early when the center's connected component is exhausted.
    """
    adj = adjacency if adjacency is not None else undirected_skeleton(net)
    target = math.ceil(len(net) / 2)
    ball = {center}
    frontier = [center]
    while len(ball) < target and frontier:
        nxt = []
        for u in frontier:
            for v in sorted(adj[u]):
                if v not in ball:
                    ball.add(v)
                    nxt.append(v)
        frontier = nxt
    return frozenset(ball)


def swap_cluster(a: Sequence[int], b: Sequence[int], cluster) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Exchange the genes of ``cluster`` between two genotypes."""
    ca = tuple(b[i] if i in cluster else a[i] for i in range(len(a)))
    cb = tuple(a[i] if i in cluster else b[i] for i in range(len(b)))
    return ca, cb


class _ClusterCache:
    def __init__(self, net: Network):
        self.net = net
        self.adj = undirected_skeleton(net)
        self.cache: dict[int, frozenset[int]] = {}

    def __call__(self, center: int) -> frozenset[int]:
        if center not in self.cache:
            self.cache[center] = cluster_select(self.net, center, self.adj)
        return self.cache[center]


def cluster_crossover(parent_a: Individual, parent_b: Individual, net: Network,
                      rng: np.random.Generator, evaluator: Evaluator, generation: int,
                      clusters=None) -> tuple[Individual, Individual]:
    """Two children: copies of the parents with a random-centered cluster swapped."""
    clusters = clusters or _ClusterCache(net)
    center = int(rng.integers(len(net)))
    ga, gb = swap_cluster(parent_a.genotype, parent_b.genotype, clusters(center))
    return (Individual(ga, evaluator(ga), generation),
            Individual(gb, evaluator(gb), generation))


def mutate_population(population: list[Individual], net: Network, evidence: Evidence,
                      cfg: GaConfig, rng: np.random.Generator, evaluator: Evaluator,
                      generation: int) -> list[Individual]:
    """Replace ``ceil(frequency * N)`` individuals by single-allele mutants.

    Mutants are drawn without replacement among all but the first
    individual, so with a best-first population the current best survives.
    The changed gene is a free node and its new allele always differs from
    the old one. Returns the mutants created.
    """
    fixed = evidence.resolve(net)
    mutable = [i for i, k in enumerate(net.state_counts) if i not in fixed and k >= 2]
    m = min(cfg.mutants, len(population) - 1)
    if m <= 0 or not mutable:
        return []
    victims = rng.choice(np.arange(1, len(population)), size=m, replace=False)
    created = []
    for v in sorted(int(x) for x in victims):
        g = list(population[v].genotype)
        node = mutable[int(rng.integers(len(mutable)))]
        shift = int(rng.integers(1, net.state_counts[node]))
        g[node] = (g[node] + shift) % net.state_counts[node]
        g = tuple(g)
        population[v] = Individual(g, evaluator(g), generation)
        created.append(population[v])
    return created


def offspring_improvement_fraction(children_and_parents) -> float | None:
    """Share of children strictly better than both of their parents.

    Takes ``(child_log_p, parent_a_log_p, parent_b_log_p)`` triples; None when empty.
    """
    triples = list(children_and_parents)
    if not triples:
        return None
    better = sum(1 for c, a, b in triples if c > max(a, b))
    return better / len(triples)


def mode_fraction(population: Sequence[Individual]) -> float:
    counts = Counter(ind.genotype for ind in population)
    return counts.most_common(1)[0][1] / len(population)


def best_share(population: Sequence[Individual]) -> float:
    """Fraction of a best-first population identical to its first member."""
    top = population[0].genotype
    return sum(ind.genotype == top for ind in population) / len(population)


def detect_convergence(fractions: Sequence[float], cfg: GaConfig) -> int | None:
    """First generation of a run of ``patience`` generations at or above the threshold.

    ``fractions[g]`` is the uniformity measure of generation ``g``.
    """
    streak = 0
    for gen, frac in enumerate(fractions):
        if frac >= cfg.convergence_mode_fraction:
            streak += 1
            if streak >= cfg.convergence_patience:
                return gen - streak + 1
        else:
            streak = 0
    return None


def _sort(population: list[Individual]) -> list[Individual]:
    # stable: equal phenotypes keep their current order
    return sorted(population, key=lambda ind: -ind.log_phenotype)


class GaRun:
    """Mutable state of one run; :func:`run` drives it to completion."""

    def __init__(self, net: Network, evidence: Evidence, cfg: GaConfig):
        self.net = net
        self.evidence = evidence
        self.cfg = cfg
        self.rng = np.random.default_rng(cfg.seed)
        self.evaluator = Evaluator(net)
        self.clusters = _ClusterCache(net)
        self.generation = 0
        fixed = evidence.resolve(net)
        self.mutation_noop = not any(
            k >= 2 for i, k in enumerate(net.state_counts) if i not in fixed)
        self.population = _sort(init_population(net, evidence, cfg, self.rng, self.evaluator))
        self.first_seen: dict[tuple[int, ...], int] = {}
        self.convergence_history: list[float] = [best_share(self.population)]
        self.trajectory: list[GenerationRecord] = []
        for ind in self.population:
            self.first_seen.setdefault(ind.genotype, 0)
        self._record(None)

    def generation_cost(self) -> int:
        r = self.cfg.replacements
        mut = 0 if self.mutation_noop else min(self.cfg.mutants, self.cfg.evolving_population - 1)
        return 2 * math.ceil(r / 2) + mut

    def _record(self, improvement):
        lp = np.array([ind.log_phenotype for ind in self.population])
        probs = np.exp(lp)
        self.trajectory.append(GenerationRecord(
            generation=self.generation,
            evaluations=self.evaluator.count,
            best_log_phenotype=float(lp.max()),
            mean_phenotype=float(probs.mean()),
            population_mass=float(sum(math.exp(ind.log_phenotype)
                                      for ind in {i.genotype: i for i in self.population}.values())),
            improvement_fraction=improvement,
            mode_fraction=mode_fraction(self.population),
            best_share=self.convergence_history[-1],
        ))

    def step(self) -> int | None:
        """Replace the worst individuals with offspring, then mutate.

        Returns the convergence generation once detected; the mutation pass
        of that final generation is skipped.
        """
        cfg = self.cfg
        self.generation += 1
        gen = self.generation
        pop = self.population
        r = cfg.replacements
        survivors = pop[: len(pop) - r]

        children, triples = [], []
        for _ in range(math.ceil(r / 2)):
            pa, pb = select_parents(pop, cfg, self.rng)
            ca, cb = cluster_crossover(pa, pb, self.net, self.rng, self.evaluator, gen,
                                       self.clusters)
            for c in (ca, cb):
                children.append(c)
                triples.append((c.log_phenotype, pa.log_phenotype, pb.log_phenotype))
        if len(children) > r:
            children.pop(int(self.rng.integers(len(children))))

        pop = _sort(survivors + children)
        self.convergence_history.append(best_share(pop))
        gc = detect_convergence(self.convergence_history, cfg)
        if gc is None:
            mutate_population(pop, self.net, self.evidence, cfg, self.rng,
                              self.evaluator, gen)
            pop = _sort(pop)
        self.population = pop
        for ind in pop:
            self.first_seen.setdefault(ind.genotype, gen)
        self._record(offspring_improvement_fraction(triples))
        return gc


def run(net: Network, evidence: Evidence = NO_EVIDENCE, cfg: GaConfig | None = None) -> RunResult:
    """Evolve until convergence, ``max_generations`` or the evaluation budget.

    Convergence is judged on the share of the population identical to the
    current best, taken after replacement and before the mutation pass, so
    the fresh mutants of a generation never block it.
    """
    cfg = cfg or GaConfig()
    state = GaRun(net, evidence, cfg)
    gc = None
    while state.generation < cfg.max_generations:
        if (cfg.max_evaluations is not None
                and state.evaluator.count + state.generation_cost() > cfg.max_evaluations):
            break
        gc = state.step()
        if gc is not None:
            break

    best = state.population[0]
    g = state.first_seen[best.genotype]
    return RunResult(
        best=best,
        G=g,
        Gc=gc,
        evaluations_at_G=state.trajectory[g].evaluations,
        evaluations_at_Gc=state.trajectory[gc].evaluations if gc is not None else None,
        evaluations=state.evaluator.count,
        fraction_evaluated=state.evaluator.count / state_space_size(net),
        generations=state.generation,
        trajectory=state.trajectory,
        mutation_noop=state.mutation_noop,
    )
