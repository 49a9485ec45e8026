# %% [markdown]
# # Baselines on BN1 at the GA's budget

# %%
import numpy as np

from bnmpe import GaConfig, bn1, enumerate_top_k, greedy_restarts, local_refine, random_search, run
from bnmpe.baselines import ball_size, greedy_ascent, random_assignment
from bnmpe.network import NO_EVIDENCE

net = bn1()
oracle = enumerate_top_k(net, k=50)
optimum = oracle.assignments[0]
budget = 1310

# %% [markdown]
# How often each method finds the optimum with 1,310 evaluations, over 100 seeds.

# %%
cfg = GaConfig(evolving_population=110, mutation_frequency=0.025, max_evaluations=budget)
hits = {"ga": 0, "random": 0, "greedy restarts": 0}
for seed in range(100):
    ga = run(net, cfg=GaConfig(**{**cfg.as_dict(), "seed": seed}))
    hits["ga"] += ga.best.genotype == optimum
    hits["random"] += random_search(net, NO_EVIDENCE, budget, np.random.default_rng(seed)) == optimum
    hits["greedy restarts"] += greedy_restarts(net, NO_EVIDENCE, budget,
                                               np.random.default_rng(seed)) == optimum
print(hits)

# %% [markdown]
# Single climbs stall on BN1. Where do they end up?

# %%
rng = np.random.default_rng(0)
ends = [oracle.rank_of(greedy_ascent(net, NO_EVIDENCE, random_assignment(net, NO_EVIDENCE, rng)))
        for _ in range(200)]
for label, test in [("rank 1", lambda r: r == 1), ("rank 2-50", lambda r: r is not None and r > 1),
                    ("beyond 50", lambda r: r is None)]:
    print(f"{label:<10} {sum(map(test, ends))}")

# %% [markdown]
# Local refinement searches a ball exhaustively. Distance is the summed
# difference between state indices. Starting from the 20th-best
# assignment, the ball grows quickly with the radius.

# %%
center = oracle.assignments[19]
for radius in range(5):
    best = local_refine(net, NO_EVIDENCE, center, radius)
    print(f"radius {radius}: ball={ball_size(net, NO_EVIDENCE, center, radius):>5} "
          f"-> rank {oracle.rank_of(best)}")
