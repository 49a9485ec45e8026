# %% [markdown]
# # One genetic run on BN1, generation by generation

# %%
from bnmpe import GaConfig, bn1, enumerate_top_k, run
from bnmpe.io import format_assignment

net = bn1()
oracle = enumerate_top_k(net, k=50)
cfg = GaConfig(evolving_population=110, average_lifetime=5, mutation_frequency=0.025,
               selector="uniform", seed=3)
print(cfg)
print("replaced per generation:", cfg.replacements, " mutants:", cfg.mutants)

# %%
res = run(net, cfg=cfg)
print("best", format_assignment(res.best.genotype), "p=%.6f" % res.best.phenotype,
      "rank", oracle.rank_of(res.best.genotype))
print("first seen at generation G =", res.G, "after", res.evaluations_at_G, "evaluations")
print("converged at generation Gc =", res.Gc, "after", res.evaluations_at_Gc, "evaluations")
print(f"evaluated {100 * res.fraction_evaluated:.1f}% of the space (with repeats)")

# %% [markdown]
# Off-line performance is the best fitness so far. On-line performance is
# the population mean. The share of clones of the best climbs to the
# convergence threshold.

# %%
print(" gen  evals  off-line   on-line  best-share  improving")
for r in res.trajectory:
    imp = "-" if r.improvement_fraction is None else f"{r.improvement_fraction:.2f}"
    print(f"{r.generation:>4} {r.evaluations:>6}  {r.best_log_phenotype:8.4f}  "
          f"{r.mean_phenotype:8.5f}  {r.best_share:10.2f}  {imp:>9}")

# %% [markdown]
# The three selectors over a handful of seeds.

# %%
from dataclasses import replace

for selector in ("uniform", "proportional", "transformed"):
    ranks = [oracle.rank_of(run(net, cfg=replace(cfg, selector=selector, seed=s)).best.genotype)
             for s in range(20)]
    print(f"{selector:<13}", "rank-1 runs:", sum(r == 1 for r in ranks), "/ 20",
          " outside top 50:", sum(r is None for r in ranks))
