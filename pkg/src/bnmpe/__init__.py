"""Most-probable-explanation search in discrete Bayesian networks.

A genetic solver over graph-structured genotypes, an exhaustive top-k
oracle, greedy/random/local baselines and a benchmark harness.
"""
from .baselines import (CapExceeded, RankedSolutions, enumerate_top_k, greedy_ascent,
                        greedy_restarts, local_refine, random_search)
from .ga import GaConfig, Individual, RunResult, run
from .io import (GeneratorSpec, NetworkFormatError, bn1, generate_random_network,
                 parse_evidence, parse_network, serialize_network)
from .network import (Evaluator, Evidence, Network, NodeSpec, joint_probability,
                      log_joint_probability, state_space_size, undirected_skeleton,
                      validate_network)

__version__ = "0.1.0"
