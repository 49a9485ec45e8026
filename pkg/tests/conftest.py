import itertools
import math

import numpy as np
import pytest

from bnmpe.io import bn1
from bnmpe.network import Network, NodeSpec

# Frozen from a pure-Python brute force over the shipped BN1 fixture
# (itertools.product over all 12,288 assignments, product of table entries).
BN1_OPTIMUM = (0, 1, 1, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0)
BN1_OPTIMUM_P = 0.11040717166782188
BN1_TOP100_MASS = 0.7455611257571811


def brute_force(net, evidence_idx=None):
    """Every consistent assignment with its probability, best first, lexicographic ties."""
    evidence_idx = evidence_idx or {}
    out = []
    ranges = [
        [evidence_idx[i]] if i in evidence_idx else range(k)
        for i, k in enumerate(net.state_counts)
    ]
    for a in itertools.product(*ranges):
        p = 1.0
        for i, node in enumerate(net.nodes):
            key = tuple(a[net.index(q)] for q in node.parents) + (a[i],)
            p *= float(node.cpt[key])
        out.append((a, p))
    out.sort(key=lambda t: (-t[1], t[0]))
    return out


def random_small_network(rng, n_nodes=None, max_states=3, max_parents=2, zeros=False):
    """Small random DAG with arbitrary (possibly deterministic) tables."""
    n = n_nodes or int(rng.integers(1, 7))
    counts = [int(rng.integers(2, max_states + 1)) for _ in range(n)]
    nodes = []
    for i in range(n):
        k = min(i, max_parents)
        parents = sorted(rng.choice(i, size=int(rng.integers(0, k + 1)), replace=False)) if i else []
        shape = tuple(counts[p] for p in parents) + (counts[i],)
        table = rng.random(shape)
        if zeros:
            table[rng.random(shape) < 0.2] = 0.0
            flat = table.reshape(-1, counts[i])
            for row in flat:
                if row.sum() == 0:
                    row[int(rng.integers(counts[i]))] = 1.0
        table = table / table.sum(axis=-1, keepdims=True)
        nodes.append(NodeSpec(f"v{i}", counts[i], tuple(f"v{p}" for p in parents), table))
    return Network("rand", nodes)


def chain(n=3, k=2, p=0.7):
    nodes = [NodeSpec("A", k, (), np.full(k, 1 / k))]
    for i in range(1, n):
        t = np.full((k, k), (1 - p) / (k - 1))
        np.fill_diagonal(t, p)
        nodes.append(NodeSpec(chr(ord("A") + i), k, (chr(ord("A") + i - 1),), t))
    return Network("chain", nodes)


def no_arc_network(priors):
    return Network("flat", [NodeSpec(str(i + 1), len(p), (), p) for i, p in enumerate(priors)])


@pytest.fixture(scope="session")
def net_bn1():
    return bn1()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# ---- acceptance reporting: one pass/fail line per criterion ----------------

_CRITERIA = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, text): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call":
        return
    detail = "; ".join(f"{k}={v}" for k, v in item.user_properties)
    _CRITERIA.append((marker.args[0], marker.args[1], report.outcome, detail))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    merged = {}
    for number, text, outcome, detail in _CRITERIA:
        entry = merged.setdefault(number, [text, True, []])
        entry[1] = entry[1] and outcome == "passed"
        if detail:
            entry[2].append(detail)
    terminalreporter.section("acceptance criteria")
    for number in sorted(merged):
        text, ok, details = merged[number]
        suffix = f" ({'; '.join(details)})" if details else ""
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {text}{suffix}")
