"""Exhaustive top-k enumeration and the simple search baselines."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .network import NO_EVIDENCE, Evaluator, Evidence, Network

DEFAULT_ENUMERATION_CAP = 10**8
DEFAULT_REFINE_CAP = 10**7
_CHUNK = 1 << 18


class CapExceeded(RuntimeError):
    """The requested exhaustive search is larger than the configured cap."""


@dataclass
class RankedSolutions:
    """Top assignments in descending probability, ties broken lexicographically."""

    assignments: list[tuple[int, ...]]
    log_probabilities: np.ndarray
    total_mass: float
    visited: int
    _ranks: dict = field(default=None, init=False, repr=False, compare=False)

    @property
    def probabilities(self) -> np.ndarray:
        return np.exp(self.log_probabilities)

    @property
    def cumulative_mass(self) -> np.ndarray:
        return np.cumsum(self.probabilities)

    def __len__(self):
        return len(self.assignments)

    def rank_of(self, assignment: Sequence[int]) -> int | None:
        """1-based rank, or None when the assignment is outside the stored list."""
        if self._ranks is None:
            self._ranks = {a: i + 1 for i, a in enumerate(self.assignments)}
        return self._ranks.get(tuple(int(v) for v in assignment))


def _free_layout(net: Network, evidence: Evidence):
    fixed = evidence.resolve(net)
    free = [i for i in range(len(net)) if i not in fixed]
    return fixed, free


def enumerate_top_k(net: Network, evidence: Evidence = NO_EVIDENCE, k: int = 1,
                    cap: int = DEFAULT_ENUMERATION_CAP, chunk: int = _CHUNK) -> RankedSolutions:
    """Visit every evidence-consistent assignment and keep the best ``k``.

    Free nodes are split into an outer prefix and an inner suffix whose
    block of at most ``chunk`` assignments is laid out once; each outer
    assignment then only shifts every node's table index by a constant.
    Blocks are visited in lexicographic order and survivors merged under
    the total order (-log p, lexicographic index).
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    fixed, free = _free_layout(net, evidence)
    counts = [net.state_counts[i] for i in free]
    total = math.prod(counts)
    if total > cap:
        raise CapExceeded(f"{total} assignments exceed the enumeration cap of {cap}")

    split = len(free)
    block = 1
    while split > 0 and block * counts[split - 1] <= max(chunk, 1):
        split -= 1
        block *= counts[split]
    outer, inner = free[:split], free[split:]

    inner_rows = np.zeros((block, len(net)), dtype=np.int64)
    if inner:
        inner_rows[:, inner] = np.array(
            list(itertools.product(*(range(net.state_counts[i]) for i in inner))),
            dtype=np.int64).reshape(block, len(inner))
    tables = net._log_tables
    families = net._families
    strides = net._family_strides
    inner_flat = [inner_rows[:, families[i]] @ strides[i] for i in range(len(net))]

    base = np.zeros(len(net), dtype=np.int64)
    for i, s in fixed.items():
        base[i] = s

    keep_lp = np.empty(0)
    keep_idx = np.empty(0, dtype=np.int64)
    mass = 0.0
    inner_idx = np.arange(block, dtype=np.int64)
    for outer_no, values in enumerate(
            itertools.product(*(range(net.state_counts[i]) for i in outer))):
        point = base.copy()
        point[outer] = values
        lp = np.zeros(block)
        for i in range(len(net)):
            offset = int(point[families[i]] @ strides[i])
            lp += tables[i][inner_flat[i] + offset]
        mass += float(np.exp(lp).sum())
        if k == 0:
            continue
        idx = inner_idx + outer_no * block
        if len(lp) > k:
            threshold = np.partition(lp, len(lp) - k)[len(lp) - k]
            sel = lp >= threshold
            lp, idx = lp[sel], idx[sel]
        keep_lp = np.concatenate([keep_lp, lp])
        keep_idx = np.concatenate([keep_idx, idx])
        order = np.lexsort((keep_idx, -keep_lp))[:k]
        keep_lp, keep_idx = keep_lp[order], keep_idx[order]

    assignments = []
    for flat in keep_idx:
        o, r = divmod(int(flat), block)
        a = base.copy()
        a[inner] = inner_rows[r, inner]
        for i in reversed(outer):
            o, a[i] = divmod(o, net.state_counts[i])
        assignments.append(tuple(int(v) for v in a))
    return RankedSolutions(assignments, keep_lp, mass, total)


def random_assignment(net: Network, evidence: Evidence, rng: np.random.Generator) -> tuple[int, ...]:
    fixed = evidence.resolve(net)
    return tuple(
        fixed[i] if i in fixed else int(rng.integers(k))
        for i, k in enumerate(net.state_counts)
    )


def greedy_ascent(net: Network, evidence: Evidence, start: Sequence[int],
                  evaluator: Evaluator | None = None,
                  max_evaluations: int | None = None) -> tuple[int, ...]:
    """Coordinate ascent over single-gene moves until a sweep changes nothing.

    Nodes are swept in declaration order; each free node moves to its best
    allele (lowest index on ties) when that strictly improves the joint.
    Every candidate allele costs one evaluation. ``max_evaluations`` stops
    the climb early once the evaluator has spent that many.
    """
    ev = evaluator or Evaluator(net)
    fixed = evidence.resolve(net)
    current = list(int(v) for v in start)
    if any(current[i] != s for i, s in fixed.items()):
        raise ValueError("start assignment contradicts the evidence")
    best = ev(current)
    free = [i for i in range(len(net)) if i not in fixed and net.state_counts[i] > 1]
    improved = True
    while improved:
        improved = False
        for i in free:
            if max_evaluations is not None and ev.count >= max_evaluations:
                return tuple(current)
            original = current[i]
            choice, choice_lp = None, -math.inf
            for allele in range(net.state_counts[i]):
                if allele == original:
                    continue
                current[i] = allele
                lp = ev(current)
                if choice is None or lp > choice_lp:
                    choice, choice_lp = allele, lp
            if choice_lp > best:
                current[i] = choice
                best = choice_lp
                improved = True
            else:
                current[i] = original
    return tuple(current)


def greedy_restarts(net: Network, evidence: Evidence, budget: int,
                    rng: np.random.Generator,
                    evaluator: Evaluator | None = None) -> tuple[int, ...]:
    """Greedy ascent from fresh random starts until ``budget`` evaluations are spent."""
    ev = evaluator or Evaluator(net)
    best, best_lp = None, -math.inf
    while ev.count < budget:
        start = random_assignment(net, evidence, rng)
        result = greedy_ascent(net, evidence, start, ev, max_evaluations=budget)
        lp = net.log_joint_batch(np.array([result]))[0]
        if best is None or lp > best_lp:
            best, best_lp = result, lp
    if best is None:
        best = random_assignment(net, evidence, rng)
    return best


def random_search(net: Network, evidence: Evidence, evaluations: int,
                  rng: np.random.Generator,
                  evaluator: Evaluator | None = None) -> tuple[int, ...]:
    """Best of ``evaluations`` uniform evidence-consistent samples (with replacement).

    The first sample wins ties.
    """
    if evaluations < 1:
        raise ValueError("evaluations must be >= 1")
    ev = evaluator or Evaluator(net)
    fixed = evidence.resolve(net)
    samples = np.empty((evaluations, len(net)), dtype=np.int64)
    for i, k in enumerate(net.state_counts):
        samples[:, i] = fixed[i] if i in fixed else rng.integers(k, size=evaluations)
    lp = ev.batch(samples)
    return tuple(int(v) for v in samples[int(np.argmax(lp))])


def allele_distance(a: Sequence[int], b: Sequence[int], metric: str = "difference") -> int:
    """Sum of |a_i - b_i| (``difference``) or count of unequal genes (``hamming``)."""
    if metric == "difference":
        return sum(abs(int(x) - int(y)) for x, y in zip(a, b))
    if metric == "hamming":
        return sum(int(x) != int(y) for x, y in zip(a, b))
    raise ValueError(f"unknown metric {metric!r}")


def _ball(center: Sequence[int], counts: Sequence[int], free: list[int],
          radius: int, metric: str):
    """Yield every assignment within ``radius`` of ``center`` moving only ``free`` genes."""
    center = list(center)

    def rec(pos, budget, current):
        if pos == len(free):
            yield tuple(current)
            return
        i = free[pos]
        c = center[i]
        for v in range(counts[i]):
            cost = abs(v - c) if metric == "difference" else int(v != c)
            if cost > budget:
                continue
            current[i] = v
            yield from rec(pos + 1, budget - cost, current)
        current[i] = c

    yield from rec(0, radius, list(center))


def ball_size(net: Network, evidence: Evidence, center: Sequence[int], radius: int,
              metric: str = "difference") -> int:
    """Number of points in the refinement ball, by dynamic programming over genes."""
    fixed = evidence.resolve(net)
    ways = [1] + [0] * radius
    for i, k in enumerate(net.state_counts):
        if i in fixed:
            continue
        costs = [abs(v - center[i]) if metric == "difference" else int(v != center[i])
                 for v in range(k)]
        new = [0] * (radius + 1)
        for r, w in enumerate(ways):
            if w:
                for c in costs:
                    if r + c <= radius:
                        new[r + c] += w
        ways = new
    return sum(ways)


def local_refine(net: Network, evidence: Evidence, center: Sequence[int], radius: int,
                 metric: str = "difference", cap: int = DEFAULT_REFINE_CAP,
                 evaluator: Evaluator | None = None) -> tuple[int, ...]:
    """Best assignment within ``radius`` of ``center``, found exhaustively.

    Distance defaults to the summed absolute difference of state indices;
    ``metric="hamming"`` counts differing genes instead. Ties go to the
    lexicographically smallest assignment.
    """
    if radius < 0:
        raise ValueError("radius must be >= 0")
    fixed = evidence.resolve(net)
    center = tuple(int(v) for v in center)
    if any(center[i] != s for i, s in fixed.items()):
        raise ValueError("center contradicts the evidence")
    size = ball_size(net, evidence, center, radius, metric)
    if size > cap:
        raise CapExceeded(f"refinement ball holds {size} points, cap is {cap}")
    ev = evaluator or Evaluator(net)
    free = [i for i in range(len(net)) if i not in fixed]
    best, best_lp = None, -math.inf
    batch = []

    def flush():
        nonlocal best, best_lp
        if not batch:
            return
        arr = np.array(batch, dtype=np.int64)
        lp = ev.batch(arr)
        order = np.lexsort(tuple(arr[:, j] for j in range(arr.shape[1] - 1, -1, -1)) + (-lp,))
        j = int(order[0])
        cand = tuple(int(v) for v in arr[j])
        if best is None or lp[j] > best_lp or (lp[j] == best_lp and cand < best):
            best, best_lp = cand, float(lp[j])
        batch.clear()

    for point in itertools.islice(_ball(center, net.state_counts, free, radius, metric), None):
        batch.append(point)
        if len(batch) >= _CHUNK:
            flush()
    flush()
    return best
