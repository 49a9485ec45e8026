"""Discrete Bayesian network model and joint-probability evaluation.

States are 0-based everywhere in this module. Text formats and reports
convert to 1-based at the boundary.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

NORMALIZATION_TOL = 1e-9

Assignment = tuple  # one 0-based state index per node, in network order


@dataclass(frozen=True, eq=False)
class NodeSpec:
    """A discrete variable with its conditional probability table.

    ``cpt`` has shape ``(*parent_state_counts, state_count)``: one row per
    parent-state tuple in row-major order over the declared parents, the last
    axis running over the node's own states. Root nodes hold their prior as a
    1-d array.
    """

    id: str
    state_count: int
    parents: tuple[str, ...] = ()
    cpt: np.ndarray = field(default_factory=lambda: np.ones(1))

    def __post_init__(self):
        object.__setattr__(self, "parents", tuple(self.parents))
        table = np.array(self.cpt, dtype=float)
        table.flags.writeable = False
        object.__setattr__(self, "cpt", table)

    def __eq__(self, other):
        if not isinstance(other, NodeSpec):
            return NotImplemented
        return (
            self.id == other.id
            and self.state_count == other.state_count
            and self.parents == other.parents
            and self.cpt.shape == other.cpt.shape
            and bool(np.array_equal(self.cpt, other.cpt))
        )

    __hash__ = None


@dataclass(frozen=True)
class Violation:
    kind: str  # "cycle", "normalization", "parent", "state", "shape", "duplicate"
    node: str | None
    message: str

    def __str__(self):
        return self.message


class Network:
    """Immutable directed acyclic graph of discrete nodes.

    Construction does not validate; call :func:`validate_network` (the file
    parser always does).
    """

    def __init__(self, name: str, nodes: Iterable[NodeSpec]):
        self._name = str(name)
        self._nodes = tuple(nodes)

    @property
    def name(self) -> str:
        return self._name

    @property
    def nodes(self) -> tuple[NodeSpec, ...]:
        return self._nodes

    def __len__(self):
        return len(self._nodes)

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        return self._name == other._name and self._nodes == other._nodes

    __hash__ = None

    def __repr__(self):
        return f"Network({self._name!r}, {len(self._nodes)} nodes)"

    @cached_property
    def ids(self) -> tuple[str, ...]:
        return tuple(n.id for n in self._nodes)

    @cached_property
    def _index(self) -> dict[str, int]:
        return {nid: i for i, nid in enumerate(self.ids)}

    def index(self, node_id: str) -> int:
        try:
            return self._index[str(node_id)]
        except KeyError:
            raise KeyError(f"unknown node {node_id!r}") from None

    @cached_property
    def state_counts(self) -> tuple[int, ...]:
        return tuple(n.state_count for n in self._nodes)

    @cached_property
    def parent_indices(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(self.index(p) for p in n.parents) for n in self._nodes)

    @cached_property
    def _log_tables(self) -> tuple[np.ndarray, ...]:
        with np.errstate(divide="ignore"):
            return tuple(np.log(n.cpt).ravel() for n in self._nodes)

    @cached_property
    def _family_strides(self) -> tuple[np.ndarray, ...]:
        # flat index into node i's table = assignment[family] @ strides
        out = []
        for i, node in enumerate(self._nodes):
            shape = tuple(self._nodes[p].state_count for p in self.parent_indices[i])
            shape += (node.state_count,)
            strides = np.ones(len(shape), dtype=np.int64)
            for j in range(len(shape) - 2, -1, -1):
                strides[j] = strides[j + 1] * shape[j + 1]
            out.append(strides)
        return tuple(out)

    @cached_property
    def _families(self) -> tuple[np.ndarray, ...]:
        return tuple(
            np.array(self.parent_indices[i] + (i,), dtype=np.intp)
            for i in range(len(self._nodes))
        )

    def log_factors(self, assignment: Sequence[int]) -> list[float]:
        """Natural-log factor of every node for a complete assignment."""
        a = _check_assignment(self, assignment)
        out = []
        for i in range(len(self._nodes)):
            flat = 0
            for v, s in zip((a[j] for j in self._families[i]), self._family_strides[i]):
                flat += v * int(s)
            out.append(float(self._log_tables[i][flat]))
        return out

    def log_joint_batch(self, assignments: np.ndarray) -> np.ndarray:
        """Vectorized log joint over the rows of an ``(n, len(net))`` int array."""
        a = np.asarray(assignments, dtype=np.int64)
        if a.ndim != 2 or a.shape[1] != len(self._nodes):
            raise ValueError(
                f"expected shape (n, {len(self._nodes)}), got {a.shape}"
            )
        total = np.zeros(a.shape[0])
        for i in range(len(self._nodes)):
            flat = a[:, self._families[i]] @ self._family_strides[i]
            total += self._log_tables[i][flat]
        return total

    def undirected_skeleton(self) -> list[set[int]]:
        return undirected_skeleton(self)


def _check_assignment(net: Network, assignment: Sequence[int]) -> tuple[int, ...]:
    a = tuple(int(v) for v in assignment)
    if len(a) != len(net):
        raise ValueError(
            f"assignment has {len(a)} values but network has {len(net)} nodes"
        )
    for i, (v, k) in enumerate(zip(a, net.state_counts)):
        if not 0 <= v < k:
            raise ValueError(
                f"state {v} out of range for node {net.ids[i]!r} with {k} states"
            )
    return a


def validate_network(net: Network) -> list[Violation]:
    """Return every structural and numerical problem found; empty iff well-formed."""
    report: list[Violation] = []
    seen: set[str] = set()
    for node in net.nodes:
        if node.id in seen:
            report.append(Violation("duplicate", node.id, f"duplicate node id {node.id!r}"))
        seen.add(node.id)

    known = {n.id: n for n in net.nodes}
    structural_ok = True
    for node in net.nodes:
        if node.state_count < 1:
            report.append(Violation(
                "state", node.id, f"node {node.id!r} has {node.state_count} states"))
            structural_ok = False
        if len(set(node.parents)) != len(node.parents):
            report.append(Violation(
                "parent", node.id, f"node {node.id!r} lists a parent more than once"))
        for p in node.parents:
            if p == node.id:
                report.append(Violation(
                    "parent", node.id, f"node {node.id!r} is its own parent"))
                structural_ok = False
            elif p not in known:
                report.append(Violation(
                    "parent", node.id, f"node {node.id!r} has unknown parent {p!r}"))
                structural_ok = False
    if not structural_ok:
        return report

    cycle = _find_cycle(net)
    if cycle:
        path = " -> ".join(cycle + [cycle[0]])
        report.append(Violation("cycle", cycle[0], f"directed cycle: {path}"))

    for node in net.nodes:
        expected = tuple(known[p].state_count for p in node.parents) + (node.state_count,)
        if node.cpt.shape != expected:
            report.append(Violation(
                "shape", node.id,
                f"node {node.id!r} table has shape {node.cpt.shape}, expected {expected}"))
            continue
        if np.any(~np.isfinite(node.cpt)) or np.any(node.cpt < 0) or np.any(node.cpt > 1):
            report.append(Violation(
                "normalization", node.id,
                f"node {node.id!r} has probabilities outside [0, 1]"))
        sums = node.cpt.sum(axis=-1)
        for combo in np.ndindex(sums.shape):
            if abs(sums[combo] - 1.0) > NORMALIZATION_TOL:
                where = ", ".join(
                    f"{p}={s + 1}" for p, s in zip(node.parents, combo)) or "prior"
                report.append(Violation(
                    "normalization", node.id,
                    f"node {node.id!r} row ({where}) sums to {sums[combo]:.12g}, not 1"))
    return report


def _find_cycle(net: Network) -> list[str]:
    children: dict[str, list[str]] = {n.id: [] for n in net.nodes}
    for n in net.nodes:
        for p in n.parents:
            children[p].append(n.id)
    color = dict.fromkeys(children, 0)
    stack_path: list[str] = []

    def visit(u):
        color[u] = 1
        stack_path.append(u)
        for v in children[u]:
            if color[v] == 1:
                return stack_path[stack_path.index(v):]
            if color[v] == 0:
                found = visit(v)
                if found:
                    return found
        stack_path.pop()
        color[u] = 2
        return None

    for nid in children:
        if color[nid] == 0:
            found = visit(nid)
            if found:
                return list(found)
    return []


def topological_order(net: Network) -> list[int]:
    indeg = [len(p) for p in net.parent_indices]
    children: list[list[int]] = [[] for _ in net.nodes]
    for i, ps in enumerate(net.parent_indices):
        for p in ps:
            children[p].append(i)
    ready = [i for i, d in enumerate(indeg) if d == 0]
    order = []
    while ready:
        u = ready.pop(0)
        order.append(u)
        for v in children[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                ready.append(v)
    if len(order) != len(net):
        raise ValueError("network has a directed cycle")
    return order


def log_joint_probability(net: Network, assignment: Sequence[int]) -> float:
    """Sum of natural-log factors; ``-inf`` when any factor is zero."""
    return math.fsum(net.log_factors(assignment))


def joint_probability(net: Network, assignment: Sequence[int]) -> float:
    """Product of one prior or conditional factor per node."""
    a = _check_assignment(net, assignment)
    p = 1.0
    for i, node in enumerate(net.nodes):
        key = tuple(a[j] for j in net.parent_indices[i]) + (a[i],)
        p *= float(node.cpt[key])
    return p


def state_space_size(net: Network) -> int:
    """Number of complete assignments (exact Python integer)."""
    return math.prod(net.state_counts)


def undirected_skeleton(net: Network) -> list[set[int]]:
    """Adjacency sets over node indices, ignoring arc direction."""
    adj: list[set[int]] = [set() for _ in net.nodes]
    for child, parents in enumerate(net.parent_indices):
        for p in parents:
            adj[child].add(p)
            adj[p].add(child)
    return adj


def cyclomatic_number(net: Network) -> int:
    """Edges minus nodes plus connected components of the skeleton."""
    adj = undirected_skeleton(net)
    edges = sum(len(s) for s in adj) // 2
    return edges - len(adj) + _count_components(adj)


def _count_components(adj: list[set[int]]) -> int:
    seen = [False] * len(adj)
    count = 0
    for start in range(len(adj)):
        if seen[start]:
            continue
        count += 1
        stack = [start]
        seen[start] = True
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if not seen[v]:
                    seen[v] = True
                    stack.append(v)
    return count


@dataclass(frozen=True)
class Evidence:
    """Observed node values, keyed by node id, with 0-based states.

    Range checks happen in :meth:`resolve`, once a network is known.
    """

    bindings: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(
            self, "bindings", {str(k): int(v) for k, v in dict(self.bindings).items()})

    def __hash__(self):
        return hash(tuple(sorted(self.bindings.items())))

    def __len__(self):
        return len(self.bindings)

    def resolve(self, net: Network) -> dict[int, int]:
        """Map node index -> state, raising ``ValueError`` on bad bindings."""
        out = {}
        for nid, state in self.bindings.items():
            if nid not in net.ids:
                raise ValueError(f"evidence names unknown node {nid!r}")
            i = net.index(nid)
            k = net.state_counts[i]
            if not 0 <= state < k:
                raise ValueError(
                    f"evidence state {state + 1} out of range for node {nid!r} "
                    f"({k} states)")
            out[i] = state
        return out

    def is_consistent(self, net: Network, assignment: Sequence[int]) -> bool:
        return all(assignment[i] == s for i, s in self.resolve(net).items())


NO_EVIDENCE = Evidence()


class Evaluator:
    """Counts joint-probability evaluations so every solver is charged alike."""

    def __init__(self, net: Network):
        self.net = net
        self.count = 0

    def __call__(self, assignment: Sequence[int]) -> float:
        self.count += 1
        return log_joint_probability(self.net, assignment)

    def batch(self, assignments: np.ndarray) -> np.ndarray:
        values = self.net.log_joint_batch(assignments)
        self.count += len(values)
        return values
