"""Line-oriented network/evidence text formats and a seeded network generator.

Network files (``.bnet``)::

    network <name>
    node <id> states <k>
    parents <id> <pid> ...
    cpt <id>
    <p_1> ... <p_k>          # one line per parent-state tuple, row-major

``#`` starts a comment. States are 1-based in evidence files and reports.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Sequence

import numpy as np

from .network import Evidence, Network, NodeSpec, topological_order, validate_network


class NetworkFormatError(ValueError):
    """Syntax or semantic error with a 1-based source location."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        self.reason = message
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + message)


_ID = re.compile(r"^[^\s#=,]+$")


def _tokens(text: str):
    """Yield (line_no, [(column, token), ...]) for non-blank lines."""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        toks = [(m.start() + 1, m.group()) for m in re.finditer(r"\S+", line)]
        if toks:
            yield lineno, toks


def _probability(tok: str, lineno: int, col: int) -> float:
    try:
        value = float(tok)
    except ValueError:
        raise NetworkFormatError(f"bad probability literal {tok!r}", lineno, col) from None
    if not np.isfinite(value) or value < 0 or value > 1:
        raise NetworkFormatError(f"probability {tok!r} outside [0, 1]", lineno, col)
    return value


def parse_network(text: str) -> Network:
    """Parse a ``.bnet`` document into a validated :class:`Network`."""
    name = None
    decl: dict[str, tuple[int, int]] = {}        # id -> (states, line)
    order: list[str] = []
    parents: dict[str, tuple[list[str], int, list[int]]] = {}
    cpts: dict[str, tuple[int, list[tuple[int, list[tuple[int, str]]]]]] = {}
    current_cpt = None

    for lineno, toks in _tokens(text):
        head = toks[0][1]
        if head == "network":
            if name is not None:
                raise NetworkFormatError("second 'network' declaration", lineno, 1)
            if len(toks) != 2:
                raise NetworkFormatError("expected 'network <name>'", lineno, 1)
            name = toks[1][1]
            current_cpt = None
        elif head == "node":
            if len(toks) != 4 or toks[2][1] != "states":
                raise NetworkFormatError("expected 'node <id> states <k>'", lineno, 1)
            nid = toks[1][1]
            if not _ID.match(nid):
                raise NetworkFormatError(f"bad node id {nid!r}", lineno, toks[1][0])
            if nid in decl:
                raise NetworkFormatError(f"node {nid!r} declared twice", lineno, toks[1][0])
            try:
                k = int(toks[3][1])
            except ValueError:
                raise NetworkFormatError(
                    f"bad state count {toks[3][1]!r}", lineno, toks[3][0]) from None
            if k < 1:
                raise NetworkFormatError(f"state count must be >= 1, got {k}", lineno, toks[3][0])
            decl[nid] = (k, lineno)
            order.append(nid)
            current_cpt = None
        elif head == "parents":
            if len(toks) < 2:
                raise NetworkFormatError("expected 'parents <id> [<pid> ...]'", lineno, 1)
            nid = toks[1][1]
            if nid in parents:
                raise NetworkFormatError(f"parents of {nid!r} given twice", lineno, toks[1][0])
            parents[nid] = ([t for _, t in toks[2:]], lineno, [c for c, _ in toks[2:]])
            current_cpt = None
        elif head == "cpt":
            if len(toks) != 2:
                raise NetworkFormatError("expected 'cpt <id>'", lineno, 1)
            nid = toks[1][1]
            if nid in cpts:
                raise NetworkFormatError(f"cpt of {nid!r} given twice", lineno, toks[1][0])
            cpts[nid] = (lineno, [])
            current_cpt = nid
        elif current_cpt is not None:
            cpts[current_cpt][1].append((lineno, toks))
        else:
            raise NetworkFormatError(f"unexpected token {head!r}", lineno, toks[0][0])

    if name is None:
        raise NetworkFormatError("no network declared", 1 if not text.strip() else None)

    for table, where in ((parents, "parents"), (cpts, "cpt")):
        for nid, entry in table.items():
            if nid not in decl:
                raise NetworkFormatError(f"{where} for unknown node {nid!r}", entry[1] if where == "parents" else entry[0])
    for nid, (plist, lineno, cols) in parents.items():
        for p, c in zip(plist, cols):
            if p not in decl:
                raise NetworkFormatError(f"node {nid!r} has unknown parent {p!r}", lineno, c)
            if p == nid:
                raise NetworkFormatError(f"node {nid!r} is its own parent", lineno, c)
        if len(set(plist)) != len(plist):
            raise NetworkFormatError(f"node {nid!r} lists a parent twice", lineno)

    nodes = []
    for nid in order:
        k, decl_line = decl[nid]
        plist = parents.get(nid, ([], None, []))[0]
        if nid not in cpts:
            raise NetworkFormatError(f"node {nid!r} has no cpt", decl_line)
        cpt_line, rows = cpts[nid]
        pshape = tuple(decl[p][0] for p in plist)
        n_rows = int(np.prod(pshape, dtype=np.int64)) if pshape else 1
        if len(rows) != n_rows:
            raise NetworkFormatError(
                f"cpt of {nid!r} has {len(rows)} rows, expected {n_rows}", cpt_line)
        table = np.empty((n_rows, k))
        for r, (lineno, toks) in enumerate(rows):
            if len(toks) != k:
                raise NetworkFormatError(
                    f"cpt row of {nid!r} has {len(toks)} entries, expected {k}", lineno)
            table[r] = [_probability(t, lineno, c) for c, t in toks]
            total = float(np.sum(table[r]))
            if abs(total - 1.0) > 1e-9:
                combo = np.unravel_index(r, pshape) if pshape else ()
                where = ", ".join(f"{p}={s + 1}" for p, s in zip(plist, combo)) or "prior"
                raise NetworkFormatError(
                    f"cpt row of {nid!r} ({where}) sums to {total:.12g}, not 1", lineno)
        nodes.append(NodeSpec(nid, k, tuple(plist), table.reshape(pshape + (k,))))

    net = Network(name, nodes)
    problems = validate_network(net)
    if problems:
        first = problems[0]
        line = parents[first.node][1] if first.node in parents else None
        raise NetworkFormatError(first.message, line)
    return net


def _fmt(p: float) -> str:
    # shortest repr that round-trips the float exactly
    return repr(float(p))


def serialize_network(net: Network) -> str:
    """Canonical text: declaration order, round-trip-exact probabilities, LF endings."""
    lines = [f"network {net.name}"]
    for node in net.nodes:
        lines.append(f"node {node.id} states {node.state_count}")
    for node in net.nodes:
        if node.parents:
            lines.append("parents " + " ".join((node.id,) + node.parents))
    for node in net.nodes:
        lines.append(f"cpt {node.id}")
        for row in node.cpt.reshape(-1, node.state_count):
            lines.append(" ".join(_fmt(p) for p in row))
    return "\n".join(lines) + "\n"


def parse_evidence(text: str) -> Evidence:
    """Parse ``id=state`` bindings (1-based states) separated by commas or whitespace."""
    bindings: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        for m in re.finditer(r"[^\s,]+", line):
            item = m.group()
            nid, eq, state = item.partition("=")
            if not eq or not nid or not state:
                raise NetworkFormatError(f"expected '<id>=<state>', got {item!r}", lineno, m.start() + 1)
            try:
                s = int(state)
            except ValueError:
                raise NetworkFormatError(f"bad state {state!r}", lineno, m.start() + 1) from None
            if s < 1:
                raise NetworkFormatError(f"states are 1-based, got {s}", lineno, m.start() + 1)
            if nid in bindings and bindings[nid] != s - 1:
                raise NetworkFormatError(f"conflicting evidence for {nid!r}", lineno, m.start() + 1)
            bindings[nid] = s - 1
    return Evidence(bindings)


def serialize_evidence(net: Network, evidence: Evidence) -> str:
    """Canonical ``id=state`` list in network declaration order."""
    resolved = evidence.resolve(net)
    return ", ".join(f"{net.ids[i]}={resolved[i] + 1}" for i in sorted(resolved))


def format_assignment(assignment: Sequence[int]) -> str:
    """1-based states separated by spaces."""
    return " ".join(str(int(v) + 1) for v in assignment)


def parse_assignment(text: str, net: Network | None = None) -> tuple[int, ...]:
    """Inverse of :func:`format_assignment`; accepts spaces, commas or a digit run."""
    text = text.strip()
    if re.fullmatch(r"\d+", text) and net is not None and len(text) == len(net):
        values = [int(c) for c in text]
    else:
        values = [int(t) for t in re.split(r"[\s,]+", text) if t]
    a = tuple(v - 1 for v in values)
    if net is not None:
        if len(a) != len(net):
            raise ValueError(f"assignment has {len(a)} values, network has {len(net)} nodes")
        for v, k in zip(a, net.state_counts):
            if not 0 <= v < k:
                raise ValueError(f"state {v + 1} out of range")
    return a


def bundled_network(name: str = "bn1") -> Network:
    """Load a network shipped with the package (``bn1``)."""
    text = resources.files("bnmpe.data").joinpath(f"{name}.bnet").read_text(encoding="utf-8")
    return parse_network(text)


def bn1() -> Network:
    return bundled_network("bn1")


@dataclass
class GeneratorSpec:
    """Shape of a random network.

    ``state_counts`` is one count for every node, one count per node, or
    ``[(count, how_many), ...]``.
    The skeleton is connected whenever ``max_parents >= 1``.
    """

    node_count: int
    state_counts: Sequence = field(default_factory=lambda: [2])
    target_cycles: int = 0
    max_parents: int = 3
    seed: int = 0
    name: str | None = None

    def __post_init__(self):
        if self.node_count < 1:
            raise ValueError("node_count must be >= 1")
        if self.target_cycles < 0:
            raise ValueError("target_cycles must be >= 0")
        if self.max_parents < 0:
            raise ValueError("max_parents must be >= 0")
        self.resolved_state_counts()

    def resolved_state_counts(self) -> list[int]:
        sc = [self.state_counts] if isinstance(self.state_counts, int) else list(self.state_counts)
        if sc and all(isinstance(x, (tuple, list)) for x in sc):
            out = [int(k) for k, n in sc for _ in range(int(n))]
        elif len(sc) == 1:
            out = [int(sc[0])] * self.node_count
        else:
            out = [int(k) for k in sc]
        if len(out) != self.node_count:
            raise ValueError(
                f"{len(out)} state counts given for {self.node_count} nodes")
        if any(k < 1 for k in out):
            raise ValueError("state counts must be >= 1")
        return out


def generate_random_network(spec: GeneratorSpec) -> Network:
    """Random DAG whose undirected skeleton has exactly ``target_cycles`` basis cycles.

    A random topological order is drawn first. With ``max_parents >= 1`` a
    random spanning tree is grown along that order (each later node gets one
    earlier parent), then ``target_cycles`` extra forward arcs are added
    between non-adjacent pairs. CPT rows are uniform draws from the simplex.
    """
    counts = spec.resolved_state_counts()
    n = spec.node_count
    rng = np.random.default_rng(spec.seed)
    if spec.target_cycles > 0 and spec.max_parents < 2:
        raise ValueError("cycles require max_parents >= 2")
    if spec.max_parents == 0 and spec.target_cycles:
        raise ValueError("cycles requested with max_parents 0")

    topo = rng.permutation(n)
    parents: list[list[int]] = [[] for _ in range(n)]
    if spec.max_parents >= 1:
        for pos in range(1, n):
            child = int(topo[pos])
            parents[child].append(int(topo[rng.integers(pos)]))

    adjacent = {frozenset((c, p)) for c in range(n) for p in parents[c]}
    for _ in range(spec.target_cycles):
        candidates = [
            (int(topo[i]), int(topo[j]))
            for j in range(n) for i in range(j)
            if len(parents[int(topo[j])]) < spec.max_parents
            and frozenset((int(topo[i]), int(topo[j]))) not in adjacent
        ]
        if not candidates:
            raise ValueError(
                f"cannot place {spec.target_cycles} cycles on {n} nodes "
                f"with max_parents={spec.max_parents}")
        u, v = candidates[rng.integers(len(candidates))]
        parents[v].append(u)
        adjacent.add(frozenset((u, v)))

    ids = [str(i + 1) for i in range(n)]
    nodes = []
    for i in range(n):
        plist = sorted(parents[i])
        pshape = tuple(counts[p] for p in plist)
        rows = rng.dirichlet(np.ones(counts[i]), size=int(np.prod(pshape, dtype=np.int64)))
        # exact renormalization keeps every row within the load tolerance
        rows = rows / rows.sum(axis=1, keepdims=True)
        nodes.append(NodeSpec(ids[i], counts[i], tuple(ids[p] for p in plist),
                              rows.reshape(pshape + (counts[i],))))
    name = spec.name or f"random-n{n}-c{spec.target_cycles}-s{spec.seed}"
    net = Network(name, nodes)
    topological_order(net)
    return net


def bn2_like_spec(seed: int, target_cycles: int = 5) -> GeneratorSpec:
    """20 nodes, 15 binary and 5 ternary: 7,962,624 states."""
    return GeneratorSpec(20, [(2, 15), (3, 5)], target_cycles=target_cycles,
                         max_parents=3, seed=seed)


def bn4_like_spec(seed: int) -> GeneratorSpec:
    """Same state space as :func:`bn2_like_spec` with no arcs at all."""
    return GeneratorSpec(20, [(2, 15), (3, 5)], target_cycles=0, max_parents=0, seed=seed)
