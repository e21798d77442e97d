"""Undirected weighted topologies, the line-oriented topology file format, and
seeded random generation."""

from __future__ import annotations

import random
from dataclasses import dataclass, field

DEFAULT_COST = 1
DEFAULT_BANDWIDTH = 1_000_000.0  # bits/s
DEFAULT_PROP_DELAY = 0.010  # s
DEFAULT_QUEUE_LIMIT = 50  # packets


class TopologyError(ValueError):
    """Raised for malformed or inconsistent topology input."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


def canonical(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Edge:
    u: int
    v: int
    cost: int = DEFAULT_COST
    bandwidth: float = DEFAULT_BANDWIDTH
    prop_delay: float = DEFAULT_PROP_DELAY
    queue_limit: int = DEFAULT_QUEUE_LIMIT

    def __post_init__(self):
        if self.u == self.v:
            raise TopologyError(f"self-loop on node {self.u}")
        if self.u > self.v:
            u, v = self.v, self.u
            object.__setattr__(self, "u", u)
            object.__setattr__(self, "v", v)
        if self.cost < 1:
            raise TopologyError(f"non-positive cost {self.cost} on edge {self.u}-{self.v}")
        if self.bandwidth <= 0:
            raise TopologyError(f"bandwidth must be positive on edge {self.u}-{self.v}")
        if self.prop_delay < 0:
            raise TopologyError(f"negative propagation delay on edge {self.u}-{self.v}")
        if self.queue_limit < 1:
            raise TopologyError(f"queue limit must be >= 1 on edge {self.u}-{self.v}")

    @property
    def key(self) -> tuple[int, int]:
        return (self.u, self.v)

    def other(self, node: int) -> int:
        return self.v if node == self.u else self.u


@dataclass(frozen=True)
class Topology:
    """Immutable undirected graph over dense node ids ``0..n-1``.

    ``edges`` maps the canonical pair ``(u, v)`` with ``u < v`` to its
    :class:`Edge`; ``adjacency[v]`` is the ascending tuple of neighbours.
    """

    n: int
    edges: dict[tuple[int, int], Edge]
    labels: tuple[str, ...] = ()
    adjacency: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.labels:
            object.__setattr__(self, "labels", tuple(str(i) for i in range(self.n)))
        if len(self.labels) != self.n:
            raise TopologyError("label count does not match node count")
        if len(set(self.labels)) != self.n:
            raise TopologyError("duplicate node label")
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for key, e in self.edges.items():
            if key != e.key:
                raise TopologyError(f"edge stored under non-canonical key {key}")
            for x in key:
                if not 0 <= x < self.n:
                    raise TopologyError(f"edge endpoint {x} is not a declared node")
            adj[e.u].append(e.v)
            adj[e.v].append(e.u)
        object.__setattr__(self, "adjacency", tuple(tuple(sorted(a)) for a in adj))

    @classmethod
    def from_edges(cls, n: int, edges, labels=()) -> "Topology":
        table: dict[tuple[int, int], Edge] = {}
        for e in edges:
            if not isinstance(e, Edge):
                e = Edge(*e)
            if e.key in table:
                raise TopologyError(f"duplicate edge {e.u}-{e.v}")
            table[e.key] = e
        return cls(n, dict(sorted(table.items())), tuple(labels))

    @property
    def nodes(self) -> range:
        return range(self.n)

    def edge(self, u: int, v: int) -> Edge:
        return self.edges[canonical(u, v)]

    def has_edge(self, u: int, v: int) -> bool:
        return canonical(u, v) in self.edges

    def cost(self, u: int, v: int) -> int:
        return self.edges[canonical(u, v)].cost

    def node_id(self, label: str | int) -> int:
        if isinstance(label, int):
            if not 0 <= label < self.n:
                raise KeyError(f"unknown node id {label}")
            return label
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown node label {label!r}") from None

    def label(self, v: int) -> str:
        return self.labels[v]

    def without(self, down) -> "Topology":
        """Copy with the given edges (any orientation) removed."""
        drop = {canonical(*k) for k in down}
        kept = {k: e for k, e in self.edges.items() if k not in drop}
        return Topology(self.n, kept, self.labels)

    def is_connected(self) -> bool:
        if self.n == 0:
            return True
        seen = {0}
        stack = [0]
        while stack:
            x = stack.pop()
            for y in self.adjacency[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return len(seen) == self.n

    def bridges(self) -> set[tuple[int, int]]:
        """Canonical keys of edges whose removal disconnects their endpoints."""
        out = set()
        for key in self.edges:
            rest = self.without([key])
            u, v = key
            seen = {u}
            stack = [u]
            while stack:
                x = stack.pop()
                for y in rest.adjacency[x]:
                    if y not in seen:
                        seen.add(y)
                        stack.append(y)
            if v not in seen:
                out.add(key)
        return out


def neighbors(t: Topology, v: int) -> list[int]:
    if not 0 <= v < t.n:
        raise KeyError(f"unknown node id {v}")
    return list(t.adjacency[v])


def _number(tok: str, kind, what: str, lineno: int):
    try:
        return kind(tok)
    except ValueError:
        raise TopologyError(f"bad {what} {tok!r}", lineno) from None


def parse_topology(text: str) -> Topology:
    """Parse the line-oriented topology format.

    The first non-comment line is ``nodes <n>`` or ``nodes <label> ...``;
    every following line is ``<u> <v> <cost> [bandwidth_bps] [prop_delay_s]
    [queue_limit]``.  Labels map to dense ids in order of first appearance.
    """
    labels: list[str] | None = None
    index: dict[str, int] = {}
    edges: dict[tuple[int, int], Edge] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        toks = line.split()
        if labels is None:
            if toks[0] != "nodes" or len(toks) < 2:
                raise TopologyError("expected 'nodes <n>' or 'nodes <label> ...'", lineno)
            if len(toks) == 2 and toks[1].isdigit():
                labels = [str(i) for i in range(int(toks[1]))]
            else:
                labels = toks[1:]
            if not labels:
                raise TopologyError("empty node section", lineno)
            if len(set(labels)) != len(labels):
                raise TopologyError("duplicate node label", lineno)
            index = {lab: i for i, lab in enumerate(labels)}
            continue
        if not 3 <= len(toks) <= 6:
            raise TopologyError("expected '<u> <v> <cost> [bandwidth] [delay] [queue]'", lineno)
        try:
            u, v = index[toks[0]], index[toks[1]]
        except KeyError as exc:
            raise TopologyError(f"endpoint {exc.args[0]!r} not declared", lineno) from None
        if u == v:
            raise TopologyError(f"self-loop on {toks[0]}", lineno)
        cost = _number(toks[2], int, "cost", lineno)
        if cost < 1:
            raise TopologyError(f"non-positive cost {cost}", lineno)
        kw = {}
        if len(toks) > 3:
            kw["bandwidth"] = _number(toks[3], float, "bandwidth", lineno)
        if len(toks) > 4:
            kw["prop_delay"] = _number(toks[4], float, "propagation delay", lineno)
        if len(toks) > 5:
            kw["queue_limit"] = _number(toks[5], int, "queue limit", lineno)
        key = canonical(u, v)
        if key in edges:
            raise TopologyError(f"duplicate edge {toks[0]}-{toks[1]}", lineno)
        try:
            edges[key] = Edge(u, v, cost, **kw)
        except TopologyError as exc:
            raise TopologyError(str(exc), lineno) from None
    if labels is None:
        raise TopologyError("empty node section")
    return Topology(len(labels), dict(sorted(edges.items())), tuple(labels))


def serialize_topology(t: Topology) -> str:
    default_labels = t.labels == tuple(str(i) for i in range(t.n))
    head = f"nodes {t.n}" if default_labels else "nodes " + " ".join(t.labels)
    lines = [head]
    for (u, v), e in sorted(t.edges.items()):
        lines.append(
            f"{t.labels[u]} {t.labels[v]} {e.cost} {e.bandwidth!r} {e.prop_delay!r} {e.queue_limit}"
        )
    return "\n".join(lines) + "\n"


def random_topology(
    n: int,
    extra_edge_prob: float,
    seed: int,
    **edge_attrs,
) -> Topology:
    """Connected random graph: a random spanning tree plus each remaining pair
    with probability ``extra_edge_prob``.  Same seed, same graph."""
    if n < 2:
        raise ValueError("random_topology needs n >= 2")
    if not 0.0 <= extra_edge_prob <= 1.0:
        raise ValueError("extra_edge_prob must lie in [0, 1]")
    rng = random.Random(seed)
    order = list(range(n))
    rng.shuffle(order)
    keys = set()
    # random recursive tree over a shuffled order
    for i in range(1, n):
        keys.add(canonical(order[i], order[rng.randrange(i)]))
    for u in range(n):
        for v in range(u + 1, n):
            if (u, v) not in keys and rng.random() < extra_edge_prob:
                keys.add((u, v))
    return Topology.from_edges(n, [Edge(u, v, **edge_attrs) for u, v in sorted(keys)])


FIG1_TEXT = """\
# four-node example: primary A-C-D, backup A-B-D
nodes A B C D
A B 1
A C 1
B C 1
B D 1
C D 1
"""

# Eleven-node reconstruction: primary S-1-6-9-D, node 2 reaches D through 6,
# node 3 holds a node-disjoint route via 4 and 8.  Not an authoritative edge set.
FIG2_TEXT = """\
nodes S 1 2 3 4 5 6 7 8 9 D
S 1 1
1 6 1
6 9 1
9 D 1
S 2 2
2 6 1
S 3 1
3 4 1
4 8 1
8 D 2
2 7 1
7 5 1
5 8 2
"""


def fig1_topology() -> Topology:
    return parse_topology(FIG1_TEXT)


def fig2_topology() -> Topology:
    return parse_topology(FIG2_TEXT)
