"""Dijkstra SPF and all-pairs next-hop routing tables."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

from .topology import Topology, canonical

INF = math.inf


class UnreachableError(LookupError):
    pass


@dataclass(frozen=True)
class Path:
    """Simple path as an ordered node tuple.  A zero-edge path holds only its
    endpoint and has cost 0."""

    nodes: tuple[int, ...]
    cost: int = 0

    @property
    def hops(self) -> int:
        return max(len(self.nodes) - 1, 0)

    @property
    def edges(self) -> frozenset[tuple[int, int]]:
        return frozenset(canonical(a, b) for a, b in zip(self.nodes, self.nodes[1:]))

    @property
    def interior(self) -> frozenset[int]:
        return frozenset(self.nodes[1:-1])

    @property
    def source(self) -> int:
        return self.nodes[0]

    @property
    def target(self) -> int:
        return self.nodes[-1]

    def is_simple(self) -> bool:
        return len(set(self.nodes)) == len(self.nodes)

    def __len__(self):
        return self.hops

    def format(self, labels=None) -> str:
        if labels is None:
            return "-".join(str(v) for v in self.nodes)
        return "-".join(labels[v] for v in self.nodes)


def path_from_nodes(t: Topology, nodes) -> Path:
    nodes = tuple(nodes)
    cost = 0
    for a, b in zip(nodes, nodes[1:]):
        cost += t.cost(a, b)
    return Path(nodes, cost)


@dataclass(frozen=True)
class RoutingTable:
    """``next_hop[s][d]`` is the first hop from s toward d, ``None`` on the
    diagonal and for unreachable pairs; ``dist`` holds path costs (``inf`` when
    unreachable)."""

    topology: Topology
    next_hop: tuple[tuple[int | None, ...], ...]
    dist: tuple[tuple[float, ...], ...]

    @property
    def n(self) -> int:
        return self.topology.n

    def reachable(self, s: int, d: int) -> bool:
        return self.dist[s][d] != INF


def shortest_distances(t: Topology, source: int) -> list[float]:
    """Single-source Dijkstra; equal keys pop in ascending node id."""
    dist = [INF] * t.n
    dist[source] = 0
    heap = [(0, source)]
    done = [False] * t.n
    adj = t.adjacency
    edges = t.edges
    while heap:
        dx, x = heapq.heappop(heap)
        if done[x]:
            continue
        done[x] = True
        for y in adj[x]:
            nd = dx + edges[(x, y) if x < y else (y, x)].cost
            if nd < dist[y]:
                dist[y] = nd
                heapq.heappush(heap, (nd, y))
    return dist


def build_routing_tables(t: Topology) -> RoutingTable:
    """All-pairs next hops.

    Among equal-cost first hops the neighbour with the larger id wins; this is
    the rule under which the four-node reference matrix comes out as printed
    (A->D via C, D->A via C).
    """
    n = t.n
    dist = [shortest_distances(t, s) for s in range(n)]
    nh: list[list[int | None]] = []
    for s in range(n):
        row: list[int | None] = [None] * n
        for d in range(n):
            if d == s or dist[s][d] == INF:
                continue
            best = None
            for k in t.adjacency[s]:
                if t.cost(s, k) + dist[k][d] == dist[s][d]:
                    best = k  # ascending scan, last match is the largest id
            row[d] = best
        nh.append(row)
    return RoutingTable(t, tuple(tuple(r) for r in nh), tuple(tuple(r) for r in dist))


def primary_path(tr: RoutingTable, s: int, d: int) -> Path:
    if s == d:
        return Path((s,), 0)
    if not tr.reachable(s, d):
        raise UnreachableError(f"{d} unreachable from {s}")
    nodes = [s]
    x = s
    while x != d:
        x = tr.next_hop[x][d]
        nodes.append(x)
        if len(nodes) > tr.n:
            raise RuntimeError(f"routing loop from {s} to {d}")
    return path_from_nodes(tr.topology, nodes)


def format_next_hop_matrix(tr: RoutingTable) -> str:
    """Tab-separated matrix: rows are sources, columns destinations, '--' on
    the diagonal and '.' where unreachable."""
    labels = tr.topology.labels
    out = ["\t" + "\t".join(labels)]
    for s in range(tr.n):
        cells = []
        for d in range(tr.n):
            if s == d:
                cells.append("--")
            elif tr.next_hop[s][d] is None:
                cells.append(".")
            else:
                cells.append(labels[tr.next_hop[s][d]])
        out.append(labels[s] + "\t" + "\t".join(cells))
    return "\n".join(out) + "\n"
