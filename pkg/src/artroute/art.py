"""Alternative routing tables.

ARTFP searches, from every source, for a route to the destination that shares
nothing with the primary path.  ARTCP searches from a node on the primary path
for a route that avoids a given edge set (the failed link plus everything that
would send traffic back upstream).  Both are breadth-first searches over
``(prefix, frontier)`` couples that complete as soon as the routing-table path
from a freshly reached neighbour is itself acceptable.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable

from .spf import Path, RoutingTable, path_from_nodes, primary_path
from .topology import Topology, canonical

ARTFP = "ARTFP"
ARTCP = "ARTCP"


class Disjointness(str, Enum):
    EDGE = "edge"
    NODE = "interior-node"

    @classmethod
    def parse(cls, value) -> "Disjointness":
        if isinstance(value, cls):
            return value
        v = str(value).strip().lower()
        if v in ("edge", "link"):
            return cls.EDGE
        if v in ("node", "interior-node", "interior_node"):
            return cls.NODE
        raise ValueError(f"unknown disjointness mode {value!r}")


class OracleLimitError(ValueError):
    pass


@dataclass
class MessageLedger:
    """Per-node discovery message counters (enquiries and their replies)."""

    n: int
    enquiry_sent: list[int] = field(default_factory=list)
    enquiry_received: list[int] = field(default_factory=list)
    reply_sent: list[int] = field(default_factory=list)
    reply_received: list[int] = field(default_factory=list)

    def __post_init__(self):
        for name in ("enquiry_sent", "enquiry_received", "reply_sent", "reply_received"):
            if not getattr(self, name):
                setattr(self, name, [0] * self.n)

    def enquiry(self, src: int, dst: int):
        self.enquiry_sent[src] += 1
        self.enquiry_received[dst] += 1

    def reply(self, src: int, dst: int):
        self.reply_sent[src] += 1
        self.reply_received[dst] += 1

    def node_total(self, v: int) -> int:
        """Messages handled by ``v`` (sent plus received, both classes)."""
        return (
            self.enquiry_sent[v]
            + self.enquiry_received[v]
            + self.reply_sent[v]
            + self.reply_received[v]
        )

    def per_node(self) -> list[int]:
        return [self.node_total(v) for v in range(self.n)]

    def total(self) -> int:
        return sum(self.per_node())

    def messages(self) -> int:
        return sum(self.enquiry_sent) + sum(self.reply_sent)

    def merge(self, other: "MessageLedger") -> "MessageLedger":
        out = MessageLedger(self.n)
        for name in ("enquiry_sent", "enquiry_received", "reply_sent", "reply_received"):
            setattr(out, name, [a + b for a, b in zip(getattr(self, name), getattr(other, name))])
        return out


class _Tails:
    """Memoised routing-table paths ``Pr(Tr, k, d)``."""

    def __init__(self, tr: RoutingTable):
        self.tr = tr
        self._cache: dict[tuple[int, int], Path | None] = {}

    def __call__(self, k: int, d: int) -> Path | None:
        key = (k, d)
        if key not in self._cache:
            self._cache[key] = primary_path(self.tr, k, d) if self.tr.reachable(k, d) else None
        return self._cache[key]


def _search(
    t: Topology,
    tails: _Tails,
    s: int,
    d: int,
    extension_ok: Callable[[int, int], bool],
    tail_ok: Callable[[Path], bool],
    ledger: MessageLedger | None,
) -> Path | None:
    # FIFO of prefixes; the frontier vertex is the last node of each prefix.
    visited = {s}
    queue: deque[tuple[int, ...]] = deque([(s,)])
    while queue:
        qsub = queue[0]
        x = qsub[-1]
        found = None
        for k in t.adjacency[x]:
            if k in visited or not extension_ok(x, k):
                continue
            visited.add(k)
            if ledger is not None:
                ledger.enquiry(x, k)
                ledger.reply(k, x)
            tail = tails(k, d)
            if tail is not None and tail_ok(tail) and not set(tail.nodes).intersection(qsub):
                found = qsub + tail.nodes
                break
            queue.append(qsub + (k,))
        if ledger is not None and x != s:
            ledger.reply(x, qsub[-2])  # relay of this tier's verdict
        queue.popleft()
        if found is not None:
            return path_from_nodes(t, found)
    return None


def artfp(
    tr: RoutingTable,
    s: int,
    d: int,
    disjointness=Disjointness.NODE,
    ledger: MessageLedger | None = None,
    _tails: _Tails | None = None,
) -> Path | None:
    """Alternative path from ``s`` to ``d`` disjoint from ``Pr(Tr, s, d)``."""
    if s == d or not tr.reachable(s, d):
        return None
    t = tr.topology
    tails = _tails or _Tails(tr)
    primary = tails(s, d)
    pedges = primary.edges
    pinterior = primary.interior if Disjointness.parse(disjointness) is Disjointness.NODE else frozenset()

    def extension_ok(x, k):
        return canonical(x, k) not in pedges and k not in pinterior

    def tail_ok(tail: Path):
        if pedges & tail.edges:
            return False
        return not pinterior.intersection(tail.nodes[:-1])

    return _search(t, tails, s, d, extension_ok, tail_ok, ledger)


def artfp_all(
    tr: RoutingTable,
    t: Topology | None = None,
    disjointness=Disjointness.NODE,
    ledger: MessageLedger | None = None,
) -> dict[tuple[int, int], Path]:
    """Alternative paths for every reachable ordered pair; unprotectable
    pairs are absent."""
    tails = _Tails(tr)
    out = {}
    for s in range(tr.n):
        for d in range(tr.n):
            pa = artfp(tr, s, d, disjointness, ledger, tails)
            if pa is not None:
                out[(s, d)] = pa
    return out


def artcp(
    tr: RoutingTable,
    s: int,
    d: int,
    avoid: Iterable[tuple[int, int]],
    ledger: MessageLedger | None = None,
    _tails: _Tails | None = None,
) -> Path | None:
    """First path found from ``s`` to ``d`` sharing no edge with ``avoid``."""
    if s == d:
        raise ValueError("artcp needs distinct endpoints")
    avoid = frozenset(canonical(*e) for e in avoid)
    tails = _tails or _Tails(tr)

    def extension_ok(x, k):
        return canonical(x, k) not in avoid

    def tail_ok(tail: Path):
        return not (avoid & tail.edges)

    return _search(tr.topology, tails, s, d, extension_ok, tail_ok, ledger)


def upstream_avoid_set(t: Topology, primary: Path, i: int) -> frozenset[tuple[int, int]]:
    """Edges a node at position ``i`` of ``primary`` must not use when its
    downstream link fails: that link, plus every edge touching an upstream
    node, so traffic is never handed back to a node it already crossed."""
    avoid = {canonical(primary.nodes[i], primary.nodes[i + 1])}
    for u in primary.nodes[:i]:
        for w in t.adjacency[u]:
            avoid.add(canonical(u, w))
    return frozenset(avoid)


@dataclass(frozen=True)
class BackupEntry:
    source: int
    dest: int
    at: int  # node that engages the backup
    mode: str
    path: Path | None
    failed_edge: tuple[int, int] | None = None

    @property
    def protected(self) -> bool:
        return self.path is not None

    @property
    def first_backup_hop(self) -> int | None:
        return self.path.nodes[1] if self.path is not None and self.path.hops >= 1 else None

    @property
    def second_backup_hop(self) -> int | None:
        return self.path.nodes[2] if self.path is not None and self.path.hops >= 2 else None


@dataclass(frozen=True)
class BackupTable:
    mode: str
    disjointness: Disjointness
    entries: dict[tuple[int, int, int], BackupEntry]
    ledger: MessageLedger | None = field(default=None, compare=False, repr=False)

    def get(self, s: int, d: int, at: int | None = None) -> BackupEntry | None:
        return self.entries.get((s, d, s if at is None else at))

    def __iter__(self):
        return iter(self.entries.values())

    def __len__(self):
        return len(self.entries)


def build_backup_tables(
    tr: RoutingTable,
    t: Topology | None = None,
    mode: str = ARTFP,
    disjointness=Disjointness.NODE,
) -> tuple[BackupTable, MessageLedger]:
    t = t or tr.topology
    mode = mode.upper()
    disjointness = Disjointness.parse(disjointness)
    ledger = MessageLedger(t.n)
    tails = _Tails(tr)
    entries: dict[tuple[int, int, int], BackupEntry] = {}
    for s in range(t.n):
        for d in range(t.n):
            if s == d or not tr.reachable(s, d):
                continue
            if mode == ARTFP:
                pa = artfp(tr, s, d, disjointness, ledger, tails)
                entries[(s, d, s)] = BackupEntry(s, d, s, ARTFP, pa)
            elif mode == ARTCP:
                primary = tails(s, d)
                for i in range(primary.hops):
                    m, nxt = primary.nodes[i], primary.nodes[i + 1]
                    avoid = upstream_avoid_set(t, primary, i)
                    pa = artcp(tr, m, d, avoid, ledger, tails)
                    entries[(s, d, m)] = BackupEntry(s, d, m, ARTCP, pa, canonical(m, nxt))
            else:
                raise ValueError(f"unknown backup mode {mode!r}")
    return BackupTable(mode, disjointness, entries, ledger), ledger


def brute_force_disjoint(
    t: Topology,
    s: int,
    d: int,
    avoid_edges=(),
    avoid_interior_nodes=(),
    max_nodes: int = 12,
) -> Path | None:
    """Exhaustive oracle: cheapest simple s-d path (ties broken by the
    lexicographically smallest node sequence) that uses no avoided edge and
    has no avoided node in its interior."""
    if t.n > max_nodes:
        raise OracleLimitError(f"{t.n} nodes exceeds the exhaustive bound of {max_nodes}")
    if s == d:
        return Path((s,), 0)
    bad_edges = {canonical(*e) for e in avoid_edges}
    bad_nodes = set(avoid_interior_nodes)
    best: list = [None, None]  # cost, nodes
    path = [s]
    on_path = [False] * t.n
    on_path[s] = True

    def walk(x: int, cost: int):
        # neighbours in ascending order, so the first path found at a given
        # cost is the lexicographically smallest one
        for y in t.adjacency[x]:
            if on_path[y] or canonical(x, y) in bad_edges:
                continue
            c = cost + t.cost(x, y)
            if best[0] is not None and c > best[0]:
                continue
            if y == d:
                if best[0] is None or c < best[0]:
                    best[0], best[1] = c, tuple(path) + (d,)
                continue
            if y in bad_nodes:
                continue
            if best[0] is not None and c >= best[0]:
                continue
            on_path[y] = True
            path.append(y)
            walk(y, c)
            path.pop()
            on_path[y] = False

    walk(s, 0)
    if best[1] is None:
        return None
    return Path(best[1], best[0])


def format_backup_table(bt: BackupTable, t: Topology) -> str:
    """Matrix of first backup hops engaged at the source (rows = sources,
    columns = destinations, '.' where unprotected) followed by one
    ``<s> <d> <mode> <protected> <path>`` line per entry."""
    labels = t.labels
    out = ["\t" + "\t".join(labels)]
    for s in range(t.n):
        cells = []
        for d in range(t.n):
            if s == d:
                cells.append("--")
                continue
            e = bt.get(s, d)
            hop = e.first_backup_hop if e is not None else None
            cells.append(labels[hop] if hop is not None else ".")
        out.append(labels[s] + "\t" + "\t".join(cells))
    out.append("")
    for (s, d, at), e in sorted(bt.entries.items()):
        path = e.path.format(labels) if e.path is not None else "-"
        out.append(f"{labels[s]} {labels[d]} {e.mode} {str(e.protected).lower()} {path}")
    return "\n".join(out) + "\n"
