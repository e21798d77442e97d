"""Cross-validation of the backup-path searches against the exhaustive oracle."""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .art import Disjointness, _Tails, artcp, artfp, brute_force_disjoint
from .spf import Path, build_routing_tables
from .topology import Edge, Topology, canonical, random_topology


@dataclass
class OracleReport:
    graphs: int = 0
    artfp_pairs: int = 0
    artcp_cases: int = 0
    mismatches: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches


def corpus_graph(i: int, seed: int = 0, n_range: tuple[int, int] = (4, 10)) -> Topology:
    """The ``i``-th corpus graph: random size, density and link costs (1..4)."""
    rng = random.Random(f"corpus:{seed}:{i}")
    n = rng.randint(*n_range)
    base = random_topology(n, rng.uniform(0.0, 0.6), rng.getrandbits(64))
    return Topology.from_edges(n, [Edge(u, v, cost=rng.randint(1, 4)) for u, v in sorted(base.edges)])


def _valid(path: Path, t: Topology, s: int, d: int, avoid_edges, avoid_interior) -> bool:
    if path.nodes[0] != s or path.nodes[-1] != d or not path.is_simple():
        return False
    if any(not t.has_edge(a, b) for a, b in zip(path.nodes, path.nodes[1:])):
        return False
    return not (path.edges & avoid_edges) and not (path.interior & avoid_interior)


def check_graph(t: Topology, rng: random.Random, report: OracleReport, artcp_per_graph: int = 10):
    tr = build_routing_tables(t)
    tails = _Tails(tr)
    report.graphs += 1
    for mode in (Disjointness.NODE, Disjointness.EDGE):
        for s in range(t.n):
            for d in range(t.n):
                if s == d:
                    continue
                primary = tails(s, d)
                avoid_e = primary.edges
                avoid_n = primary.interior if mode is Disjointness.NODE else frozenset()
                got = artfp(tr, s, d, mode, _tails=tails)
                want = brute_force_disjoint(t, s, d, avoid_e, avoid_n)
                report.artfp_pairs += 1
                if (got is None) != (want is None):
                    report.mismatches.append(
                        f"ARTFP/{mode.value} n={t.n} {s}->{d}: search={got} oracle={want}")
                elif got is not None and not _valid(got, t, s, d, avoid_e, avoid_n):
                    report.mismatches.append(f"ARTFP/{mode.value} n={t.n} {s}->{d}: invalid {got}")
    edges = sorted(t.edges)
    for _ in range(artcp_per_graph):
        s, d = rng.sample(range(t.n), 2)
        avoid = frozenset(canonical(*e) for e in rng.sample(edges, rng.randint(0, len(edges))))
        got = artcp(tr, s, d, avoid, _tails=tails)
        want = brute_force_disjoint(t, s, d, avoid_edges=avoid)
        report.artcp_cases += 1
        if (got is None) != (want is None):
            report.mismatches.append(f"ARTCP n={t.n} {s}->{d} avoid={sorted(avoid)}: search={got} oracle={want}")
        elif got is not None and not _valid(got, t, s, d, avoid, frozenset()):
            report.mismatches.append(f"ARTCP n={t.n} {s}->{d}: invalid {got}")


def cross_validate(graphs: int = 500, seed: int = 0, n_range: tuple[int, int] = (4, 10),
                   artcp_per_graph: int = 10) -> OracleReport:
    report = OracleReport()
    rng = random.Random(f"artcp:{seed}")
    for i in range(graphs):
        check_graph(corpus_graph(i, seed, n_range), rng, report, artcp_per_graph)
    return report
