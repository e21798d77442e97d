import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from artroute.topology import (
    Edge,
    Topology,
    TopologyError,
    fig1_topology,
    fig2_topology,
    neighbors,
    parse_topology,
    random_topology,
    serialize_topology,
)


def test_fig1_neighbors():
    t = fig1_topology()
    b = t.node_id("B")
    assert [t.label(v) for v in neighbors(t, b)] == ["A", "C", "D"]


def test_isolated_node_has_no_neighbors():
    t = parse_topology("nodes 3\n0 1 1\n")
    assert neighbors(t, 2) == []


def test_fig2_source_neighbors():
    t = fig2_topology()
    s = t.node_id("S")
    assert {t.label(v) for v in neighbors(t, s)} >= {"1", "2", "3"}


def test_unknown_node():
    with pytest.raises(KeyError):
        neighbors(fig1_topology(), 9)


def test_defaults_applied():
    e = parse_topology("nodes 2\n0 1 3\n").edge(1, 0)
    assert (e.cost, e.bandwidth, e.prop_delay, e.queue_limit) == (3, 1e6, 0.010, 50)


def test_optional_columns():
    e = parse_topology("nodes a b\nb a 2 5e5 0.002 7\n").edge(0, 1)
    assert (e.u, e.v, e.cost, e.bandwidth, e.prop_delay, e.queue_limit) == (0, 1, 2, 5e5, 0.002, 7)


@pytest.mark.parametrize(
    "text, line",
    [
        ("nodes 3\n0 1 1\n1 0 2\n", 3),  # duplicate
        ("nodes 3\n0 0 1\n", 2),  # self-loop
        ("nodes 3\n0 5 1\n", 2),  # undeclared
        ("nodes 3\n0 1 0\n", 2),  # cost
        ("nodes 3\n0 1 -2\n", 2),
        ("nodes 3\n0 1 x\n", 2),
        ("nodes 3\n0 1\n", 2),
        ("nodes 3\n0 1 1 -5\n", 2),  # bandwidth
        ("nodes 3\n0 1 1 1e6 0.01 0\n", 2),  # queue
        ("edges\n", 1),
        ("nodes 0\n", 1),
        ("nodes a a\n", 1),
    ],
)
def test_parse_errors_carry_line(text, line):
    with pytest.raises(TopologyError) as info:
        parse_topology(text)
    assert info.value.line == line


def test_empty_file():
    with pytest.raises(TopologyError):
        parse_topology("# only a comment\n\n")


def test_comments_and_blank_lines():
    t = parse_topology("# header\n\nnodes 2\n# edge follows\n0 1 1\n")
    assert t.has_edge(0, 1)


def test_edge_canonical_order():
    assert Edge(5, 2).key == (2, 5)
    with pytest.raises(TopologyError):
        Edge(1, 1)


def test_from_edges_rejects_duplicates():
    with pytest.raises(TopologyError):
        Topology.from_edges(3, [Edge(0, 1), Edge(1, 0)])


def test_random_topology_examples():
    assert list(random_topology(2, 0.0, 7).edges) == [(0, 1)]
    a = random_topology(10, 0.3, 42)
    assert serialize_topology(a) == serialize_topology(random_topology(10, 0.3, 42))
    assert len(random_topology(10, 1.0, 1).edges) == 45
    with pytest.raises(ValueError):
        random_topology(1, 0.5, 0)
    with pytest.raises(ValueError):
        random_topology(5, 1.5, 0)


@pytest.mark.parametrize("seed", range(40))
def test_random_topology_connected_and_symmetric(seed):
    t = random_topology(3 + seed % 15, (seed % 7) / 10, seed)
    assert t.is_connected()
    for v in t.nodes:
        for w in t.adjacency[v]:
            assert v in t.adjacency[w]


def _bridges_by_removal(t):
    return {k for k in t.edges if not t.without([k]).is_connected()}


@pytest.mark.parametrize("seed", range(30))
def test_bridges_match_removal_oracle(seed):
    t = random_topology(4 + seed % 9, 0.15, seed)
    assert t.bridges() == _bridges_by_removal(t)


topologies = st.builds(
    lambda n, p, seed, labelled: (
        random_topology(n, p, seed)
        if not labelled
        else Topology(n, random_topology(n, p, seed).edges, tuple(f"r{i}" for i in range(n)))
    ),
    st.integers(2, 12),
    st.floats(0, 1),
    st.integers(0, 2**64 - 1),
    st.booleans(),
)


@settings(max_examples=150, deadline=None)
@given(topologies)
def test_serialize_round_trip(t):
    assert parse_topology(serialize_topology(t)) == t


@settings(max_examples=50, deadline=None)
@given(
    st.lists(
        st.tuples(st.integers(1, 9), st.floats(1, 1e9), st.floats(0, 1), st.integers(1, 500)),
        min_size=1,
        max_size=6,
    )
)
def test_round_trip_edge_attributes(attrs):
    n = len(attrs) + 1
    edges = [Edge(i, i + 1, c, bw, d, q) for i, (c, bw, d, q) in enumerate(attrs)]
    t = Topology.from_edges(n, edges)
    again = parse_topology(serialize_topology(t))
    assert again == t
    for a, b in itertools.pairwise(sorted(again.edges)):
        assert a < b
