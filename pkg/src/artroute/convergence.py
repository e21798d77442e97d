"""Failure schedules and the link-state reconvergence timeline.

A failure is seen by the two endpoints of the link after ``detection_delay``.
Every node then follows the same recipe before its forwarding table reflects
the new topology: LSP generation at the endpoint, per-hop LSP processing
while the advertisement floods, an optional SPF hold-down, the SPF run
itself and finally the FIB rewrite at a fixed number of entries per ms.
"""

from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass, field

from .spf import Path, RoutingTable, build_routing_tables
from .topology import Topology, TopologyError, canonical

DEFAULT_DETECTION_DELAY = 0.010


@dataclass(frozen=True)
class ConvergenceTimers:
    notification_timer: float = 2.0
    lsp_generation: float = 0.050
    spf_timer: float = 5.5
    lsp_processing_per_hop: float = 0.010
    spf_compute_range: tuple[float, float] = (0.100, 0.400)
    fib_update_rate: float = 20.0  # entries per ms

    # lower bounds of the three configurable protocol timers
    MINIMUMS = {"notification_timer": 0.010, "lsp_generation": 0.001, "spf_timer": 0.001}

    def __post_init__(self):
        object.__setattr__(self, "spf_compute_range", tuple(float(x) for x in self.spf_compute_range))
        for name in ("notification_timer", "lsp_generation", "spf_timer",
                     "lsp_processing_per_hop", "fib_update_rate"):
            value = getattr(self, name)
            if not value > 0:
                raise ValueError(f"{name} must be strictly positive, got {value}")
            floor = self.MINIMUMS.get(name)
            if floor is not None and value < floor - 1e-12:
                raise ValueError(f"{name} below its minimum of {floor} s")
        low, high = self.spf_compute_range
        if not 0 < low <= high:
            raise ValueError("spf_compute_range must satisfy 0 < low <= high")

    @classmethod
    def minimum(cls) -> "ConvergenceTimers":
        """Timers at their documented minimum values (processing phases keep
        their typical values, SPF computation pinned to its low end)."""
        return cls(
            notification_timer=0.010,
            lsp_generation=0.001,
            spf_timer=0.001,
            lsp_processing_per_hop=0.010,
            spf_compute_range=(0.100, 0.100),
            fib_update_rate=20.0,
        )

    def fib_update_time(self, entries: int) -> float:
        return entries / (self.fib_update_rate * 1000.0)


@dataclass(frozen=True)
class FailureEvent:
    edge: tuple[int, int]
    fail_time: float
    repair_time: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "edge", canonical(*self.edge))
        if not self.fail_time > 0:
            raise ValueError("fail_time must be positive")
        if self.repair_time is not None and not self.repair_time > self.fail_time:
            raise ValueError("repair_time must come after fail_time")

    def is_down(self, now: float) -> bool:
        return now >= self.fail_time and (self.repair_time is None or now < self.repair_time)


@dataclass(frozen=True)
class ConvergenceTimeline:
    """Per-node instants for one topology change.

    ``fib_ready[v]`` is exactly ``detection_time + lsp_generation +
    hops[v] * lsp_processing_per_hop + holddown[v] + spf_compute[v] +
    fib_update[v]``.
    """

    edge: tuple[int, int]
    event_time: float
    detection_time: float
    hops: tuple[float, ...]
    lsa_arrival: tuple[float, ...]
    holddown: tuple[float, ...]
    spf_start: tuple[float, ...]
    spf_compute: tuple[float, ...]
    fib_entries: tuple[int, ...]
    fib_update: tuple[float, ...]
    fib_ready: tuple[float, ...]
    timers: ConvergenceTimers = field(repr=False)

    @property
    def full_convergence(self) -> float:
        finite = [x for x in self.fib_ready if x != math.inf]
        return max(finite) if finite else self.detection_time

    def components(self, v: int) -> dict[str, float]:
        return {
            "notification": self.detection_time - self.event_time,
            "lsp_generation": self.timers.lsp_generation,
            "lsp_processing": self.hops[v] * self.timers.lsp_processing_per_hop,
            "spf_holddown": self.holddown[v],
            "spf_computation": self.spf_compute[v],
            "fib_update": self.fib_update[v],
        }


def _hops_from(t: Topology, sources) -> list[float]:
    hops = [math.inf] * t.n
    queue = deque()
    for s in sources:
        hops[s] = 0
        queue.append(s)
    while queue:
        x = queue.popleft()
        for y in t.adjacency[x]:
            if hops[y] == math.inf:
                hops[y] = hops[x] + 1
                queue.append(y)
    return hops


def _component_sizes(t: Topology) -> list[int]:
    size = [0] * t.n
    seen = [False] * t.n
    for root in range(t.n):
        if seen[root]:
            continue
        members = [root]
        seen[root] = True
        i = 0
        while i < len(members):
            for y in t.adjacency[members[i]]:
                if not seen[y]:
                    seen[y] = True
                    members.append(y)
            i += 1
        for v in members:
            size[v] = len(members)
    return size


def convergence_timeline(
    t: Topology,
    timers: ConvergenceTimers,
    ev: FailureEvent,
    detection_delay: float = DEFAULT_DETECTION_DELAY,
    *,
    seed: int = 0,
    spf_draw: float | None = None,
    down=(),
    restored: bool = False,
    previous: ConvergenceTimeline | None = None,
) -> ConvergenceTimeline:
    """Reconvergence instants of every node after ``ev``.

    ``down`` lists other links already out of service; with ``restored`` the
    event is the repair of ``ev.edge`` rather than its failure.  SPF
    computation time is drawn per node (ascending id) from a RNG seeded with
    ``seed`` unless ``spf_draw`` pins it.  ``previous`` is the last
    timeline, used for the SPF hold-down.
    """
    if not t.has_edge(*ev.edge):
        raise TopologyError(f"failed edge {ev.edge} not in topology")
    if detection_delay < 0:
        raise ValueError("detection_delay must be non-negative")
    down = {canonical(*e) for e in down}
    if restored:
        down.discard(ev.edge)
        event_time = ev.repair_time
        if event_time is None:
            raise ValueError("restored timeline needs a repair_time")
    else:
        down.add(ev.edge)
        event_time = ev.fail_time
    after = t.without(down)
    detection = event_time + detection_delay
    hops = _hops_from(after, ev.edge)
    sizes = _component_sizes(after)
    if spf_draw is None:
        rng = random.Random(seed)
        low, high = timers.spf_compute_range
        draws = [rng.uniform(low, high) for _ in range(t.n)]
    else:
        draws = [float(spf_draw)] * t.n

    lsa, hold, start, upd, ready = [], [], [], [], []
    for v in range(t.n):
        arrival = detection + timers.lsp_generation + hops[v] * timers.lsp_processing_per_hop
        begin = arrival
        if previous is not None and previous.spf_start[v] != math.inf:
            begin = max(arrival, previous.spf_start[v] + timers.spf_timer)
        fib = timers.fib_update_time(sizes[v])
        lsa.append(arrival)
        hold.append(begin - arrival if begin != math.inf else 0.0)
        start.append(begin)
        upd.append(fib)
        ready.append(begin + draws[v] + fib)
    return ConvergenceTimeline(
        edge=ev.edge,
        event_time=event_time,
        detection_time=detection,
        hops=tuple(hops),
        lsa_arrival=tuple(lsa),
        holddown=tuple(hold),
        spf_start=tuple(start),
        spf_compute=tuple(draws),
        fib_entries=tuple(sizes),
        fib_update=tuple(upd),
        fib_ready=tuple(ready),
        timers=timers,
    )


def generate_failures(
    t: Topology,
    primary: Path,
    count: int,
    window: tuple[float, float],
    seed: int,
    repair_after: float | None = None,
) -> list[FailureEvent]:
    """Random failures of primary-path links, uniform in edge and time.

    Without repairs every event takes a distinct edge; with ``repair_after``
    an edge may fail again once it has been repaired.
    """
    candidates = sorted(primary.edges)
    if not candidates:
        raise ValueError("primary path has no edges")
    if count < 1:
        raise ValueError("count must be >= 1")
    start, end = window
    if not 0 < start <= end:
        raise ValueError("failure window must satisfy 0 < start <= end")
    if repair_after is None and count > len(candidates):
        raise ValueError(
            f"{count} failures requested but the primary path has only {len(candidates)} links"
        )
    rng = random.Random(seed)
    times = sorted(rng.uniform(start, end) for _ in range(count))
    events: list[FailureEvent] = []
    for when in times:
        live = [e for e in candidates if not any(f.edge == e and f.is_down(when) for f in events)]
        if not live:
            raise ValueError(f"every primary link is already down at t={when:.3f}")
        edge = live[rng.randrange(len(live))]
        repair = when + repair_after if repair_after is not None else None
        events.append(FailureEvent(edge, when, repair))
    return events


def reconverged_tables(t: Topology, down) -> RoutingTable:
    return build_routing_tables(t.without(down))


def parse_failure_schedule(text: str, t: Topology) -> list[FailureEvent]:
    """Lines ``<u> <v> <fail_time_s> [repair_time_s]``; ``#`` starts a comment."""
    events = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        if len(toks) not in (3, 4):
            raise TopologyError("expected '<u> <v> <fail_time> [repair_time]'", lineno)
        try:
            u, v = t.node_id(toks[0]), t.node_id(toks[1])
        except KeyError as exc:
            raise TopologyError(str(exc), lineno) from None
        if not t.has_edge(u, v):
            raise TopologyError(f"no link {toks[0]}-{toks[1]}", lineno)
        try:
            fail = float(toks[2])
            repair = float(toks[3]) if len(toks) == 4 else None
            events.append(FailureEvent((u, v), fail, repair))
        except ValueError as exc:
            raise TopologyError(str(exc), lineno) from None
    return sorted(events, key=lambda e: (e.fail_time, e.edge))


def format_failure_schedule(events, t: Topology) -> str:
    lines = []
    for e in events:
        u, v = e.edge
        row = f"{t.labels[u]} {t.labels[v]} {e.fail_time!r}"
        if e.repair_time is not None:
            row += f" {e.repair_time!r}"
        lines.append(row)
    return "\n".join(lines) + "\n"
