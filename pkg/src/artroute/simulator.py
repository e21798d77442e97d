"""Deterministic packet-level simulation of LS, LS+ARTFP and LS+ARTCP.

Links are store-and-forward with a FIFO drop-tail queue per direction.  The
link-state protocol reconverges underneath every mode on the same timeline;
the modes differ only in how traffic is steered while that happens:

* ``LS``: stale next hops until the local FIB is rewritten.  A node that has
  detected its dead link bounces packets to the previous hop (or drops them,
  see ``ls_failure_behavior``), so packets circulate until TTL expiry.
* ``ARTFP``: once the source has been notified it pins the precomputed
  disjoint path on every new packet of the affected flow.
* ``ARTCP``: the endpoint of the dead link pins its local alternative on each
  packet it can no longer forward, as soon as layer 2 reports the loss.

Backup steering is realised as a route tag (source routing along the stored
path) that stays with the packet until delivery.
"""

from __future__ import annotations

import heapq
import math
import random
from collections import deque
from dataclasses import dataclass, field
from typing import NamedTuple

from .art import ARTCP, ARTFP, BackupTable
from .convergence import (
    DEFAULT_DETECTION_DELAY,
    ConvergenceTimeline,
    ConvergenceTimers,
    FailureEvent,
    convergence_timeline,
)
from .spf import RoutingTable, build_routing_tables, primary_path
from .topology import Edge, Topology, canonical

LS = "LS"
MODES = (LS, ARTFP, ARTCP)
BOUNCE = "bounce_to_previous"
DROP = "drop_at_failure"

LINK_DOWN = "link_down"
TTL_EXPIRED = "ttl_expired"
QUEUE_FULL = "queue_full"
UNREACHABLE = "unreachable"

_GEN, _ARRIVE, _FAIL, _REPAIR, _DETECT, _FIB = range(6)
_KIND_NAMES = {_GEN: "gen", _ARRIVE: "arrive", _FAIL: "fail", _REPAIR: "repair",
               _DETECT: "detect", _FIB: "fib"}


class ConfigError(ValueError):
    pass


def parse_mode(value: str) -> str:
    v = str(value).strip().upper()
    if v in ("LS", "LINK-STATE", "LINKSTATE"):
        return LS
    if v in (ARTFP, ARTCP):
        return v
    raise ConfigError(f"unknown mode {value!r}")


@dataclass
class SimConfig:
    duration: float = 50.0
    cbr_rate: float = 200_000.0  # bits/s
    cbr_start: float = 1.0
    packet_size: int = 500  # bytes
    flows: list[tuple[int, int]] | None = None
    mode: str = LS
    ttl_init: int = 64
    seed: int = 0
    timers: ConvergenceTimers = field(default_factory=ConvergenceTimers)
    detection_delay: float = DEFAULT_DETECTION_DELAY
    ls_failure_behavior: str = BOUNCE
    event_log: bool = False

    def validate(self):
        self.mode = parse_mode(self.mode)
        if not 0 <= self.cbr_start < self.duration:
            raise ConfigError("cbr_start must lie in [0, duration)")
        if not self.cbr_rate > 0:
            raise ConfigError("cbr_rate must be positive")
        if self.packet_size < 1:
            raise ConfigError("packet_size must be >= 1 byte")
        if self.ttl_init < 1:
            raise ConfigError("ttl_init must be >= 1")
        if self.detection_delay < 0:
            raise ConfigError("detection_delay must be non-negative")
        if self.ls_failure_behavior not in (BOUNCE, DROP):
            raise ConfigError(f"ls_failure_behavior must be {BOUNCE} or {DROP}")

    @property
    def packet_interval(self) -> float:
        return self.packet_size * 8 / self.cbr_rate


class Packet:
    __slots__ = ("id", "src", "dst", "created_at", "ttl", "route_tag", "hops_traversed",
                 "path", "dead", "prop_total")

    def __init__(self, pid, src, dst, created_at, ttl):
        self.id = pid
        self.src = src
        self.dst = dst
        self.created_at = created_at
        self.ttl = ttl
        self.route_tag: tuple[int, ...] | None = None
        self.hops_traversed = 0
        self.path = [src]
        self.dead = False
        self.prop_total = 0.0


class Action(NamedTuple):
    kind: str  # "transmit" | "deliver" | "drop"
    next_hop: int | None = None
    reason: str | None = None
    tag: tuple[int, ...] | None = None


class Channel:
    """One direction of a link: FIFO drop-tail queue plus serialiser."""

    __slots__ = ("edge", "busy_until", "waiting", "in_transit")

    def __init__(self, edge: Edge):
        self.edge = edge
        self.busy_until = 0.0
        self.waiting: deque[float] = deque()  # start times of queued packets
        self.in_transit: set[Packet] = set()

    def queue_depth(self, now: float) -> int:
        w = self.waiting
        while w and w[0] <= now:
            w.popleft()
        return len(w)

    def transmit(self, pkt: Packet, now: float, size_bits: float) -> float | None:
        """Arrival time at the far end, or ``None`` when the queue is full."""
        if self.queue_depth(now) >= self.edge.queue_limit:
            return None
        start = self.busy_until if self.busy_until > now else now
        if start > now:
            self.waiting.append(start)
        self.busy_until = start + size_bits / self.edge.bandwidth
        self.in_transit.add(pkt)
        return self.busy_until + self.edge.prop_delay

    def flush(self, now: float) -> list[Packet]:
        lost = list(self.in_transit)
        self.in_transit.clear()
        self.waiting.clear()
        self.busy_until = now
        return lost


def link_transmit(e: Edge, pkt: Packet | None, now: float, size_bytes: int = 500,
                  channel: Channel | None = None) -> float | None:
    """Completion (arrival) time for ``pkt`` sent over ``e`` at ``now``:
    serialisation + propagation + FIFO queueing; ``None`` on drop-tail."""
    ch = channel if channel is not None else Channel(e)
    return ch.transmit(pkt if pkt is not None else Packet(-1, e.u, e.v, now, 1), now, size_bytes * 8)


@dataclass
class MetricsRecord:
    mode: str
    sent: int = 0
    delivered: int = 0
    dropped_link_down: int = 0
    dropped_ttl: int = 0
    dropped_queue: int = 0
    dropped_unreachable: int = 0
    in_flight: int = 0
    total_delay: float = 0.0
    hop_counts: list[int] = field(default_factory=list)
    delays: list[float] = field(default_factory=list)
    created: list[float] = field(default_factory=list)
    tagged_hops: list[int] = field(default_factory=list)
    throughput_timeseries: list[float] = field(default_factory=list)
    forwarding_load: list[int] = field(default_factory=list)
    lsa_load: list[int] = field(default_factory=list)
    art_load: list[int] = field(default_factory=list)
    primary_len: float | None = None
    new_primary_len: float | None = None
    failure_window: tuple[float, float] | None = None
    max_hops: int = 0
    tagged_revisits: int = 0
    delay_floor_violations: int = 0
    events: list[str] = field(default_factory=list)

    @property
    def dropped(self) -> int:
        return self.dropped_link_down + self.dropped_ttl + self.dropped_queue + self.dropped_unreachable

    def conserved(self) -> bool:
        return self.sent == self.delivered + self.dropped + self.in_flight

    @property
    def mean_delay(self) -> float | None:
        return self.total_delay / self.delivered if self.delivered else None

    @property
    def backup_len(self) -> float | None:
        return sum(self.tagged_hops) / len(self.tagged_hops) if self.tagged_hops else None

    @property
    def control_load(self) -> list[int]:
        return [a + b for a, b in zip(self.lsa_load, self.art_load)]

    @property
    def node_load(self) -> list[int]:
        return [f + c for f, c in zip(self.forwarding_load, self.control_load)]

    @property
    def control_msgs_total(self) -> int:
        # each message is counted once at its sender and once at its receiver
        return sum(self.control_load) // 2

    def window_delays(self) -> list[float]:
        if self.failure_window is None:
            return []
        lo, hi = self.failure_window
        return [dl for c, dl in zip(self.created, self.delays) if lo <= c <= hi]

    @property
    def window_mean_delay(self) -> float | None:
        w = self.window_delays()
        return sum(w) / len(w) if w else None

    def throughput_bps_mean(self, duration: float, start: float) -> float:
        return sum(self.throughput_timeseries) / (duration - start)


def lsa_flood_load(t_after: Topology, origins) -> list[int]:
    """Messages handled per node when each origin floods one advertisement:
    every node forwards its first copy to all neighbours but the one it came
    from.  Sent and received copies both count."""
    load = [0] * t_after.n
    for origin in origins:
        parent = {origin: None}
        order = [origin]
        i = 0
        while i < len(order):
            x = order[i]
            for y in t_after.adjacency[x]:
                if y not in parent:
                    parent[y] = x
                    order.append(y)
            i += 1
        for x in order:
            for y in t_after.adjacency[x]:
                if y != parent[x]:
                    load[x] += 1
                    load[y] += 1
    return load


@dataclass
class _Change:
    time: float
    edge: tuple[int, int]
    restored: bool
    protocol: ConvergenceTimeline
    physical: ConvergenceTimeline
    table: RoutingTable
    down_after: frozenset


class Simulation:
    def __init__(self, t: Topology, tr: RoutingTable, bt: BackupTable | None,
                 sched: list[FailureEvent], cfg: SimConfig):
        cfg.validate()
        self.t, self.tr, self.bt, self.cfg = t, tr, bt, cfg
        self.mode = cfg.mode
        if (bt is None) != (self.mode == LS):
            raise ConfigError("a backup table is required exactly when mode is not LS")
        if bt is not None and bt.mode != self.mode:
            raise ConfigError(f"backup table built for {bt.mode}, simulation mode is {self.mode}")
        if tr.topology is not t and tr.topology != t:
            raise ConfigError("routing table was not built from this topology")
        for ev in sched:
            if not t.has_edge(*ev.edge):
                raise ConfigError(f"failure on unknown link {ev.edge}")
            if not ev.fail_time < cfg.duration:
                raise ConfigError("failure scheduled after the end of the simulation")
        self.sched = sorted(sched, key=lambda e: (e.fail_time, e.edge))
        flows = cfg.flows
        if not flows:
            flows = [self._random_flow()]
        self.flows = [(t.node_id(s), t.node_id(d)) for s, d in flows]
        for s, d in self.flows:
            if s == d or not tr.reachable(s, d):
                raise ConfigError(f"flow {s}->{d} is not a reachable pair")
        self.size_bits = cfg.packet_size * 8
        self.channels: dict[tuple[int, int], Channel] = {}
        for (u, v), e in t.edges.items():
            self.channels[(u, v)] = Channel(e)
            self.channels[(v, u)] = Channel(e)
        self.link_up = {k: True for k in t.edges}
        self.detected_down: set[tuple[int, int]] = set()
        self._plan_changes()
        self.tables = [tr] + [c.table for c in self.changes]
        self.fib_index = [0] * t.n
        self._engagements = self._artfp_engagements()

    def _random_flow(self) -> tuple[int, int]:
        rng = random.Random(self.cfg.seed ^ 0x5EED)
        pairs = [(s, d) for s in range(self.t.n) for d in range(self.t.n)
                 if s != d and self.tr.reachable(s, d)]
        if not pairs:
            raise ConfigError("topology has no reachable pair for a flow")
        return pairs[rng.randrange(len(pairs))]

    def _plan_changes(self):
        cfg = self.cfg
        raw = []
        for ev in self.sched:
            raw.append((ev.fail_time, 0, ev, False))
            if ev.repair_time is not None and ev.repair_time < cfg.duration:
                raw.append((ev.repair_time, 1, ev, True))
        raw.sort(key=lambda r: (r[0], r[1], r[2].edge))
        protocol_delay = cfg.detection_delay + cfg.timers.notification_timer
        down: set[tuple[int, int]] = set()
        prev = None
        self.changes: list[_Change] = []
        for i, (when, _, ev, restored) in enumerate(raw):
            before = set(down)
            proto = convergence_timeline(
                self.t, cfg.timers, ev, protocol_delay, seed=_subseed(cfg.seed, i),
                down=before, restored=restored, previous=prev)
            phys = convergence_timeline(
                self.t, cfg.timers, ev, cfg.detection_delay, seed=_subseed(cfg.seed, i),
                down=before, restored=restored)
            if restored:
                down.discard(ev.edge)
            else:
                down.add(ev.edge)
            self.changes.append(_Change(when, ev.edge, restored, proto, phys,
                                        build_routing_tables(self.t.without(down)),
                                        frozenset(down)))
            prev = proto

    def _artfp_engagements(self) -> dict[tuple[int, int], list[tuple[float, float, int]]]:
        """Per flow, the intervals in which its source steers new packets onto
        the disjoint path, with the index of the triggering change."""
        out = {}
        if self.mode != ARTFP:
            return out
        for s, d in self.flows:
            spans = []
            pedges = primary_path(self.tr, s, d).edges
            for i, c in enumerate(self.changes):
                if c.restored or c.edge not in pedges:
                    continue
                end = c.protocol.full_convergence
                for later in self.changes[i + 1:]:
                    if later.restored and later.edge == c.edge:
                        end = min(end, later.time)
                        break
                spans.append((c.physical.lsa_arrival[s], end, i))
            out[(s, d)] = spans
        return out

    # -- forwarding -----------------------------------------------------

    def forward(self, pkt: Packet, at: int, now: float) -> Action:
        if at == pkt.dst:
            return Action("deliver")
        if pkt.route_tag is not None:
            tag = pkt.route_tag
            try:
                nxt = tag[tag.index(at) + 1]
            except (ValueError, IndexError):
                pkt.route_tag = None
            else:
                if self.link_up[canonical(at, nxt)]:
                    return Action("transmit", nxt)
                return Action("drop", reason=LINK_DOWN)

        table = self.tables[self.fib_index[at]]
        nh = table.next_hop[at][pkt.dst]
        if nh is None:
            return Action("drop", reason=UNREACHABLE)
        key = canonical(at, nh)
        if self.link_up[key]:
            return Action("transmit", nh)
        if key not in self.detected_down:
            # not yet noticed: the packet goes out on a dead wire
            return Action("drop", reason=LINK_DOWN)
        if self.mode == ARTCP:
            entry = self.bt.get(pkt.src, pkt.dst, at)
            if (entry is not None and entry.protected and entry.failed_edge == key
                    and set(entry.path.nodes).isdisjoint(pkt.path[:-1])):
                return Action("transmit", entry.path.nodes[1], tag=entry.path.nodes)
        if self.cfg.ls_failure_behavior == BOUNCE and len(pkt.path) >= 2:
            prev = pkt.path[-2]
            if self.link_up[canonical(at, prev)]:
                return Action("transmit", prev)
        return Action("drop", reason=LINK_DOWN)

    def _source_tag(self, pkt: Packet, now: float) -> tuple[int, ...] | None:
        spans = self._engagements.get((pkt.src, pkt.dst))
        if not spans:
            return None
        for start, end, i in spans:
            if start <= now < end:
                entry = self.bt.get(pkt.src, pkt.dst)
                if entry is None or not entry.protected:
                    return None
                # skip if the disjoint path crosses a link the source knows is down
                known = {c.edge for c in self.changes[: i + 1] if not c.restored}
                known -= {c.edge for c in self.changes[: i + 1] if c.restored}
                if entry.path.edges & known:
                    return None
                return entry.path.nodes
        return None

    # -- event loop -----------------------------------------------------

    def run(self) -> MetricsRecord:
        cfg, t = self.cfg, self.t
        rec = MetricsRecord(cfg.mode)
        rec.forwarding_load = [0] * t.n
        rec.throughput_timeseries = [0.0] * int(math.ceil(cfg.duration))
        rec.lsa_load = [0] * t.n
        for c in self.changes:
            after = t.without(c.down_after)
            for v, x in enumerate(lsa_flood_load(after, c.edge)):
                rec.lsa_load[v] += x
        rec.art_load = (self.bt.ledger.per_node() if self.bt is not None and self.bt.ledger
                        is not None else [0] * t.n)
        rec.primary_len = _mean(primary_path(self.tr, s, d).hops for s, d in self.flows)
        final = self.tables[-1]
        reach = [(s, d) for s, d in self.flows if final.reachable(s, d)]
        rec.new_primary_len = _mean(primary_path(final, s, d).hops for s, d in reach) if reach else None
        failures = [c for c in self.changes if not c.restored]
        if failures:
            rec.failure_window = (failures[0].time,
                                  max(c.protocol.full_convergence for c in self.changes))
        log = rec.events if cfg.event_log else None

        heap: list = []
        seq = 0

        def push(when, kind, a=None, b=None):
            nonlocal seq
            heapq.heappush(heap, (when, seq, kind, a, b))
            seq += 1

        for i, c in enumerate(self.changes):
            push(c.time, _REPAIR if c.restored else _FAIL, i)
            if not c.restored:
                push(c.physical.detection_time, _DETECT, i)
            for v in range(t.n):
                if c.protocol.fib_ready[v] != math.inf:
                    push(c.protocol.fib_ready[v], _FIB, i, v)
        interval = cfg.packet_interval
        for fi, _ in enumerate(self.flows):
            push(cfg.cbr_start, _GEN, fi, 0)

        next_id = 0
        end = cfg.duration
        size = self.size_bits
        channels = self.channels

        def drop(pkt, reason, now, at):
            if reason == LINK_DOWN:
                rec.dropped_link_down += 1
            elif reason == TTL_EXPIRED:
                rec.dropped_ttl += 1
            elif reason == QUEUE_FULL:
                rec.dropped_queue += 1
            else:
                rec.dropped_unreachable += 1
            pkt.dead = True
            if log is not None:
                log.append(f"{now:.6f} drop {pkt.id} {at} {reason}")

        def handle(pkt, at, now):
            act = self.forward(pkt, at, now)
            if act.kind == "deliver":
                delay = now - pkt.created_at
                rec.delivered += 1
                rec.total_delay += delay
                rec.hop_counts.append(pkt.hops_traversed)
                rec.delays.append(delay)
                rec.created.append(pkt.created_at)
                if pkt.route_tag is not None:
                    rec.tagged_hops.append(pkt.hops_traversed)
                if delay + 1e-12 < pkt.prop_total:
                    rec.delay_floor_violations += 1
                b = int(now)
                if b < len(rec.throughput_timeseries):
                    rec.throughput_timeseries[b] += size
                if log is not None:
                    log.append(f"{now:.6f} deliver {pkt.id} {at} hops={pkt.hops_traversed}")
                return
            if act.kind == "drop":
                drop(pkt, act.reason, now, at)
                return
            if act.tag is not None:
                pkt.route_tag = act.tag
                if log is not None:
                    log.append(f"{now:.6f} tag {pkt.id} {at} {'-'.join(map(str, act.tag))}")
            nxt = act.next_hop
            ch = channels[(at, nxt)]
            arrival = ch.transmit(pkt, now, size)
            if arrival is None:
                drop(pkt, QUEUE_FULL, now, at)
                return
            pkt.ttl -= 1
            pkt.hops_traversed += 1
            pkt.prop_total += ch.edge.prop_delay
            rec.forwarding_load[at] += 1
            push(arrival, _ARRIVE, pkt, (at, nxt))

        while heap:
            now, _, kind, a, b = heap[0]
            if now >= end:
                break
            heapq.heappop(heap)
            if kind == _ARRIVE:
                pkt = a
                if pkt.dead:
                    continue
                channels[b].in_transit.discard(pkt)
                at = b[1]
                if pkt.route_tag is not None and at in pkt.path:
                    rec.tagged_revisits += 1
                pkt.path.append(at)
                if pkt.hops_traversed > rec.max_hops:
                    rec.max_hops = pkt.hops_traversed
                if at != pkt.dst and pkt.ttl <= 0:
                    drop(pkt, TTL_EXPIRED, now, at)
                    continue
                handle(pkt, at, now)
            elif kind == _GEN:
                fi, i = a, b
                s, d = self.flows[fi]
                pkt = Packet(next_id, s, d, now, cfg.ttl_init)
                next_id += 1
                rec.sent += 1
                if self.mode == ARTFP:
                    tag = self._source_tag(pkt, now)
                    if tag is not None:
                        pkt.route_tag = tag
                if log is not None:
                    log.append(f"{now:.6f} gen {pkt.id} {s} dst={d}")
                handle(pkt, s, now)
                nxt_time = cfg.cbr_start + (i + 1) * interval
                if nxt_time < end:
                    push(nxt_time, _GEN, fi, i + 1)
            elif kind == _FAIL:
                c = self.changes[a]
                self.link_up[c.edge] = False
                u, v = c.edge
                for key in ((u, v), (v, u)):
                    for pkt in channels[key].flush(now):
                        drop(pkt, LINK_DOWN, now, key[0])
                if log is not None:
                    log.append(f"{now:.6f} fail - {u} link={u}-{v}")
            elif kind == _REPAIR:
                c = self.changes[a]
                self.link_up[c.edge] = True
                self.detected_down.discard(c.edge)
                if log is not None:
                    log.append(f"{now:.6f} repair - {c.edge[0]} link={c.edge[0]}-{c.edge[1]}")
            elif kind == _DETECT:
                c = self.changes[a]
                if not self.link_up[c.edge]:
                    self.detected_down.add(c.edge)
                if log is not None:
                    log.append(f"{now:.6f} detect - {c.edge[0]} link={c.edge[0]}-{c.edge[1]}")
            elif kind == _FIB:
                i, v = a, b
                if self.fib_index[v] < i + 1:
                    self.fib_index[v] = i + 1
                if log is not None:
                    log.append(f"{now:.6f} fib - {v} change={i}")

        rec.in_flight = sum(len(ch.in_transit) for ch in channels.values())
        return rec


def _subseed(seed: int, i: int) -> int:
    return (seed * 1_000_003 + i * 7919 + 17) & 0xFFFFFFFFFFFFFFFF


def _mean(values) -> float | None:
    values = list(values)
    return sum(values) / len(values) if values else None


def run(t: Topology, tr: RoutingTable, bt: BackupTable | None,
        sched: list[FailureEvent], cfg: SimConfig) -> MetricsRecord:
    return Simulation(t, tr, bt, sched, cfg).run()
