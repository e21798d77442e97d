"""Batch experiments: config files, per-trial runs across modes, CSV output,
aggregation and plot data."""

from __future__ import annotations

import csv
import hashlib
import io
import math
import os
import random
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path as FsPath

from .art import Disjointness, build_backup_tables
from .convergence import ConvergenceTimers, FailureEvent, generate_failures, parse_failure_schedule
from .simulator import BOUNCE, DROP, LS, MODES, ConfigError, MetricsRecord, SimConfig, parse_mode, run
from .spf import build_routing_tables, primary_path
from .topology import Topology, TopologyError, parse_topology, random_topology

SCHEMA = "artroute-trials/1"
CSV_COLUMNS = (
    "trial", "mode", "primary_len", "backup_len", "new_primary_len", "sent", "delivered",
    "dropped_link_down", "dropped_ttl", "dropped_queue", "mean_delay_s", "throughput_bps_mean",
    "control_msgs_total", "max_node_load",
    # appended after the fixed block
    "dropped_unreachable", "in_flight", "window_mean_delay_s", "flow_src", "flow_dst",
    "failed_edges",
)


class ExperimentIOError(OSError):
    pass


def subseed(seed: int, purpose: str) -> int:
    digest = hashlib.sha256(f"{seed}:{purpose}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def _floats(value: str, n: int) -> tuple[float, ...]:
    parts = [p for p in value.replace(",", " ").split() if p]
    if len(parts) != n:
        raise ValueError(f"expected {n} numbers")
    return tuple(float(p) for p in parts)


def _bool(value: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def _optional_float(value: str) -> float | None:
    return None if value.strip().lower() in ("", "none", "off") else float(value)


@dataclass
class ExperimentConfig:
    """Every field is a config-file key of the same name."""

    topology: str | None = None  # file; random graph when unset
    nodes: int = 20
    edge_prob: float = 0.2
    trials: int = 50
    base_seed: int = 1
    modes: tuple[str, ...] = MODES
    flow: tuple[str, str] | None = None
    require_recoverable: bool = True
    failures_file: str | None = None
    failures_per_trial: int = 1
    failure_window: tuple[float, float] = (5.0, 45.0)
    repair_after: float | None = None
    duration: float = 50.0
    cbr_rate: float = 200_000.0
    cbr_start: float = 1.0
    packet_size: int = 500
    ttl: int = 64
    detection_delay: float = 0.010
    ls_failure_behavior: str = BOUNCE
    disjointness: str = Disjointness.NODE.value
    notification_timer: float = 2.0
    lsp_generation: float = 0.050
    spf_timer: float = 5.5
    lsp_processing_per_hop: float = 0.010
    spf_compute_min: float = 0.100
    spf_compute_max: float = 0.400
    fib_update_rate: float = 20.0
    workers: int = 0  # 0 = available parallelism
    out: str = "results"
    plots: bool = True

    _PARSERS = {
        "topology": str, "nodes": int, "edge_prob": float, "trials": int, "base_seed": int,
        "modes": lambda v: tuple(parse_mode(m) for m in v.replace(",", " ").split()),
        "flow": lambda v: tuple(v.replace(",", " ").split()),
        "require_recoverable": _bool, "failures_file": str, "failures_per_trial": int,
        "failure_window": lambda v: _floats(v, 2), "repair_after": _optional_float,
        "duration": float, "cbr_rate": float, "cbr_start": float, "packet_size": int,
        "ttl": int, "detection_delay": float, "ls_failure_behavior": str,
        "disjointness": lambda v: Disjointness.parse(v).value,
        "notification_timer": float, "lsp_generation": float, "spf_timer": float,
        "lsp_processing_per_hop": float, "spf_compute_min": float, "spf_compute_max": float,
        "fib_update_rate": float, "workers": int, "out": str, "plots": _bool,
    }

    @classmethod
    def from_text(cls, text: str, base_dir: str | os.PathLike = ".") -> "ExperimentConfig":
        values = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value'")
            key, value = (p.strip() for p in line.split("=", 1))
            if key not in cls._PARSERS:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            try:
                values[key] = cls._PARSERS[key](value)
            except (ValueError, ConfigError) as exc:
                raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
        for key in ("topology", "failures_file", "out"):
            if key in values and not os.path.isabs(values[key]):
                values[key] = os.path.join(os.fspath(base_dir), values[key])
        cfg = cls(**values)
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        try:
            text = FsPath(path).read_text()
        except OSError as exc:
            raise ExperimentIOError(f"cannot read config {path}: {exc}") from exc
        return cls.from_text(text, FsPath(path).resolve().parent)

    def validate(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not self.modes:
            raise ConfigError("at least one mode is required")
        if len(set(self.modes)) != len(self.modes):
            raise ConfigError("duplicate mode")
        if self.topology is None and self.nodes < 2:
            raise ConfigError("nodes must be >= 2")
        if not 0 <= self.edge_prob <= 1:
            raise ConfigError("edge_prob must lie in [0, 1]")
        if self.flow is not None and len(self.flow) != 2:
            raise ConfigError("flow takes exactly two node labels")
        if self.ls_failure_behavior not in (BOUNCE, DROP):
            raise ConfigError(f"ls_failure_behavior must be {BOUNCE} or {DROP}")
        lo, hi = self.failure_window
        if not 0 < lo <= hi < self.duration:
            raise ConfigError("failure_window must satisfy 0 < start <= end < duration")
        try:
            self.timers()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        self.sim_config(LS, 0).validate()

    def timers(self) -> ConvergenceTimers:
        return ConvergenceTimers(
            notification_timer=self.notification_timer,
            lsp_generation=self.lsp_generation,
            spf_timer=self.spf_timer,
            lsp_processing_per_hop=self.lsp_processing_per_hop,
            spf_compute_range=(self.spf_compute_min, self.spf_compute_max),
            fib_update_rate=self.fib_update_rate,
        )

    def sim_config(self, mode: str, seed: int, flows=None) -> SimConfig:
        return SimConfig(
            duration=self.duration, cbr_rate=self.cbr_rate, cbr_start=self.cbr_start,
            packet_size=self.packet_size, flows=flows, mode=mode, ttl_init=self.ttl,
            seed=seed, timers=self.timers(), detection_delay=self.detection_delay,
            ls_failure_behavior=self.ls_failure_behavior,
        )

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            if isinstance(value, tuple):
                value = ",".join(str(x) for x in value)
            lines.append(f"{f.name} = {value}")
        return "\n".join(lines) + "\n"


@dataclass
class TrialResult:
    trial: int
    flow: tuple[int, int]
    failures: list[FailureEvent]
    labels: tuple[str, ...]
    records: dict[str, MetricsRecord]
    draws: dict[str, int] = field(default_factory=dict)


def _load_topology(cfg: ExperimentConfig) -> Topology | None:
    if cfg.topology is None:
        return None
    try:
        text = FsPath(cfg.topology).read_text()
    except OSError as exc:
        raise ExperimentIOError(f"cannot read topology {cfg.topology}: {exc}") from exc
    try:
        return parse_topology(text)
    except TopologyError as exc:
        raise ConfigError(f"{cfg.topology}: {exc}") from None


def _load_failures(cfg: ExperimentConfig, t: Topology) -> list[FailureEvent] | None:
    if cfg.failures_file is None:
        return None
    try:
        text = FsPath(cfg.failures_file).read_text()
    except OSError as exc:
        raise ExperimentIOError(f"cannot read failure schedule {cfg.failures_file}: {exc}") from exc
    try:
        return parse_failure_schedule(text, t)
    except TopologyError as exc:
        raise ConfigError(f"{cfg.failures_file}: {exc}") from None


def choose_flow(t: Topology, tr, seed: int, require_recoverable: bool) -> tuple[int, int]:
    """Random source/destination pair; with ``require_recoverable`` no link of
    its primary path may be a bridge, so a single failure never partitions it."""
    bridges = t.bridges() if require_recoverable else set()
    pairs = []
    for s in range(t.n):
        for d in range(t.n):
            if s == d or not tr.reachable(s, d):
                continue
            if bridges and primary_path(tr, s, d).edges & bridges:
                continue
            pairs.append((s, d))
    if not pairs:
        raise ConfigError("no eligible source/destination pair in topology")
    return pairs[random.Random(seed).randrange(len(pairs))]


def run_trial(cfg: ExperimentConfig, i: int, topology: Topology | None = None,
              failures: list[FailureEvent] | None = None) -> TrialResult:
    seed = cfg.base_seed + i
    draws = {p: subseed(seed, p) for p in ("topology", "flow", "failures", "spf")}
    t = topology
    if t is None:
        t = random_topology(cfg.nodes, cfg.edge_prob, draws["topology"])
    tr = build_routing_tables(t)
    if cfg.flow is not None:
        try:
            flow = (t.node_id(cfg.flow[0]), t.node_id(cfg.flow[1]))
        except KeyError as exc:
            raise ConfigError(str(exc)) from None
        if flow[0] == flow[1] or not tr.reachable(*flow):
            raise ConfigError("configured flow is not a reachable pair")
    else:
        flow = choose_flow(t, tr, draws["flow"], cfg.require_recoverable)
    if failures is None:
        primary = primary_path(tr, *flow)
        failures = generate_failures(t, primary, cfg.failures_per_trial, cfg.failure_window,
                                     draws["failures"], cfg.repair_after)
    records = {}
    for mode in cfg.modes:
        bt = None
        if mode != LS:
            bt, _ = build_backup_tables(tr, t, mode, cfg.disjointness)
        records[mode] = run(t, tr, bt, failures, cfg.sim_config(mode, draws["spf"], [flow]))
    return TrialResult(i, flow, failures, t.labels, records, draws)


def _trial_job(args):
    cfg, i, topology, failures = args
    return run_trial(cfg, i, topology, failures)


def run_trials(cfg: ExperimentConfig, workers: int | None = None) -> list[TrialResult]:
    cfg.validate()
    topology = _load_topology(cfg)
    failures = _load_failures(cfg, topology) if topology is not None else None
    if cfg.failures_file is not None and topology is None:
        raise ConfigError("failures_file needs a fixed topology")
    jobs = [(cfg, i, topology, failures) for i in range(cfg.trials)]
    workers = cfg.workers if workers is None else workers
    if workers <= 0:
        workers = os.cpu_count() or 1
    workers = min(workers, cfg.trials)
    if workers == 1:
        results = [_trial_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_trial_job, jobs))
    return sorted(results, key=lambda r: r.trial)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(round(value, 9))
    return str(value)


def record_row(res: TrialResult, mode: str, cfg: ExperimentConfig) -> dict:
    r = res.records[mode]
    labels = res.labels
    return {
        "trial": res.trial,
        "mode": mode,
        "primary_len": r.primary_len,
        "backup_len": r.backup_len,
        "new_primary_len": r.new_primary_len,
        "sent": r.sent,
        "delivered": r.delivered,
        "dropped_link_down": r.dropped_link_down,
        "dropped_ttl": r.dropped_ttl,
        "dropped_queue": r.dropped_queue,
        "mean_delay_s": r.mean_delay,
        "throughput_bps_mean": r.throughput_bps_mean(cfg.duration, cfg.cbr_start),
        "control_msgs_total": r.control_msgs_total,
        "max_node_load": max(r.node_load) if r.node_load else 0,
        "dropped_unreachable": r.dropped_unreachable,
        "in_flight": r.in_flight,
        "window_mean_delay_s": r.window_mean_delay,
        "flow_src": labels[res.flow[0]],
        "flow_dst": labels[res.flow[1]],
        "failed_edges": ";".join(f"{labels[e.edge[0]]}-{labels[e.edge[1]]}@{e.fail_time:.6f}"
                                 for e in res.failures),
    }


def trials_csv(results: list[TrialResult], cfg: ExperimentConfig) -> str:
    buf = io.StringIO()
    buf.write(f"# schema={SCHEMA}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for res in results:
        for mode in cfg.modes:
            row = record_row(res, mode, cfg)
            w.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


SUMMARY_METRICS = (
    "primary_len", "backup_len", "new_primary_len", "sent", "delivered", "dropped",
    "dropped_link_down", "dropped_ttl", "dropped_queue", "mean_delay_s",
    "window_mean_delay_s", "throughput_bps_mean", "control_msgs_total", "max_node_load",
)


@dataclass
class SummaryTable:
    modes: tuple[str, ...]
    trials: int
    stats: dict[str, dict[str, dict[str, float]]]
    loss_by_hops: dict[int, dict[str, float]]
    bucket_counts: dict[int, int]
    throughput: dict[str, list[float]]
    node_load: dict[str, list[float]]


def _describe(values) -> dict[str, float]:
    vals = [v for v in values if v is not None and not (isinstance(v, float) and math.isnan(v))]
    if not vals:
        return {"count": 0, "mean": math.nan, "std": math.nan, "min": math.nan, "max": math.nan}
    return {
        "count": len(vals),
        "mean": statistics.fmean(vals),
        "std": statistics.pstdev(vals) if len(vals) > 1 else 0.0,
        "min": min(vals),
        "max": max(vals),
    }


def summarize(results: list[TrialResult], cfg: ExperimentConfig) -> SummaryTable:
    stats: dict[str, dict[str, dict[str, float]]] = {}
    throughput: dict[str, list[float]] = {}
    node_load: dict[str, list[float]] = {}
    for mode in cfg.modes:
        rows = [record_row(r, mode, cfg) for r in results]
        for row, res in zip(rows, results):
            row["dropped"] = res.records[mode].dropped
        stats[mode] = {m: _describe(row[m] for row in rows) for m in SUMMARY_METRICS}
        series = [res.records[mode].throughput_timeseries for res in results]
        throughput[mode] = [statistics.fmean(col) for col in zip(*series)]
        width = max(len(res.records[mode].node_load) for res in results)
        loads = [0.0] * width
        for res in results:
            for v, x in enumerate(res.records[mode].node_load):
                loads[v] += x / len(results)
        node_load[mode] = loads
    bucket_counts: dict[int, int] = {}
    loss: dict[int, dict[str, list[int]]] = {}
    for res in results:
        hops = int(next(iter(res.records.values())).primary_len)
        bucket_counts[hops] = bucket_counts.get(hops, 0) + 1
        for mode in cfg.modes:
            loss.setdefault(hops, {}).setdefault(mode, []).append(res.records[mode].dropped)
    loss_by_hops = {h: {m: statistics.fmean(v) for m, v in sorted(d.items())}
                    for h, d in sorted(loss.items())}
    return SummaryTable(tuple(cfg.modes), len(results), stats, loss_by_hops,
                        dict(sorted(bucket_counts.items())), throughput, node_load)


def summary_csv(s: SummaryTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["mode", "metric", "count", "mean", "std", "min", "max"])
    for mode in s.modes:
        for metric, d in s.stats[mode].items():
            w.writerow([mode, metric, d["count"]] + [_fmt(float(d[k])) for k in ("mean", "std", "min", "max")])
    return buf.getvalue()


def _write(path: FsPath, text: str):
    try:
        path.write_text(text)
    except OSError as exc:
        raise ExperimentIOError(f"cannot write {path}: {exc}") from exc


def run_experiment(cfg: ExperimentConfig, workers: int | None = None,
                   plots: bool | None = None) -> tuple[SummaryTable, list[TrialResult]]:
    """Run every trial, then write ``trials.csv``, ``summary.csv`` and the
    plot files into ``cfg.out``."""
    cfg.validate()
    outdir = FsPath(cfg.out)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ExperimentIOError(f"cannot create output directory {outdir}: {exc}") from exc
    if not os.access(outdir, os.W_OK):
        raise ExperimentIOError(f"output directory {outdir} is not writable")
    results = run_trials(cfg, workers)
    summary = summarize(results, cfg)
    _write(outdir / "trials.csv", trials_csv(results, cfg))
    _write(outdir / "summary.csv", summary_csv(summary))
    if cfg.plots if plots is None else plots:
        from .plots import emit_plots

        try:
            emit_plots(summary, outdir, results=results)
        except OSError as exc:
            raise ExperimentIOError(f"cannot write plots to {outdir}: {exc}") from exc
    return summary, results
