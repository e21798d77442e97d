"""Command-line entry point: ``artroute {tables,simulate,experiment,oracle-check}``."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path as FsPath

from .art import ARTCP, ARTFP, build_backup_tables, format_backup_table
from .convergence import FailureEvent, parse_failure_schedule
from .experiment import ExperimentConfig, ExperimentIOError, run_experiment, run_trial
from .oracle import cross_validate
from .simulator import LS, ConfigError, parse_mode
from .spf import build_routing_tables, format_next_hop_matrix
from .topology import TopologyError, parse_topology

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_ORACLE = 0, 1, 2, 3


def _read(path) -> str:
    try:
        return FsPath(path).read_text()
    except OSError as exc:
        raise ExperimentIOError(f"cannot read {path}: {exc}") from exc


def _config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    over = {}
    if getattr(args, "seed", None) is not None:
        over["base_seed"] = args.seed
    if getattr(args, "mode", None):
        over["modes"] = tuple(parse_mode(m) for m in args.mode)
    if getattr(args, "out", None):
        over["out"] = args.out
    if getattr(args, "topology", None):
        over["topology"] = args.topology
    if getattr(args, "trials", None) is not None:
        over["trials"] = args.trials
    if getattr(args, "workers", None) is not None:
        over["workers"] = args.workers
    if getattr(args, "flow", None):
        over["flow"] = tuple(args.flow)
    if getattr(args, "failures", None):
        over["failures_file"] = args.failures
    cfg = replace(cfg, **over)
    cfg.validate()
    return cfg


def cmd_tables(args) -> int:
    if not args.topology:
        raise ConfigError("tables needs --topology")
    try:
        t = parse_topology(_read(args.topology))
    except TopologyError as exc:
        raise ConfigError(f"{args.topology}: {exc}") from None
    tr = build_routing_tables(t)
    print("# next hops")
    print(format_next_hop_matrix(tr), end="")
    modes = [parse_mode(m) for m in args.mode] if args.mode else [ARTFP, ARTCP]
    for mode in modes:
        if mode == LS:
            continue
        bt, ledger = build_backup_tables(tr, t, mode, args.disjointness)
        print(f"\n# {mode} backup table ({ledger.messages()} discovery messages)")
        print(format_backup_table(bt, t), end="")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = replace(_config(args), trials=1)
    topology = None
    failures = None
    if cfg.topology:
        try:
            topology = parse_topology(_read(cfg.topology))
            if cfg.failures_file:
                failures = parse_failure_schedule(_read(cfg.failures_file), topology)
        except TopologyError as exc:
            raise ConfigError(str(exc)) from None
    if args.fail:
        if topology is None:
            raise ConfigError("--fail needs a fixed --topology")
        u, v, when = args.fail
        try:
            failures = [FailureEvent((topology.node_id(u), topology.node_id(v)), float(when))]
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"--fail: {exc}") from None
        if not topology.has_edge(*failures[0].edge):
            raise ConfigError(f"--fail: no link {u}-{v}")
    res = run_trial(cfg, 0, topology, failures)
    labels = res.labels
    print(f"flow {labels[res.flow[0]]} -> {labels[res.flow[1]]}")
    for ev in res.failures:
        print(f"failure {labels[ev.edge[0]]}-{labels[ev.edge[1]]} at {ev.fail_time:.6f} s")
    for mode, r in res.records.items():
        delay = f"{r.mean_delay:.6f}" if r.mean_delay is not None else "-"
        wdelay = f"{r.window_mean_delay:.6f}" if r.window_mean_delay is not None else "-"
        print(f"{mode:6s} sent={r.sent} delivered={r.delivered} link_down={r.dropped_link_down} "
              f"ttl={r.dropped_ttl} queue={r.dropped_queue} unreachable={r.dropped_unreachable} "
              f"in_flight={r.in_flight} delay={delay} window_delay={wdelay} "
              f"control={r.control_msgs_total} max_node_load={max(r.node_load)}")
    return EXIT_OK


def cmd_experiment(args) -> int:
    cfg = _config(args)
    if args.no_plots:
        cfg = replace(cfg, plots=False)
    summary, _ = run_experiment(cfg)
    for mode in summary.modes:
        st = summary.stats[mode]
        print(f"{mode:6s} dropped={st['dropped']['mean']:.2f} delivered={st['delivered']['mean']:.1f} "
              f"window_delay={st['window_mean_delay_s']['mean']:.4f}s")
    print(f"wrote {cfg.out}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    report = cross_validate(args.graphs, args.seed or 0)
    print(f"graphs={report.graphs} artfp_pairs={report.artfp_pairs} "
          f"artcp_cases={report.artcp_cases} mismatches={len(report.mismatches)}")
    for line in report.mismatches[:20]:
        print(line)
    return EXIT_OK if report.ok else EXIT_ORACLE


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="artroute", description="Backup routing tables and failure simulation.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, modes=True):
        sp.add_argument("--config", help="experiment config file (key = value)")
        sp.add_argument("--seed", type=int, help="base seed")
        sp.add_argument("--topology", help="topology file")
        sp.add_argument("--out", help="output directory")
        if modes:
            sp.add_argument("--mode", action="append", help="ls, artfp or artcp; repeatable")

    sp = sub.add_parser("tables", help="print routing and backup tables")
    common(sp)
    sp.add_argument("--disjointness", default="interior-node", choices=["interior-node", "edge"])
    sp.set_defaults(func=cmd_tables)

    sp = sub.add_parser("simulate", help="run a single trial and report per-mode metrics")
    common(sp)
    sp.add_argument("--flow", nargs=2, metavar=("SRC", "DST"))
    sp.add_argument("--fail", nargs=3, metavar=("U", "V", "TIME"), help="single link failure")
    sp.add_argument("--failures", help="failure schedule file")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("experiment", help="run the batch and write CSV and plots")
    common(sp)
    sp.add_argument("--trials", type=int)
    sp.add_argument("--workers", type=int)
    sp.add_argument("--no-plots", action="store_true")
    sp.set_defaults(func=cmd_experiment)

    sp = sub.add_parser("oracle-check", help="cross-check backup searches against exhaustive search")
    sp.add_argument("--graphs", type=int, default=500)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_oracle)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ExperimentIOError as exc:
        print(f"artroute: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, TopologyError, ValueError) as exc:
        print(f"artroute: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
