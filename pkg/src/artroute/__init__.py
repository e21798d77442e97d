"""Backup routing tables for link-state networks and a packet simulator to
measure how they behave under link failures."""

from .art import (
    ARTCP,
    ARTFP,
    BackupEntry,
    BackupTable,
    Disjointness,
    MessageLedger,
    artcp,
    artfp,
    brute_force_disjoint,
    build_backup_tables,
    upstream_avoid_set,
)
from .convergence import ConvergenceTimeline, ConvergenceTimers, FailureEvent, convergence_timeline, generate_failures
from .experiment import ExperimentConfig, SummaryTable, run_experiment
from .simulator import LS, MetricsRecord, SimConfig, link_transmit, run
from .spf import Path, RoutingTable, build_routing_tables, primary_path
from .topology import Edge, Topology, TopologyError, parse_topology, random_topology, serialize_topology

__version__ = "0.1.0"
