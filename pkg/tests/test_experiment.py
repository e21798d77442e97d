import csv
import io
import math
from dataclasses import replace
from pathlib import Path as FsPath

import pytest

from artroute import experiment
from artroute.experiment import (
    CSV_COLUMNS,
    ExperimentConfig,
    ExperimentIOError,
    choose_flow,
    run_experiment,
    run_trials,
    subseed,
    summarize,
    trials_csv,
)
from artroute.plots import PLOT_NAMES, PlotDataError, emit_plots, plot_data
from artroute.simulator import ConfigError
from artroute.spf import build_routing_tables, primary_path
from artroute.topology import FIG1_TEXT, random_topology

GOLDEN = FsPath(__file__).parent / "golden"
REQUIRED_COLUMNS = (
    "trial", "mode", "primary_len", "backup_len", "new_primary_len", "sent", "delivered",
    "dropped_link_down", "dropped_ttl", "dropped_queue", "mean_delay_s", "throughput_bps_mean",
    "control_msgs_total", "max_node_load",
)


@pytest.fixture
def fig1_cfg(tmp_path):
    (tmp_path / "fig1.topo").write_text(FIG1_TEXT)
    (tmp_path / "fail.sched").write_text("C D 25.0\n")
    text = "topology = fig1.topo\nfailures_file = fail.sched\nflow = A D\ntrials = 1\nout = out\n"
    return ExperimentConfig.from_text(text, tmp_path)


def small(tmp_path, **kw):
    base = dict(nodes=10, trials=4, duration=12.0, failure_window=(4.0, 6.0), out=str(tmp_path / "o"),
                plots=False)
    base.update(kw)
    return ExperimentConfig(**base)


def _rows(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


def test_defaults_documented():
    cfg = ExperimentConfig()
    assert cfg.trials == 50 and cfg.modes == ("LS", "ARTFP", "ARTCP") and cfg.nodes == 20
    again = ExperimentConfig.from_text(cfg.to_text())
    assert again.trials == cfg.trials and again.modes == cfg.modes and again.failure_window == cfg.failure_window


def test_config_parsing(tmp_path):
    cfg = ExperimentConfig.from_text(
        "# c\ntrials = 3\nmodes = ls, artcp\nflow = A D\nfailure_window = 2, 3\n"
        "spf_timer = 0.5\nrepair_after = none\nplots = no\ntopology = t.topo\n", tmp_path)
    assert cfg.trials == 3 and cfg.modes == ("LS", "ARTCP") and cfg.flow == ("A", "D")
    assert cfg.failure_window == (2.0, 3.0) and cfg.timers().spf_timer == 0.5
    assert cfg.repair_after is None and cfg.plots is False
    assert cfg.topology == str(tmp_path / "t.topo")


@pytest.mark.parametrize("text", [
    "trails = 3\n",
    "trials 3\n",
    "trials = x\n",
    "trials = 0\n",
    "modes = ospf\n",
    "modes =\n",
    "modes = ls, ls\n",
    "failure_window = 10, 60\n",
    "spf_timer = 0\n",
    "edge_prob = 2\n",
    "plots = maybe\n",
    "ls_failure_behavior = explode\n",
    "disjointness = both\n",
])
def test_config_errors(text):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_text(text)


def test_missing_config_file(tmp_path):
    with pytest.raises(ExperimentIOError):
        ExperimentConfig.from_file(tmp_path / "nope.cfg")


def test_subseed_is_stable_and_purpose_specific():
    assert subseed(5, "flow") == subseed(5, "flow")
    assert len({subseed(5, p) for p in ("topology", "flow", "failures", "spf")}) == 4
    assert subseed(5, "flow") != subseed(6, "flow")


def test_fig1_single_trial_golden(fig1_cfg):
    run_experiment(fig1_cfg, plots=False)
    text = (FsPath(fig1_cfg.out) / "trials.csv").read_text()
    assert text == (GOLDEN / "fig1_trials.csv").read_text()
    rows = {r["mode"]: r for r in _rows(text)}
    assert len(rows) == 3
    drops = {m: int(r["dropped_link_down"]) + int(r["dropped_ttl"]) + int(r["dropped_queue"])
             for m, r in rows.items()}
    assert drops["ARTCP"] <= drops["ARTFP"] <= drops["LS"]


def test_csv_schema(tmp_path):
    cfg = small(tmp_path, trials=2)
    run_experiment(cfg)
    text = (FsPath(cfg.out) / "trials.csv").read_text()
    first, header = text.splitlines()[:2]
    assert first.startswith("# schema=")
    assert tuple(header.split(",")) == CSV_COLUMNS
    assert CSV_COLUMNS[: len(REQUIRED_COLUMNS)] == REQUIRED_COLUMNS
    assert len(_rows(text)) == 6


def test_ls_only_skips_backup_tables(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise AssertionError("backup tables built in LS-only run")

    monkeypatch.setattr(experiment, "build_backup_tables", boom)
    results = run_trials(small(tmp_path, modes=("LS",), trials=2), workers=1)
    assert all(set(r.records) == {"LS"} for r in results)


def test_rerun_byte_identical(tmp_path):
    a = small(tmp_path, out=str(tmp_path / "a"), plots=True)
    b = replace(a, out=str(tmp_path / "b"))
    run_experiment(a, workers=1)
    run_experiment(b, workers=2)
    names = sorted(p.name for p in FsPath(a.out).iterdir())
    assert names == sorted(p.name for p in FsPath(b.out).iterdir())
    assert len([n for n in names if n.endswith(".svg")]) == 5
    for name in names:
        assert (FsPath(a.out) / name).read_bytes() == (FsPath(b.out) / name).read_bytes(), name


def test_cross_mode_fairness(tmp_path):
    for res in run_trials(small(tmp_path), workers=1):
        lens = {r.primary_len for r in res.records.values()}
        assert len(lens) == 1
        assert res.draws == {p: subseed(1 + res.trial, p) for p in ("topology", "flow", "failures", "spf")}
        sent = {r.sent for r in res.records.values()}
        assert len(sent) == 1


def test_summary_invariants(tmp_path):
    cfg = small(tmp_path, trials=6)
    results = run_trials(cfg, workers=1)
    s = summarize(results, cfg)
    assert sum(s.bucket_counts.values()) == 6
    for mode in s.modes:
        for metric, d in s.stats[mode].items():
            if d["count"]:
                assert d["min"] - 1e-9 <= d["mean"] <= d["max"] + 1e-9, (mode, metric)
    assert set(s.throughput) == set(cfg.modes)


def test_plot_data_no_failure_all_zero(fig1_cfg, tmp_path):
    (tmp_path / "none.sched").write_text("# nothing fails\n")
    cfg = replace(fig1_cfg, failures_file=str(tmp_path / "none.sched"), out=str(tmp_path / "nf"))
    summary, _ = run_experiment(cfg, plots=False)
    data = plot_data(summary)
    rows = _rows(data["loss_vs_hops"])
    assert rows and all(float(r[m]) == 0.0 for r in rows for m in cfg.modes)


def test_plot_files(fig1_cfg):
    summary, results = run_experiment(replace(fig1_cfg, plots=False))
    written = emit_plots(summary, fig1_cfg.out, results)
    names = {p.name for p in written}
    assert names == {f"{n}.{ext}" for n in PLOT_NAMES for ext in ("csv", "svg")}
    header = (FsPath(fig1_cfg.out) / "throughput.csv").read_text().splitlines()[0].split(",")
    assert header[1:] == ["LS", "ARTFP", "ARTCP"]
    svg = (FsPath(fig1_cfg.out) / "throughput.svg").read_text()
    assert svg.count("<g id=\"line2d_") >= 3
    paths = {r["mode"]: r for r in _rows((FsPath(fig1_cfg.out) / "path_length.csv").read_text())}
    assert float(paths["ARTFP"]["backup"]) >= float(paths["ARTFP"]["primary"])


def test_plot_data_rejects_short_artfp_backup(fig1_cfg):
    summary, _ = run_experiment(replace(fig1_cfg, plots=False))
    summary.stats["ARTFP"]["backup_len"]["mean"] = 1.0
    with pytest.raises(PlotDataError):
        plot_data(summary)


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(ExperimentIOError):
        run_experiment(small(tmp_path, out=str(blocker / "sub")))


def test_missing_topology_file(tmp_path):
    with pytest.raises(ExperimentIOError):
        run_trials(small(tmp_path, topology=str(tmp_path / "missing.topo")), workers=1)


def test_choose_flow_avoids_bridges():
    for seed in range(20):
        t = random_topology(12, 0.1, seed)
        tr = build_routing_tables(t)
        try:
            s, d = choose_flow(t, tr, seed, True)
        except ConfigError:
            continue
        assert not primary_path(tr, s, d).edges & t.bridges()


def test_window_delay_column(fig1_cfg):
    _, results = run_experiment(replace(fig1_cfg, plots=False))
    rows = {r["mode"]: r for r in _rows(trials_csv(results, fig1_cfg))}
    assert not math.isnan(float(rows["LS"]["window_mean_delay_s"]))
