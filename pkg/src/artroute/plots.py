"""Plot data files and SVG renderings of an experiment summary."""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path as FsPath

from .art import ARTFP

PLOT_NAMES = ("loss_vs_hops", "path_length", "throughput", "delay", "node_load")


def _num(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return repr(round(float(x), 9))


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([r if isinstance(r, str) else _num(r) for r in row])
    return buf.getvalue()


class PlotDataError(ValueError):
    pass


def plot_data(summary, results=None) -> dict[str, str]:
    """CSV text of every plot, keyed by plot name."""
    modes = summary.modes
    out = {}
    out["loss_vs_hops"] = _csv(
        ["hops", "trials"] + list(modes),
        [[str(h), str(summary.bucket_counts[h])] + [summary.loss_by_hops[h][m] for m in modes]
         for h in summary.loss_by_hops],
    )

    rows = []
    for m in modes:
        st = summary.stats[m]
        rows.append([m, st["primary_len"]["mean"], st["backup_len"]["mean"], st["new_primary_len"]["mean"]])
    if ARTFP in modes:
        st = summary.stats[ARTFP]
        b, p = st["backup_len"]["mean"], st["primary_len"]["mean"]
        if not math.isnan(b) and b < p:
            raise PlotDataError(f"ARTFP backup length {b} shorter than primary {p}")
    out["path_length"] = _csv(["mode", "primary", "backup", "new_primary"], rows)

    width = max(len(v) for v in summary.throughput.values())
    out["throughput"] = _csv(
        ["second"] + list(modes),
        [[str(i)] + [summary.throughput[m][i] if i < len(summary.throughput[m]) else None for m in modes]
         for i in range(width)],
    )
    out["delay"] = _csv(
        ["mode", "mean_delay_s", "window_mean_delay_s"],
        [[m, summary.stats[m]["mean_delay_s"]["mean"], summary.stats[m]["window_mean_delay_s"]["mean"]]
         for m in modes],
    )
    width = max(len(v) for v in summary.node_load.values())
    out["node_load"] = _csv(
        ["node"] + list(modes),
        [[str(v)] + [summary.node_load[m][v] if v < len(summary.node_load[m]) else None for m in modes]
         for v in range(width)],
    )
    return out


def _render(name: str, summary, path: FsPath):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "artroute"
    modes = summary.modes
    fig, ax = plt.subplots(figsize=(6, 4))
    if name == "loss_vs_hops":
        hops = list(summary.loss_by_hops)
        for m in modes:
            ax.plot(hops, [summary.loss_by_hops[h][m] for h in hops], marker="o", label=m)
        ax.set_xlabel("primary path hops")
        ax.set_ylabel("packets lost (mean)")
    elif name == "path_length":
        cases = ("primary_len", "backup_len", "new_primary_len")
        w = 0.8 / len(cases)
        for j, case in enumerate(cases):
            vals = [summary.stats[m][case]["mean"] for m in modes]
            vals = [0.0 if math.isnan(v) else v for v in vals]
            ax.bar([i + j * w for i in range(len(modes))], vals, width=w, label=case.replace("_len", ""))
        ax.set_xticks([i + w for i in range(len(modes))], modes)
        ax.set_ylabel("hops (mean)")
    elif name == "throughput":
        for m in modes:
            ax.plot(range(len(summary.throughput[m])), summary.throughput[m], label=m)
        ax.set_xlabel("time (s)")
        ax.set_ylabel("delivered bits per second")
    elif name == "delay":
        vals = [summary.stats[m]["window_mean_delay_s"]["mean"] for m in modes]
        ax.bar(list(modes), [0.0 if math.isnan(v) else v for v in vals])
        ax.set_ylabel("failure-window delay (s)")
    elif name == "node_load":
        width = max(len(v) for v in summary.node_load.values())
        w = 0.8 / len(modes)
        for j, m in enumerate(modes):
            ax.bar([v + j * w for v in range(width)], summary.node_load[m], width=w, label=m)
        ax.set_xlabel("node")
        ax.set_ylabel("messages handled (mean)")
    ax.set_title(name.replace("_", " "))
    if name != "delay":
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def emit_plots(summary, outdir, results=None, render: bool = True) -> list[FsPath]:
    """Write ``<name>.csv`` for each of the five plots, plus ``<name>.svg``
    when ``render`` is set.  Returns the written paths."""
    if summary.trials < 1:
        raise PlotDataError("empty summary")
    outdir = FsPath(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in plot_data(summary, results).items():
        p = outdir / f"{name}.csv"
        p.write_text(text)
        written.append(p)
        if render:
            svg = outdir / f"{name}.svg"
            _render(name, summary, svg)
            written.append(svg)
    return written
