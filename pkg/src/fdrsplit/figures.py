"""Figure rendering for the report path.

Everything here draws from a finished RunResult, never from raw data, so
the PNGs are as reproducible as the CSVs they sit next to. Agg only; no
display backend is ever touched.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import networkx as nx
import numpy as np

from .mixture import eval_pdf

_DIRECTION_COLOR = {"up": "tab:red", "down": "tab:blue", "unsigned": "0.6"}
_DPI = 150


def _save(fig, out_dir_path):
    fig.savefig(out_dir_path, dpi=_DPI)
    plt.close(fig)


def render_fit(path, adjusted, region):
    """Fitted mixture density with the f1 = 1 crossings and rejection region."""
    grid = np.linspace(1e-4, 1.0 - 1e-4, 800)
    density = eval_pdf(adjusted, grid, "mixture")
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(grid, density, color="black", lw=1.5, label="fitted mixture")
    ax.axhline(1.0, color="0.5", lw=0.8, ls="--", label="uniform level")
    for c in adjusted.crossings:
        ax.axvline(c, color="0.7", lw=0.8)
    for lo, hi in region.intervals:
        ax.axvspan(lo, hi, color="tab:orange", alpha=0.25)
    top = min(float(np.nanmax(density)), 10.0)
    ax.set_ylim(0.0, max(1.5, 1.1 * top))
    ax.set_xlim(0.0, 1.0)
    ax.set_xlabel("x")
    ax.set_ylabel("density")
    ax.set_title(f"p0_hat={adjusted.p0_hat:.3f}, p1_hat={adjusted.p1_hat:.3f}")
    ax.legend(loc="upper center", fontsize=8)
    _save(fig, path)


def render_freq(path, freq_table, top=40):
    """Horizontal bars of the most frequently detected features."""
    rows = [r for r in freq_table.rows if r.freq > 0][:top]
    fig, ax = plt.subplots(figsize=(6.0, max(2.0, 0.18 * len(rows) + 1.0)))
    if rows:
        ids = [r.feature_id for r in rows]
        vals = [r.rfreq for r in rows]
        pos = np.arange(len(rows))[::-1]
        ax.barh(pos, vals, color="tab:blue")
        ax.set_yticks(pos)
        ax.set_yticklabels(ids, fontsize=7)
        ax.set_xlim(0.0, 1.0)
    else:
        ax.text(0.5, 0.5, "no detections", ha="center", va="center")
        ax.set_axis_off()
    ax.set_xlabel("detection frequency")
    ax.set_title(f"top detections over {freq_table.n_splits} splits")
    fig.tight_layout()
    _save(fig, path)


def render_assoc(path, graph):
    """Co-detection graph, spring layout with a pinned seed."""
    fig, ax = plt.subplots(figsize=(6.0, 6.0))
    if graph.nodes:
        g = nx.Graph()
        for node in graph.nodes:
            g.add_node(node.feature_id)
        for edge in graph.edges:
            g.add_edge(edge.a, edge.b, weight=edge.weight)
        pos = nx.spring_layout(g, seed=0)
        colors = [_DIRECTION_COLOR[n.direction] for n in graph.nodes]
        sizes = [120 + 30 * n.freq for n in graph.nodes]
        order = [n.feature_id for n in graph.nodes]
        w_max = max((e.weight for e in graph.edges), default=1)
        widths = [3.0 * e.weight / w_max for e in graph.edges]
        nx.draw_networkx_nodes(g, pos, nodelist=order, node_color=colors,
                               node_size=sizes, ax=ax)
        nx.draw_networkx_edges(g, pos, edgelist=[(e.a, e.b) for e in graph.edges],
                               width=widths, edge_color="0.4", ax=ax)
        nx.draw_networkx_labels(g, pos, font_size=7, ax=ax)
    else:
        ax.text(0.5, 0.5, "empty graph", ha="center", va="center")
    ax.set_axis_off()
    ax.set_title("co-detection graph")
    _save(fig, path)


def render_analyze(out_dir, rr, graph):
    import os

    if rr.whole_fit is not None:
        render_fit(os.path.join(out_dir, "fit.png"), rr.whole_fit, rr.combined_region)
    render_freq(os.path.join(out_dir, "freq.png"), rr.freq_table)
    render_assoc(os.path.join(out_dir, "assoc.png"), graph)


def render_power(out_dir, points):
    """Power and observed-FDR curves against q, one line per source."""
    import os

    fig, axes = plt.subplots(1, 2, figsize=(9.0, 3.6), sharex=True)
    styles = {"combined": dict(color="tab:blue", marker="o", ms=3),
              "whole": dict(color="tab:gray", marker="s", ms=3)}
    for source, style in styles.items():
        rows = sorted((p for p in points if p.source == source), key=lambda p: p.q)
        if not rows:
            continue
        qs = [p.q for p in rows]
        axes[0].plot(qs, [p.power for p in rows], label=source, **style)
        axes[1].plot(qs, [p.fdr_o if p.fdr_o is not None else np.nan for p in rows],
                     label=source, **style)
    axes[0].set_ylabel("power")
    axes[1].set_ylabel("observed FDR")
    for ax in axes:
        ax.set_xlabel("q")
        ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, os.path.join(out_dir, "power.png"))
