"""Co-detection graphs over resampled screening runs.

Features that respond to the same treatment tend to be detected by the
same splits, so edge weights count splits that detected both endpoints.
The conditional detection probability at the bottom quantifies why
correlated signals co-occur more often than chance.
"""

import json
import math
from dataclasses import dataclass

from .screening import ScreenMode
from .special import normal_cdf, normal_tail

DIRECTIONS = ("up", "down", "unsigned")
_FILL = {"up": "red", "down": "blue", "unsigned": "gray"}
_MAX_PENWIDTH = 4.0


@dataclass(frozen=True)
class GraphNode:
    feature_id: str
    freq: int
    median_x: object
    direction: str


@dataclass(frozen=True)
class GraphEdge:
    a: str
    b: str
    weight: int


@dataclass(frozen=True)
class AssocGraph:
    nodes: tuple
    edges: tuple


def _direction(median_x, mode):
    # one-sided p-values carry no orientation; small x means the
    # treatment group sits above control, large x below
    if mode is ScreenMode.PVALUE_LEFT or median_x is None or median_x == 0.5:
        return "unsigned"
    return "up" if median_x < 0.5 else "down"


def build_graph(run_result, min_freq=2, min_edge=1, min_degree=0):
    """Thresholded co-detection graph of a run.

    Nodes need freq >= min_freq, edges weight >= min_edge with both
    endpoints present. Degrees are then checked once against the surviving
    edge set: under-connected nodes go, edges into them go with them, and
    no second pass runs (a node kept here may end up under-connected).
    """
    if min_freq < 0 or min_edge < 0 or min_degree < 0:
        raise ValueError("thresholds must be nonnegative")
    mode = run_result.config.mode
    all_rows = {r.feature_id: r for r in run_result.freq_table.rows}
    for (a, b), w in run_result.concurrent.items():
        cap = min(all_rows[a].freq, all_rows[b].freq) if a in all_rows and b in all_rows else 0
        if w < 1 or w > cap:
            raise ValueError(f"concurrent count {w} for ({a}, {b}) exceeds its frequencies")

    rows = {fid: r for fid, r in all_rows.items() if r.freq >= min_freq}
    edges = [
        (a, b, w) for (a, b), w in run_result.concurrent.items()
        if w >= min_edge and a in rows and b in rows
    ]

    degree = {}
    for a, b, _ in edges:
        degree[a] = degree.get(a, 0) + 1
        degree[b] = degree.get(b, 0) + 1
    kept = {fid for fid in rows if degree.get(fid, 0) >= min_degree}
    edges = [(a, b, w) for a, b, w in edges if a in kept and b in kept]

    nodes = tuple(
        GraphNode(fid, rows[fid].freq, rows[fid].median_x, _direction(rows[fid].median_x, mode))
        for fid in sorted(kept, key=lambda f: (-rows[f].freq, f))
    )
    edges = tuple(
        GraphEdge(a, b, w) for a, b, w in sorted(edges, key=lambda e: (-e[2], e[0], e[1]))
    )
    return AssocGraph(nodes=nodes, edges=edges)


def _render_dot(graph):
    w_max = max((e.weight for e in graph.edges), default=1)
    lines = ["graph codetection {", "  node [style=filled];"]
    for n in graph.nodes:
        label = f"{n.feature_id}\\n{n.freq}"
        lines.append(f'  "{n.feature_id}" [fillcolor={_FILL[n.direction]}, label="{label}"];')
    for e in graph.edges:
        pw = _MAX_PENWIDTH * e.weight / w_max
        lines.append(f'  "{e.a}" -- "{e.b}" [penwidth={pw:.2f}, label="{e.weight}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def _render_json(graph):
    obj = {
        "nodes": [
            {
                "id": n.feature_id,
                "freq": n.freq,
                "median_x": n.median_x,
                "direction": n.direction,
            }
            for n in graph.nodes
        ],
        "edges": [{"a": e.a, "b": e.b, "w": e.weight} for e in graph.edges],
    }
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def export_graph(graph, format="dot"):
    """Serialize a graph for Graphviz (``dot``) or re-import (``json``).

    DOT line width scales with edge weight and fill color encodes the
    direction (red up, blue down, gray unsigned). JSON is key-sorted and
    ordering-stable, so equal graphs give byte-equal exports.
    """
    if format == "dot":
        return _render_dot(graph).encode("utf-8")
    if format == "json":
        return _render_json(graph).encode("utf-8")
    raise ValueError(f"unknown export format {format!r}")


def load_graph_json(data):
    """Inverse of the json export; raises ValueError on malformed input."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        obj = json.loads(data)
        nodes = tuple(
            GraphNode(n["id"], int(n["freq"]), n["median_x"], n["direction"])
            for n in obj["nodes"]
        )
        edges = tuple(GraphEdge(e["a"], e["b"], int(e["w"])) for e in obj["edges"])
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ValueError(f"not a graph export: {exc}") from exc
    for n in nodes:
        if n.direction not in DIRECTIONS:
            raise ValueError(f"unknown direction {n.direction!r}")
    return AssocGraph(nodes=nodes, edges=edges)


def conditional_detection_prob(rho, c, d1):
    """Chance that a feature is detected given a correlated one scored d1.

    Both statistics are standard normal with correlation rho; detection
    means clearing c in the direction the correlation points to, and the
    first statistic is pinned at d1. At rho = 0 this is just the marginal
    normal_tail(c); any shared signal pushes it up.
    """
    if not -1.0 < rho < 1.0:
        raise ValueError("rho must lie strictly inside (-1, 1)")
    scale = math.sqrt(1.0 - rho * rho)
    if rho >= 0.0:
        return normal_tail((c - rho * d1) / scale)
    return normal_cdf((-c - rho * d1) / scale)
