"""Command-line front end for the split-resampled screening pipeline.

Four subcommands: ``simulate`` writes a synthetic corpus, ``analyze`` runs
the full pipeline on a data/groups CSV pair, ``power`` turns a saved run
into operating curves, and ``bh`` is the whole-data baseline. Every
command is a pure function of its inputs, flags, and seed: re-running
writes byte-identical files, whatever --threads says.
"""

import argparse
import os
import sys

from .association import build_graph, export_graph
from .bh import bh_table, two_sided_p_from_lta
from .fileio import (
    InputError,
    load_dataset,
    read_run_json,
    write_bh_csv,
    write_data_csv,
    write_discoveries_csv,
    write_freq_csv,
    write_groups_csv,
    write_power_csv,
    write_run_json,
    write_truth_csv,
)
from .power import FrequencyThreshold, critical_frequency, power_curves, select_discoveries
from .resampler import RunConfig, run_pipeline
from .screening import ScreenMode, ScreenTool
from .simgen import SimSpec, generate
from .stats import nb_lr_batch, t_lta_batch

_DESIGNS = {"table3": "table3_continuous", "null": "null_normal", "nb": "nb_counts"}
_STATS = {"t": "t_lta", "nb": "nb_lr"}


def _build_parser():
    top = argparse.ArgumentParser(
        prog="fdrsplit",
        description="Split-resampled FDR screening for two-group studies.",
    )
    sub = top.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="write a synthetic data/groups/truth corpus")
    sim.add_argument("--design", choices=sorted(_DESIGNS), required=True)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--features", type=int, default=1000)
    sim.add_argument("--nc", type=int, default=50, help="control subjects")
    sim.add_argument("--nt", type=int, default=50, help="treatment subjects")
    sim.add_argument("--signal", type=int, default=None,
                     help="signal features (nb design only; table3 is fixed at 30)")
    sim.add_argument("--variance-mode", choices=["table", "text"], default="table",
                     help="independent-signal variance convention for table3")
    sim.add_argument("--out-dir", default=".")

    ana = sub.add_parser("analyze", help="run the resampled screening pipeline")
    ana.add_argument("--data", required=True)
    ana.add_argument("--groups", required=True)
    ana.add_argument("--splits", type=int, default=100, help="number of splits N")
    ana.add_argument("--q", type=float, default=0.1)
    ana.add_argument("--qstar", type=float, default=0.05)
    ana.add_argument("--tool", choices=["tailfdr", "localfdr"], default="tailfdr")
    ana.add_argument("--mode", choices=["pvalue", "lta-left", "lta-right", "lta-two"],
                     default=None, help="default: lta-two for --stat t, pvalue for nb")
    ana.add_argument("--stat", choices=sorted(_STATS), default="t")
    ana.add_argument("--seed", type=int, default=0)
    ana.add_argument("--min-freq", type=int, default=2)
    ana.add_argument("--min-edge", type=int, default=1)
    ana.add_argument("--min-degree", type=int, default=0)
    ana.add_argument("--threads", type=int, default=None,
                     help="worker processes (default: FDRSPLIT_THREADS or 1)")
    ana.add_argument("--with-bh", action="store_true",
                     help="append whole-data fdr_bh to freq.csv")
    ana.add_argument("--figures", action="store_true",
                     help="also render fit/freq/assoc PNGs")
    ana.add_argument("--out-dir", default=".")

    pow_ = sub.add_parser("power", help="operating curves from a saved run")
    pow_.add_argument("--run", default="run.json")
    pow_.add_argument("--qgrid", default=None,
                      help="comma-separated q values (default: 20 points on [0.01, 0.30])")
    pow_.add_argument("--qstar", default=None,
                      help="comma-separated q* values (default: the run's q*)")
    pow_.add_argument("--figures", action="store_true", help="also render power.png")
    pow_.add_argument("--out-dir", default=".")

    bh = sub.add_parser("bh", help="whole-data Benjamini-Hochberg baseline")
    bh.add_argument("--data", required=True)
    bh.add_argument("--groups", required=True)
    bh.add_argument("--stat", choices=sorted(_STATS), default="t")
    bh.add_argument("--threshold", type=float, default=0.05)
    bh.add_argument("--out-dir", default=".")
    return top


def _threads(flag_value):
    if flag_value is not None:
        n = flag_value
    else:
        raw = os.environ.get("FDRSPLIT_THREADS", "1")
        try:
            n = int(raw)
        except ValueError:
            raise InputError(f"FDRSPLIT_THREADS={raw!r} is not an integer") from None
    if n < 1:
        raise InputError("thread count must be at least 1")
    return n


def _parse_grid(text, what):
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise InputError(f"{what} must be comma-separated numbers, got {text!r}") from None
    if not values or any(not 0.0 < v < 1.0 for v in values):
        raise InputError(f"{what} values must lie in (0, 1)")
    return values


def _whole_data_pvalues(dataset, stat):
    """Per-feature whole-data p-values; None where the statistic is undefined."""
    if stat == "nb_lr":
        vals, ok = nb_lr_batch(dataset, None)
    else:
        x, ok = t_lta_batch(dataset, None)
        vals = x.copy()
        vals[ok] = two_sided_p_from_lta(x[ok])
    return {
        fid: (float(vals[i]) if ok[i] else None)
        for i, fid in enumerate(dataset.feature_ids)
    }


def _cmd_simulate(args):
    design = _DESIGNS[args.design]
    signal = args.signal
    if signal is None:
        signal = {"table3_continuous": 30, "null_normal": 0, "nb_counts": 30}[design]
    params = {"variance_mode": args.variance_mode} if design == "table3_continuous" else {}
    try:
        spec = SimSpec(
            design=design,
            n_control=args.nc,
            n_treatment=args.nt,
            n_features=args.features,
            signal_count=signal,
            seed=args.seed,
            params=params,
        )
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    dataset, truth = generate(spec)
    os.makedirs(args.out_dir, exist_ok=True)
    write_data_csv(os.path.join(args.out_dir, "data.csv"), dataset)
    write_groups_csv(os.path.join(args.out_dir, "groups.csv"), dataset)
    write_truth_csv(os.path.join(args.out_dir, "truth.csv"), dataset.feature_ids, truth)
    print(f"wrote {design} corpus: {dataset.n_features} features x "
          f"{dataset.n_subjects} subjects, {sum(truth)} signals")
    return 0


def _cmd_analyze(args):
    stat = _STATS[args.stat]
    mode = args.mode or ("pvalue" if stat == "nb_lr" else "lta-two")
    kind = "counts" if stat == "nb_lr" else "continuous"
    dataset = load_dataset(args.data, args.groups, kind=kind)
    try:
        cfg = RunConfig(
            n_splits=args.splits,
            q=args.q,
            q_star=args.qstar,
            tool=ScreenTool(args.tool),
            mode=ScreenMode(mode),
            stat=stat,
            seed=args.seed,
            min_freq=args.min_freq,
        )
    except ValueError as exc:
        raise InputError(str(exc)) from exc

    rr = run_pipeline(dataset, cfg, threads=_threads(args.threads))
    for rec in rr.per_split:
        if rec.failure is not None:
            print(f"split {rec.plan.split_index} skipped: {rec.failure}", file=sys.stderr)

    os.makedirs(args.out_dir, exist_ok=True)
    write_run_json(os.path.join(args.out_dir, "run.json"), rr)

    fdr_bh = None
    if args.with_bh:
        pvals = _whole_data_pvalues(dataset, stat)
        defined = {fid: p for fid, p in pvals.items() if p is not None}
        fdr_bh = {r.feature_id: r.fdr_bh for r in bh_table(defined)} if defined else {}
    write_freq_csv(os.path.join(args.out_dir, "freq.csv"), rr.freq_table, fdr_bh=fdr_bh)

    if rr.whole_fit is not None:
        threshold = critical_frequency(rr.whole_fit, rr.combined_region, cfg.q_star, rr.n_splits)
        discoveries = select_discoveries(rr.freq_table, threshold)
    else:
        print(f"whole-data {rr.whole_failure}; no discovery threshold", file=sys.stderr)
        threshold = FrequencyThreshold(0.0, 0.0, False)
        discoveries = ()
    write_discoveries_csv(os.path.join(args.out_dir, "discoveries.csv"),
                          discoveries, threshold)

    graph = build_graph(rr, args.min_freq, args.min_edge, args.min_degree)
    for fmt in ("dot", "json"):
        with open(os.path.join(args.out_dir, f"assoc.{fmt}"), "wb") as fh:
            fh.write(export_graph(graph, fmt))

    if args.figures:
        from . import figures
        figures.render_analyze(args.out_dir, rr, graph)

    failed = sum(1 for rec in rr.per_split if rec.failure is not None)
    print(f"{rr.n_splits} splits ({failed} failed), "
          f"{len(discoveries)} discoveries above count {threshold.threshold_count:.3g}, "
          f"{len(graph.nodes)} graph nodes")
    return 0


def _cmd_power(args):
    rr = read_run_json(args.run)
    if args.qgrid is None:
        q_grid = [0.01 + i * (0.30 - 0.01) / 19 for i in range(20)]
    else:
        q_grid = _parse_grid(args.qgrid, "--qgrid")
    q_stars = (_parse_grid(args.qstar, "--qstar") if args.qstar is not None
               else [rr.config.q_star])
    points = power_curves(rr, q_grid, q_stars=q_stars)
    os.makedirs(args.out_dir, exist_ok=True)
    write_power_csv(os.path.join(args.out_dir, "power.csv"), points, q_stars)
    if args.figures:
        from . import figures
        figures.render_power(args.out_dir, points)
    print(f"wrote power.csv: {len(points)} rows over {len(q_grid)} q values")
    return 0


def _cmd_bh(args):
    stat = _STATS[args.stat]
    if not 0.0 < args.threshold <= 1.0:
        raise InputError("--threshold must lie in (0, 1]")
    kind = "counts" if stat == "nb_lr" else "continuous"
    dataset = load_dataset(args.data, args.groups, kind=kind)
    pvals = _whole_data_pvalues(dataset, stat)
    defined = {fid: p for fid, p in pvals.items() if p is not None}
    if not defined:
        raise InputError("no feature has a defined statistic")
    rows = bh_table(defined)
    os.makedirs(args.out_dir, exist_ok=True)
    write_bh_csv(os.path.join(args.out_dir, "bh.csv"), rows)
    detected = sum(1 for r in rows if r.fdr_bh < args.threshold)
    skipped = len(pvals) - len(defined)
    note = f" ({skipped} features had no statistic)" if skipped else ""
    print(f"{detected} detections at fdr_bh < {args.threshold:g}{note}")
    return 0


def main(argv=None):
    args = _build_parser().parse_args(argv)
    handler = {
        "simulate": _cmd_simulate,
        "analyze": _cmd_analyze,
        "power": _cmd_power,
        "bh": _cmd_bh,
    }[args.command]
    try:
        return handler(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
