"""Repeated split/fit/screen orchestration and aggregation.

Each split draws a stratified half/half partition of subjects, fits the
mixture on the modeling half, and screens the other half. Aggregation is
a commutative reduction over per-split results collected in split order,
so the outcome is bitwise identical for any worker count.
"""

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .mixture import fit_uniform_beta, tail_adjust
from .power import combine_rejections
from .screening import ScreenMode, ScreenTool, screen_split
from .stats import Dataset, nb_lr_batch, t_lta_batch

STATS = ("t_lta", "nb_lr")


@dataclass(frozen=True)
class SplitPlan:
    """One stratified half/half partition of the subject columns."""

    modeling_subjects: tuple
    screening_subjects: tuple
    split_index: int
    seed: int


@dataclass(frozen=True)
class RunConfig:
    """Knobs of one resampled screening run.

    ``stat`` selects the per-feature statistic (``t_lta`` or ``nb_lr``);
    ``mode`` must match its interpretation (p-values screen the left tail,
    tail areas may screen either or both). ``min_freq`` only filters the
    reported table, never the underlying counts.
    """

    n_splits: int = 100
    q: float = 0.1
    q_star: float = 0.05
    tool: ScreenTool = ScreenTool.TAIL_FDR
    mode: ScreenMode = ScreenMode.LTA_TWO_SIDED
    stat: str = "t_lta"
    seed: int = 0
    min_freq: int = 2

    def __post_init__(self):
        if self.n_splits < 1:
            raise ValueError("n_splits must be at least 1")
        if not 0.0 < self.q < 1.0 or not 0.0 < self.q_star < 1.0:
            raise ValueError("q and q_star must lie in (0, 1)")
        if self.stat not in STATS:
            raise ValueError(f"stat must be one of {STATS}")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")
        if self.min_freq < 0:
            raise ValueError("min_freq must be nonnegative")
        if not isinstance(self.tool, ScreenTool) or not isinstance(self.mode, ScreenMode):
            raise ValueError("tool/mode must be ScreenTool and ScreenMode members")


@dataclass(frozen=True)
class FreqRow:
    """Aggregated detection record for one feature.

    ``median_stat`` summarizes the screening statistic over the splits
    that detected the feature; the x summaries run over every split where
    the statistic existed. Undefined summaries are None.
    """

    feature_id: str
    freq: int
    rfreq: float
    median_stat: object
    median_x: object
    mean_x: object
    sd_x: object


@dataclass(frozen=True)
class FrequencyTable:
    rows: tuple
    n_splits: int


@dataclass(frozen=True)
class SplitRecord:
    """Everything retained from one split.

    ``failure`` is None on success; otherwise a short reason and the split
    contributed no detections (it still counts toward N). ``screening_x``
    maps feature id to its screening-half value whenever that statistic
    existed, independent of fit success.
    """

    plan: SplitPlan
    fit: object
    adjusted: object
    detections: object
    screening_x: dict
    failure: object


@dataclass(frozen=True)
class RunResult:
    config: RunConfig
    n_splits: int
    per_split: tuple
    freq_table: FrequencyTable
    concurrent: dict
    whole_fit: object
    whole_failure: object
    combined_region: object


def split_subjects(dataset, seed, split_index=0):
    """Stratified half/half split; modeling takes the odd subject."""
    rng = np.random.default_rng(seed)
    modeling = []
    screening = []
    for mask in (dataset.control_mask, dataset.treatment_mask):
        idx = np.flatnonzero(mask)
        if idx.size < 4:
            raise ValueError("each group needs at least four subjects to split")
        shuffled = idx[rng.permutation(idx.size)]
        take = (idx.size + 1) // 2
        modeling.extend(shuffled[:take].tolist())
        screening.extend(shuffled[take:].tolist())
    return SplitPlan(
        modeling_subjects=tuple(sorted(modeling)),
        screening_subjects=tuple(sorted(screening)),
        split_index=split_index,
        seed=seed,
    )


def _stat_batch(dataset, stat, subjects):
    if stat == "t_lta":
        return t_lta_batch(dataset, subjects)
    return nb_lr_batch(dataset, subjects)


def _fit_and_adjust(values):
    """(fit, adjusted, failure) for one modeling sample."""
    try:
        fit = fit_uniform_beta(values)
    except ValueError as exc:
        return None, None, f"fit failed: {exc}"
    if not fit.converged:
        return fit, None, "fit failed: EM did not converge"
    adjusted = tail_adjust(fit)
    if adjusted.p1_hat == 0.0:
        return fit, adjusted, "fit degenerate: no density excess above 1"
    return fit, adjusted, None


def _split_seed(master_seed, split_index):
    ss = np.random.SeedSequence([int(master_seed), int(split_index)])
    return int(ss.generate_state(1, np.uint64)[0])


def _run_split(dataset, cfg, k):
    plan = split_subjects(dataset, _split_seed(cfg.seed, k), k)
    x_mod, ok_mod = _stat_batch(dataset, cfg.stat, plan.modeling_subjects)
    x_scr, ok_scr = _stat_batch(dataset, cfg.stat, plan.screening_subjects)
    ids = dataset.feature_ids
    screening_x = {ids[i]: float(x_scr[i]) for i in np.flatnonzero(ok_scr)}

    fit, adjusted, failure = _fit_and_adjust(x_mod[ok_mod])
    if failure is None and not screening_x:
        failure = "screening statistics all degenerate"
    detections = None
    if failure is None:
        detections = screen_split(screening_x, adjusted, cfg.q, cfg.tool, cfg.mode)
    return SplitRecord(plan, fit, adjusted, detections, screening_x, failure)


_WORKER_STATE = {}


def _init_worker(dataset, cfg):
    _WORKER_STATE["dataset"] = dataset
    _WORKER_STATE["cfg"] = cfg


def _worker_split(k):
    return _run_split(_WORKER_STATE["dataset"], _WORKER_STATE["cfg"], k)


def _aggregate_rows(dataset, records, n_splits):
    ids = dataset.feature_ids
    index = {f: i for i, f in enumerate(ids)}
    xs = np.full((len(records), len(ids)), np.nan)
    freq = np.zeros(len(ids), dtype=np.int64)
    stats_by_feature = [[] for _ in ids]
    for r, rec in enumerate(records):
        for fid, x in rec.screening_x.items():
            xs[r, index[fid]] = x
        if rec.detections is None:
            continue
        for fid in rec.detections.detected_ids:
            i = index[fid]
            freq[i] += 1
            stats_by_feature[i].append(rec.detections.per_feature_stats[fid][1])

    rows = []
    n_x = np.sum(~np.isnan(xs), axis=0)
    with warnings.catch_warnings():
        # all-NaN columns are legal here; the n_x gate below turns them into None
        warnings.simplefilter("ignore", RuntimeWarning)
        med = np.nanmedian(xs, axis=0)
        mean = np.nanmean(xs, axis=0)
        sd = np.nanstd(xs, axis=0, ddof=1)
    for i, fid in enumerate(ids):
        med_stat = float(np.median(stats_by_feature[i])) if stats_by_feature[i] else None
        rows.append(FreqRow(
            feature_id=fid,
            freq=int(freq[i]),
            rfreq=int(freq[i]) / n_splits,
            median_stat=med_stat,
            median_x=float(med[i]) if n_x[i] >= 1 else None,
            mean_x=float(mean[i]) if n_x[i] >= 1 else None,
            sd_x=float(sd[i]) if n_x[i] >= 2 else None,
        ))
    rows.sort(key=lambda row: (-row.freq, row.feature_id))
    return tuple(rows)


def _concurrent_counts(records):
    counts = {}
    for rec in records:
        if rec.detections is None:
            continue
        detected = sorted(rec.detections.detected_ids)
        for i, a in enumerate(detected):
            for b in detected[i + 1:]:
                counts[(a, b)] = counts.get((a, b), 0) + 1
    return counts


def run_pipeline(dataset, cfg, threads=1):
    """Run the full resampled screening pipeline.

    Split results are reduced in split order, so any ``threads`` value
    gives an identical RunResult. Failed splits keep their slot in
    ``per_split`` and count toward N with no detections.
    """
    if not isinstance(dataset, Dataset):
        raise ValueError("run_pipeline needs a Dataset")
    if cfg.stat == "nb_lr" and dataset.kind != "counts":
        raise ValueError("the nb_lr statistic needs a counts dataset")

    if threads > 1:
        with ProcessPoolExecutor(
            max_workers=threads, initializer=_init_worker, initargs=(dataset, cfg)
        ) as pool:
            records = tuple(pool.map(_worker_split, range(cfg.n_splits)))
    else:
        records = tuple(_run_split(dataset, cfg, k) for k in range(cfg.n_splits))

    x_all, ok_all = _stat_batch(dataset, cfg.stat, None)
    whole_fit = None
    _, whole_adj, whole_failure = _fit_and_adjust(x_all[ok_all])
    if whole_failure is None:
        whole_fit = whole_adj

    rows = _aggregate_rows(dataset, records, cfg.n_splits)
    boundaries = [
        rec.detections.boundaries for rec in records if rec.detections is not None
    ]
    return RunResult(
        config=cfg,
        n_splits=cfg.n_splits,
        per_split=records,
        freq_table=FrequencyTable(rows=rows, n_splits=cfg.n_splits),
        concurrent=_concurrent_counts(records),
        whole_fit=whole_fit,
        whole_failure=whole_failure,
        combined_region=combine_rejections(boundaries),
    )


def detection_frequencies(run_result, min_freq):
    """Frequency table filtered to rows with freq >= min_freq."""
    if min_freq < 0:
        raise ValueError("min_freq must be nonnegative")
    rows = tuple(r for r in run_result.freq_table.rows if r.freq >= min_freq)
    return FrequencyTable(rows=rows, n_splits=run_result.freq_table.n_splits)
