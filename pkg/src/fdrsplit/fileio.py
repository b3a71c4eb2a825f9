"""File formats for datasets, run artifacts, and result tables.

CSV is plain comma-separated UTF-8 with a header row and '.' decimals.
Ids are restricted to [A-Za-z0-9_.-] so nothing ever needs quoting and
identical inputs always produce byte-identical files. Floats are written
with repr, which round-trips exactly. Missing values are empty cells in
CSV and null in JSON.
"""

import json
import re

import numpy as np

from .mixture import MixtureFit, tail_adjust
from .resampler import (
    FreqRow,
    FrequencyTable,
    RunConfig,
    RunResult,
    SplitPlan,
    SplitRecord,
)
from .screening import Region, ScreenMode, ScreenTool, SplitDetections
from .stats import Dataset

SCHEMA_VERSION = 1
_ID_RE = re.compile(r"[A-Za-z0-9_.\-]+\Z")


class InputError(ValueError):
    """Malformed input file; the message carries row/column context."""


def _check_id(token, path, row):
    if not _ID_RE.match(token):
        raise InputError(f"{path} row {row}: id {token!r} has characters outside [A-Za-z0-9_.-]")
    return token


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(float(value))  # collapse numpy scalars to plain repr
    return str(value)


def _write_rows(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_cell(v) for v in row) + "\n")


def _read_rows(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if not lines:
        raise InputError(f"{path}: empty file")
    return [line.split(",") for line in lines]


def default_subject_ids(n):
    return [f"s{i + 1:04d}" for i in range(n)]


def write_data_csv(path, dataset, subject_ids=None):
    """Matrix as feature rows; header holds the subject ids."""
    if subject_ids is None:
        subject_ids = default_subject_ids(dataset.n_subjects)
    if len(subject_ids) != dataset.n_subjects:
        raise ValueError("one subject id per column required")
    for s in list(subject_ids) + list(dataset.feature_ids):
        _check_id(str(s), path, 0)
    rows = (
        [fid] + [repr(float(v)) for v in dataset.matrix[i]]
        for i, fid in enumerate(dataset.feature_ids)
    )
    _write_rows(path, ["feature_id"] + list(subject_ids), rows)


def write_groups_csv(path, dataset, subject_ids=None):
    if subject_ids is None:
        subject_ids = default_subject_ids(dataset.n_subjects)
    _write_rows(path, ["subject_id", "group"], zip(subject_ids, dataset.group))


def write_truth_csv(path, feature_ids, truth):
    _write_rows(path, ["feature_id", "is_signal"],
                ((fid, int(t)) for fid, t in zip(feature_ids, truth)))


def read_truth_csv(path):
    rows = _read_rows(path)
    if rows[0] != ["feature_id", "is_signal"]:
        raise InputError(f"{path} row 1: expected header feature_id,is_signal")
    return {r[0]: bool(int(r[1])) for r in rows[1:]}


def load_dataset(data_path, groups_path, kind="continuous"):
    """Assemble a Dataset from the data/groups CSV pair.

    Column order of data.csv is kept; groups.csv may list subjects in any
    order but must cover exactly the data columns.
    """
    rows = _read_rows(data_path)
    header = rows[0]
    if len(header) < 2 or header[0] != "feature_id":
        raise InputError(f"{data_path} row 1: header must be feature_id,<subject ids>")
    subjects = [_check_id(s, data_path, 1) for s in header[1:]]
    if len(set(subjects)) != len(subjects):
        raise InputError(f"{data_path} row 1: duplicate subject ids")

    feature_ids = []
    values = []
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise InputError(
                f"{data_path} row {r}: expected {len(header)} columns, got {len(row)}"
            )
        feature_ids.append(_check_id(row[0], data_path, r))
        try:
            values.append([float(v) for v in row[1:]])
        except ValueError:
            for c, v in enumerate(row[1:], start=2):
                try:
                    float(v)
                except ValueError:
                    raise InputError(
                        f"{data_path} row {r} column {c}: {v!r} is not a number"
                    ) from None
            raise

    grows = _read_rows(groups_path)
    if grows[0] != ["subject_id", "group"]:
        raise InputError(f"{groups_path} row 1: expected header subject_id,group")
    labels = {}
    for r, row in enumerate(grows[1:], start=2):
        if len(row) != 2:
            raise InputError(f"{groups_path} row {r}: expected 2 columns, got {len(row)}")
        if row[0] in labels:
            raise InputError(f"{groups_path} row {r}: duplicate subject id {row[0]!r}")
        labels[row[0]] = row[1]
    missing = [s for s in subjects if s not in labels]
    if missing:
        raise InputError(f"{groups_path}: no group for subject {missing[0]!r}")
    extra = sorted(set(labels) - set(subjects))
    if extra:
        raise InputError(f"{groups_path}: subject {extra[0]!r} not in {data_path}")

    try:
        return Dataset(
            matrix=np.asarray(values, dtype=np.float64),
            group=np.asarray([labels[s] for s in subjects]),
            feature_ids=np.asarray(feature_ids),
            kind=kind,
        )
    except ValueError as exc:
        raise InputError(f"{data_path}: {exc}") from exc


FREQ_COLUMNS = ["id", "freq", "rfreq", "med_stat", "med_x", "mean_x", "sd_x"]


def write_freq_csv(path, freq_table, fdr_bh=None):
    """Frequency table rows; pass fdr_bh (id keyed) to append that column."""
    header = list(FREQ_COLUMNS) + (["fdr_bh"] if fdr_bh is not None else [])
    rows = []
    for r in freq_table.rows:
        row = [r.feature_id, r.freq, r.rfreq, r.median_stat, r.median_x, r.mean_x, r.sd_x]
        if fdr_bh is not None:
            row.append(fdr_bh.get(r.feature_id))
        rows.append(row)
    _write_rows(path, header, rows)


def write_discoveries_csv(path, rows, threshold):
    """Discovery rows with the applied cutoff echoed on every line."""
    _write_rows(
        path,
        ["id", "freq", "rfreq", "threshold_count", "threshold_rfreq"],
        ([r.feature_id, r.freq, r.rfreq, threshold.threshold_count, threshold.threshold_rfreq]
         for r in rows),
    )


def write_power_csv(path, points, q_stars):
    """Power-curve points; one crit_rfreq column per q_star."""
    crit_cols = [f"crit_rfreq@{_cell(float(qs))}" for qs in q_stars]
    header = ["q", "x_lo", "x_hi", "power", "type_i", "type_ii",
              "precision", "fdr_o", "accuracy"] + crit_cols + ["source"]
    rows = []
    for p in points:
        crit = list(p.crit_rfreq) if p.crit_rfreq is not None else [None] * len(q_stars)
        rows.append([p.q, p.x_lo, p.x_hi, p.power, p.type_i, p.type_ii,
                     p.precision, p.fdr_o, p.accuracy] + crit + [p.source])
    _write_rows(path, header, rows)


def write_bh_csv(path, bh_rows):
    _write_rows(path, ["id", "p", "fdr_bh"],
                ((r.feature_id, r.p, r.fdr_bh) for r in bh_rows))


def _fit_to_json(fit):
    if fit is None:
        return None
    return {
        "p0_star": fit.p0_star,
        "p1_star": fit.p1_star,
        "alpha": fit.alpha,
        "beta": fit.beta,
        "loglik": fit.loglik,
        "iterations": fit.iterations,
        "converged": fit.converged,
    }


def _fit_from_json(obj):
    if obj is None:
        return None
    return MixtureFit(
        p0_star=obj["p0_star"],
        p1_star=obj["p1_star"],
        alpha=obj["alpha"],
        beta=obj["beta"],
        loglik=obj["loglik"],
        iterations=obj["iterations"],
        converged=obj["converged"],
    )


def run_to_json(rr):
    """Full RunResult as a JSON string (schema v1).

    Adjusted mixtures are not stored; they re-derive exactly from the fit
    parameters on load. The EM log-likelihood trace is dropped.
    """
    cfg = rr.config
    per_split = []
    for rec in rr.per_split:
        det = rec.detections
        per_split.append({
            "split_index": rec.plan.split_index,
            "seed": rec.plan.seed,
            "modeling_subjects": list(rec.plan.modeling_subjects),
            "screening_subjects": list(rec.plan.screening_subjects),
            "failure": rec.failure,
            "fit": _fit_to_json(rec.fit),
            "detected": sorted(det.detected_ids) if det is not None else None,
            "boundaries": list(det.boundaries) if det is not None else None,
            "stats": (
                {fid: list(v) for fid, v in sorted(det.per_feature_stats.items())}
                if det is not None else None
            ),
            "screening_x": dict(sorted(rec.screening_x.items())),
        })
    doc = {
        "schema_version": SCHEMA_VERSION,
        "config": {
            "n_splits": cfg.n_splits,
            "q": cfg.q,
            "q_star": cfg.q_star,
            "tool": cfg.tool.value,
            "mode": cfg.mode.value,
            "stat": cfg.stat,
            "seed": cfg.seed,
            "min_freq": cfg.min_freq,
        },
        "n_splits": rr.n_splits,
        "whole_fit": _fit_to_json(rr.whole_fit.source if rr.whole_fit else None),
        "whole_failure": rr.whole_failure,
        "combined_region": [list(iv) for iv in rr.combined_region.intervals],
        "freq_table": {
            "n_splits": rr.freq_table.n_splits,
            "columns": FREQ_COLUMNS,
            "rows": [
                [r.feature_id, r.freq, r.rfreq, r.median_stat,
                 r.median_x, r.mean_x, r.sd_x]
                for r in rr.freq_table.rows
            ],
        },
        "concurrent": [[a, b, w] for (a, b), w in sorted(rr.concurrent.items())],
    }
    doc["per_split"] = per_split
    return json.dumps(doc, sort_keys=True, indent=1, allow_nan=False) + "\n"


def write_run_json(path, rr):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(run_to_json(rr))


def load_run_json(text):
    """Rebuild a RunResult from run_to_json output."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"run file is not JSON: {exc}") from exc
    try:
        if doc["schema_version"] != SCHEMA_VERSION:
            raise InputError(f"unsupported schema_version {doc['schema_version']}")
        c = doc["config"]
        cfg = RunConfig(
            n_splits=c["n_splits"],
            q=c["q"],
            q_star=c["q_star"],
            tool=ScreenTool(c["tool"]),
            mode=ScreenMode(c["mode"]),
            stat=c["stat"],
            seed=c["seed"],
            min_freq=c["min_freq"],
        )
        records = []
        for s in doc["per_split"]:
            plan = SplitPlan(
                modeling_subjects=tuple(s["modeling_subjects"]),
                screening_subjects=tuple(s["screening_subjects"]),
                split_index=s["split_index"],
                seed=s["seed"],
            )
            fit = _fit_from_json(s["fit"])
            adjusted = None
            detections = None
            if s["failure"] is None:
                adjusted = tail_adjust(fit)
                detections = SplitDetections(
                    detected_ids=frozenset(s["detected"]),
                    boundaries=tuple(s["boundaries"]),
                    tool=cfg.tool,
                    q=cfg.q,
                    per_feature_stats={k: tuple(v) for k, v in s["stats"].items()},
                )
            elif fit is not None and fit.converged:
                # the degenerate-fit failure still had an adjusted model
                adjusted = tail_adjust(fit)
            records.append(SplitRecord(
                plan=plan,
                fit=fit,
                adjusted=adjusted,
                detections=detections,
                screening_x=dict(s["screening_x"]),
                failure=s["failure"],
            ))
        ft = doc["freq_table"]
        rows = tuple(FreqRow(*row) for row in ft["rows"])
        whole_fit = _fit_from_json(doc["whole_fit"])
        return RunResult(
            config=cfg,
            n_splits=doc["n_splits"],
            per_split=tuple(records),
            freq_table=FrequencyTable(rows=rows, n_splits=ft["n_splits"]),
            concurrent={(a, b): w for a, b, w in doc["concurrent"]},
            whole_fit=tail_adjust(whole_fit) if whole_fit is not None else None,
            whole_failure=doc["whole_failure"],
            combined_region=Region(intervals=tuple(tuple(iv) for iv in doc["combined_region"])),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"run file missing or malformed field: {exc}") from exc


def read_run_json(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return load_run_json(fh.read())
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
