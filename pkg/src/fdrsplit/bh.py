"""Benjamini-Hochberg baseline used for comparisons.

Plain step-up adjustment on p-values; the resampled screener is always
benchmarked against this.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class BhRow:
    """One feature's place in the step-up adjustment (rank is 1-based)."""

    feature_id: str
    p: float
    fdr_bh: float
    rank: int


def _checked(pvals):
    p = np.asarray(pvals, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("need a nonempty 1-D vector of p-values")
    if np.any(np.isnan(p)) or np.any(p < 0.0) or np.any(p > 1.0):
        raise ValueError("p-values must lie in [0, 1]")
    return p


def bh_adjust(pvals):
    """Step-up adjusted p-values: q_(i) = min_(j>=i) m p_(j) / j, capped at 1."""
    p = _checked(pvals)
    m = p.size
    order = np.argsort(p, kind="stable")
    ranked = p[order] * m / np.arange(1, m + 1)
    adj = np.minimum(np.minimum.accumulate(ranked[::-1])[::-1], 1.0)
    out = np.empty(m)
    out[order] = adj
    return out


def bh_detect(pvals, threshold):
    """Boolean mask of rejections: adjusted value strictly below threshold."""
    if not 0.0 < threshold <= 1.0:
        raise ValueError("threshold must lie in (0, 1]")
    return bh_adjust(pvals) < threshold


def bh_table(pvalues):
    """Adjust an id-keyed mapping of p-values.

    Returns one BhRow per feature in the input order; ranks break ties by
    that same order.
    """
    ids = list(pvalues.keys())
    p = _checked([pvalues[i] for i in ids])
    adj = bh_adjust(p)
    ranks = np.empty(p.size, dtype=np.int64)
    ranks[np.argsort(p, kind="stable")] = np.arange(1, p.size + 1)
    return tuple(
        BhRow(fid, float(pi), float(qi), int(ri))
        for fid, pi, qi, ri in zip(ids, p, adj, ranks)
    )


def two_sided_p_from_lta(x):
    """Fold a left tail area into a two-sided p-value, 2 min(x, 1 - x)."""
    scalar = np.ndim(x) == 0
    arr = np.asarray(x, dtype=np.float64)
    if np.any(np.isnan(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValueError("tail areas must lie in [0, 1]")
    out = 2.0 * np.minimum(arr, 1.0 - arr)
    return float(out) if scalar else out
