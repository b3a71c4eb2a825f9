"""Tail areas, Fdr/fdr statistics, and per-split detection rules.

Everything here is a pure function of an immutable AdjustedMixture, so
per-split screening parallelizes trivially. Left-tail quantities use the
plain CDF forms; right-tail quantities are computed in the complement
coordinate delta = 1 - x so boundaries like 1 - 1e-4 keep full relative
precision.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .mixture import (
    AdjustedMixture,
    _beta_logpdf,
    _excess_above,
    _excess_below,
    _glog,
    _root_between,
)
from .special import log_beta, reg_inc_beta

__all__ = [
    "Region",
    "ScreenMode",
    "ScreenTool",
    "SplitDetections",
    "tail_area_for",
    "tail_fdr",
    "local_fdr",
    "rejection_boundary",
    "screen_split",
]

# Bracket inset for all boundary root-finding.
EPS = 1e-12


class ScreenMode(Enum):
    PVALUE_LEFT = "pvalue"
    LTA_LEFT = "lta-left"
    LTA_RIGHT = "lta-right"
    LTA_TWO_SIDED = "lta-two"


class ScreenTool(Enum):
    TAIL_FDR = "tailfdr"
    LOCAL_FDR = "localfdr"


_LEFT_MODES = (ScreenMode.PVALUE_LEFT, ScreenMode.LTA_LEFT)


@dataclass(frozen=True)
class Region:
    """Union of disjoint closed intervals inside [0, 1]."""

    intervals: tuple

    def __post_init__(self):
        prev_hi = -1.0
        for lo, hi in self.intervals:
            if not (0.0 <= lo <= hi <= 1.0):
                raise ValueError(f"interval ({lo}, {hi}) not inside [0, 1]")
            if lo < prev_hi:
                raise ValueError("intervals must be sorted and disjoint")
            prev_hi = hi

    def measure(self):
        return sum(hi - lo for lo, hi in self.intervals)


@dataclass(frozen=True)
class SplitDetections:
    """Screening outcome for one data split.

    ``boundaries`` is (x*, x**): a feature is detected iff its value is
    below x* or above x**, with None meaning no rejection on that side
    and (1.0, 0.0) encoding full-support rejection. ``per_feature_stats``
    maps every id to (value, statistic).
    """

    detected_ids: frozenset
    boundaries: tuple
    tool: ScreenTool
    q: float
    per_feature_stats: dict


def _lower_parts(adj: AdjustedMixture, x):
    """(F_mixture, p0_hat * F0_hat) at x, sharing the incomplete beta."""
    fit = adj.source
    if np.ndim(x) != 0:
        x = np.asarray(x, dtype=np.float64)
    ib = reg_inc_beta(x, fit.alpha, fit.beta)
    mix = fit.p0_star * x + fit.p1_star * ib
    exc = _excess_below(adj, x) if adj.a11 > 0.0 else 0.0
    return mix, fit.p0_star * x + fit.p1_star * (ib - exc)


def _upper_parts(adj: AdjustedMixture, delta):
    """(1-F_mixture, p0_hat*(1-F0_hat)) at x = 1 - delta, in delta form."""
    fit = adj.source
    if np.ndim(delta) != 0:
        delta = np.asarray(delta, dtype=np.float64)
    ib = reg_inc_beta(delta, fit.beta, fit.alpha)
    mix = fit.p0_star * delta + fit.p1_star * ib
    exc = _excess_above(adj, delta) if adj.a11 > 0.0 else 0.0
    return mix, fit.p0_star * delta + fit.p1_star * (ib - exc)


def _cdf_bisect_scalar(p0, p1, a, b, m, lo, hi):
    # Plain-float loop so reg_inc_beta takes its scalar fast path; boundary
    # solves call this thousands of times per run.
    tlo = float(np.log(lo))
    thi = float(np.log(hi))
    m = float(m)
    for _ in range(200):
        mid = 0.5 * (tlo + thi)
        x = float(np.exp(mid))
        if p0 * x + p1 * reg_inc_beta(x, a, b) < m:
            tlo = mid
        else:
            thi = mid
        if thi - tlo < 1e-14:
            break
    return float(np.exp(0.5 * (tlo + thi)))


def _quantile(adj: AdjustedMixture, m, lo=1e-300, hi=1.0):
    """Solve F_mixture(x) = m by bisection in log x over [lo, hi]."""
    fit = adj.source
    if np.ndim(m) == 0:
        return _cdf_bisect_scalar(fit.p0_star, fit.p1_star, fit.alpha, fit.beta, m, lo, hi)
    m = np.asarray(m, dtype=np.float64)
    tlo = np.full(m.shape, np.log(lo))
    thi = np.full(m.shape, np.log(hi))
    for _ in range(200):
        mid = 0.5 * (tlo + thi)
        x = np.exp(mid)
        val = fit.p0_star * x + fit.p1_star * reg_inc_beta(x, fit.alpha, fit.beta)
        low = val < m
        tlo = np.where(low, mid, tlo)
        thi = np.where(low, thi, mid)
        if np.max(thi - tlo) < 1e-14:
            break
    return np.exp(0.5 * (tlo + thi))


def _upper_quantile(adj: AdjustedMixture, m, lo=1e-300, hi=1.0):
    """Solve 1 - F_mixture(1 - delta) = m for delta, bisected in log delta."""
    fit = adj.source
    if np.ndim(m) == 0:
        return _cdf_bisect_scalar(fit.p0_star, fit.p1_star, fit.beta, fit.alpha, m, lo, hi)
    m = np.asarray(m, dtype=np.float64)
    tlo = np.full(m.shape, np.log(lo))
    thi = np.full(m.shape, np.log(hi))
    for _ in range(200):
        mid = 0.5 * (tlo + thi)
        d = np.exp(mid)
        val = fit.p0_star * d + fit.p1_star * reg_inc_beta(d, fit.beta, fit.alpha)
        low = val < m
        tlo = np.where(low, mid, tlo)
        thi = np.where(low, thi, mid)
        if np.max(thi - tlo) < 1e-14:
            break
    return np.exp(0.5 * (tlo + thi))


def tail_area_for(x: float, adj: AdjustedMixture, mode: ScreenMode) -> Region:
    """Tail region associated with an observed value x.

    One-sided modes give [0, x] or [x, 1]. The two-sided mode pairs x with
    its matching percentile: p = F(x) is mirrored to the point x' with
    F(x') = 1 - p and the region is the union of the two tails.
    """
    if not 0.0 < x < 1.0:
        raise ValueError("x must lie strictly inside (0, 1)")
    if mode in _LEFT_MODES:
        return Region(((0.0, x),))
    if mode is ScreenMode.LTA_RIGHT:
        return Region(((x, 1.0),))
    p, _ = _lower_parts(adj, x)
    p = float(p)
    if p == 0.5:
        return Region(((0.0, 1.0),))
    if p < 0.5:
        other = 1.0 - float(_upper_quantile(adj, p))
        if other <= x:
            raise RuntimeError("matching percentile collapsed onto x")
        return Region(((0.0, x), (other, 1.0)))
    other = float(_quantile(adj, 1.0 - p))
    if other >= x:
        raise RuntimeError("matching percentile collapsed onto x")
    return Region(((0.0, other), (x, 1.0)))


def tail_fdr(region: Region, adj: AdjustedMixture) -> float:
    """Tail-area false discovery rate p0_hat * F0_hat(B) / F_mixture(B)."""
    mix = 0.0
    null = 0.0
    for lo, hi in region.intervals:
        mhi, nhi = _lower_parts(adj, hi)
        mlo, nlo = _lower_parts(adj, lo)
        mix += float(mhi - mlo)
        null += float(nhi - nlo)
    if mix <= 0.0:
        raise ValueError("region has zero mass under the fitted mixture")
    return min(max(null / mix, 0.0), 1.0)


def local_fdr(x, adj: AdjustedMixture):
    """Local false discovery rate p0_hat * f0_hat(x) / f_mixture(x).

    Equals 1 wherever the raw beta density is at or below 1; inside an
    excess interval it reduces to 1 / (p0* + p1* f1*(x)). Endpoint inputs
    are evaluated at the clamped support like eval_pdf.
    """
    scalar = np.ndim(x) == 0
    fit = adj.source
    xc = np.clip(np.asarray(x, dtype=np.float64), 1e-10, 1.0 - 1e-10)
    if adj.a11 == 0.0:
        out = np.ones_like(xc)
        return float(out) if scalar else out
    f1 = np.exp(_beta_logpdf(xc, fit.alpha, fit.beta))
    out = (fit.p0_star + fit.p1_star * np.minimum(f1, 1.0)) / (fit.p0_star + fit.p1_star * f1)
    out = np.clip(out, 0.0, 1.0)
    return float(out) if scalar else out


def _left_tailfdr(adj, x):
    mix, null = _lower_parts(adj, x)
    return null / mix


def _right_tailfdr(adj, delta):
    mix, null = _upper_parts(adj, delta)
    return null / mix


def _twosided_tailfdr_at_m(adj, m):
    """Fdr of the two-sided region with mass m in each tail, m in (0, 0.5]."""
    if m >= 0.5:
        return adj.p0_hat * 1.0  # full support
    xl = float(_quantile(adj, m))
    dr = float(_upper_quantile(adj, m))
    mix_l, null_l = _lower_parts(adj, xl)
    mix_r, null_r = _upper_parts(adj, dr)
    return float(null_l + null_r) / float(mix_l + mix_r)


def _bisect_increasing(g, lo, hi, q):
    """Largest x in [lo, hi] with g(x) < q, for g nondecreasing.

    Assumes g(lo) < q <= g(hi). Bisection until the bracket is below 1e-12
    wide (or floats run out)."""
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if g(mid) < q:
            lo = mid
        else:
            hi = mid
        if hi - lo < EPS:
            break
    return 0.5 * (lo + hi)


def _localfdr_boundaries(adj: AdjustedMixture, q: float):
    """Both-sided fdr < q boundaries via the f1* = tau level crossing.

    Inside an excess interval fdr(x) = 1/(p0* + p1* f1*(x)), so fdr < q is
    exactly f1* > tau with tau = (1/q - p0*)/p1*. The crossing reuses the
    log-density bisection with the level folded into the constant.
    """
    fit = adj.source
    if adj.a11 == 0.0 or fit.p1_star <= 0.0:
        return None, None
    tau = (1.0 / q - fit.p0_star) / fit.p1_star
    level = log_beta(fit.alpha, fit.beta) + np.log(tau)
    a, b = fit.alpha, fit.beta
    x_star = None
    x_dstar = None
    for (lo, hi), (dlo, dhi) in zip(adj.excess, adj.excess_compl):
        if lo == 0.0 and _glog(a, b, level, EPS, 1.0 - EPS) > 0.0:
            # Decreasing piece; the detection region is (0, root) when the
            # density still exceeds tau at the bracket inset.
            r = _root_between(a, b, level, (EPS, 1.0 - EPS), (hi, dlo))
            if r is not None:
                x_star = r[0]
        if hi == 1.0 and _glog(a, b, level, 1.0 - EPS, EPS) > 0.0:
            r = _root_between(a, b, level, (lo, dhi), (1.0 - EPS, EPS))
            if r is not None:
                x_dstar = r[0]
    return x_star, x_dstar


def rejection_boundary(adj: AdjustedMixture, q: float, tool: ScreenTool, mode: ScreenMode):
    """Boundary points (x*, x**) of the rejection set {statistic < q}.

    None on a side means no value on that side rejects; (1.0, 0.0) encodes
    full-support rejection. The local fdr tool always screens both tails
    because its statistic does not depend on the mode; the tail Fdr tool
    follows the mode's sidedness.
    """
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    if adj.p1_hat == 0.0:
        return None, None
    if tool is ScreenTool.LOCAL_FDR:
        return _localfdr_boundaries(adj, q)

    if mode in _LEFT_MODES:
        g = lambda x: _left_tailfdr(adj, x)
        if g(EPS) >= q:
            return None, None
        if g(1.0 - EPS) < q:
            return 1.0, 0.0
        return _bisect_increasing(g, EPS, 1.0 - EPS, q), None
    if mode is ScreenMode.LTA_RIGHT:
        g = lambda d: _right_tailfdr(adj, d)
        if g(EPS) >= q:
            return None, None
        if g(1.0 - EPS) < q:
            return 1.0, 0.0
        delta = _bisect_increasing(g, EPS, 1.0 - EPS, q)
        return None, 1.0 - delta

    # Two-sided: the statistic depends on x only through the single-tail
    # mass m = min(F(x), 1-F(x)), and is nondecreasing in m. Solve for the
    # critical mass once, then map it back to both boundaries.
    m_lo = 1e-15
    if _twosided_tailfdr_at_m(adj, m_lo) >= q:
        return None, None
    if _twosided_tailfdr_at_m(adj, 0.5) < q:
        return 1.0, 0.0
    # Bisect in log m (the critical mass can sit many orders below 1),
    # carrying quantile brackets that shrink with the mass bracket so the
    # inner solves stay cheap after the first few iterations.
    tlo, thi = np.log(m_lo), np.log(0.5)
    xb = [1e-300, 1.0]
    db = [1e-300, 1.0]
    for _ in range(60):
        mid = 0.5 * (tlo + thi)
        m = float(np.exp(mid))
        xl = float(_quantile(adj, m, xb[0], xb[1]))
        dr = float(_upper_quantile(adj, m, db[0], db[1]))
        mix_l, null_l = _lower_parts(adj, xl)
        mix_r, null_r = _upper_parts(adj, dr)
        if float(null_l + null_r) / float(mix_l + mix_r) < q:
            tlo, xb[0], db[0] = mid, xl, dr
        else:
            thi, xb[1], db[1] = mid, xl, dr
    m_star = float(np.exp(0.5 * (tlo + thi)))
    x_star = float(_quantile(adj, m_star, xb[0], xb[1]))
    x_dstar = 1.0 - float(_upper_quantile(adj, m_star, db[0], db[1]))
    return x_star, x_dstar


def _feature_stats(x, adj: AdjustedMixture, tool: ScreenTool, mode: ScreenMode):
    """Vector of per-feature statistics for detection."""
    xc = np.clip(x, EPS, 1.0 - EPS)
    if tool is ScreenTool.LOCAL_FDR:
        return local_fdr(xc, adj)
    if adj.p1_hat == 0.0:
        return np.ones_like(xc)
    if mode in _LEFT_MODES:
        mix, null = _lower_parts(adj, xc)
        return np.clip(null / mix, 0.0, 1.0)
    if mode is ScreenMode.LTA_RIGHT:
        mix, null = _upper_parts(adj, 1.0 - xc)
        return np.clip(null / mix, 0.0, 1.0)
    # Two-sided: each value is paired with its matching percentile. Only
    # one side per feature needs a quantile solve; the observed value
    # already anchors the other.
    p, _ = _lower_parts(adj, xc)
    left_side = p <= 0.5
    x_left = np.array(xc, dtype=np.float64)
    d_right = 1.0 - xc
    if not left_side.all():
        x_left[~left_side] = _quantile(adj, 1.0 - p[~left_side])
    if left_side.any():
        d_right[left_side] = _upper_quantile(adj, p[left_side])
    mix_l, null_l = _lower_parts(adj, x_left)
    mix_r, null_r = _upper_parts(adj, d_right)
    return np.clip((null_l + null_r) / (mix_l + mix_r), 0.0, 1.0)


def screen_split(values, adj: AdjustedMixture, q: float, tool: ScreenTool, mode: ScreenMode) -> SplitDetections:
    """Screen one split's feature values against the fitted mixture.

    ``values`` maps feature id to its probability-scale value. A feature is
    detected when its statistic (tail Fdr of its tail area, or local fdr)
    is strictly below q.
    """
    if not values:
        raise ValueError("values must be nonempty")
    ids = list(values.keys())
    x = np.asarray([values[i] for i in ids], dtype=np.float64)
    stats = _feature_stats(x, adj, tool, mode)
    detected = frozenset(i for i, s in zip(ids, stats) if s < q)
    boundaries = rejection_boundary(adj, q, tool, mode)
    per_feature = {i: (float(v), float(s)) for i, v, s in zip(ids, x, stats)}
    return SplitDetections(
        detected_ids=detected,
        boundaries=boundaries,
        tool=tool,
        q=q,
        per_feature_stats=per_feature,
    )
