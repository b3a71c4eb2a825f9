"""Operating characteristics of rejection regions under a fitted model.

All probabilities here are closed-form functionals of an AdjustedMixture,
so combined regions from many splits and the single whole-data region can
be compared under one referee model without any resimulation.
"""

from dataclasses import dataclass

from .mixture import eval_cdf, eval_upper_cdf
from .screening import Region, rejection_boundary


@dataclass(frozen=True)
class PowerReport:
    """Region probabilities under each model component.

    ``precision`` and ``fdr_o`` are None when the mixture puts no mass on
    the region (nothing would ever be rejected there).
    """

    region: Region
    power: float
    type_i: float
    type_ii: float
    precision: object
    fdr_o: object
    accuracy: float


@dataclass(frozen=True)
class FrequencyThreshold:
    """Detection-count cutoff implied by a relative-frequency budget.

    A feature is a discovery iff its count exceeds ``threshold_count``
    strictly. ``attainable`` is False when the required relative frequency
    is 1 or more, which no count out of n_splits can exceed.
    """

    threshold_rfreq: float
    threshold_count: float
    attainable: bool


@dataclass(frozen=True)
class PowerCurvePoint:
    """One (q, source) row of a power curve.

    ``crit_rfreq`` holds one threshold per requested q_star for combined
    rows and None for the whole-data comparator, where resampling
    frequencies do not exist.
    """

    source: str
    q: float
    x_lo: object
    x_hi: object
    power: float
    type_i: float
    type_ii: float
    precision: object
    fdr_o: object
    accuracy: float
    crit_rfreq: object


def combine_rejections(boundaries):
    """Union the per-split rejection regions.

    Each element is a boundary pair (x_lo, x_hi) with None for a missing
    side; the union keeps the largest lower boundary and the smallest
    upper one. Overlapping sides collapse to the full support.
    """
    lows = [b[0] for b in boundaries if b[0] is not None]
    highs = [b[1] for b in boundaries if b[1] is not None]
    x_lo = max(lows) if lows else None
    x_hi = min(highs) if highs else None
    if x_lo is None and x_hi is None:
        return Region(intervals=())
    if x_hi is None:
        return Region(intervals=((0.0, x_lo),))
    if x_lo is None:
        return Region(intervals=((x_hi, 1.0),))
    if x_lo >= x_hi:
        return Region(intervals=((0.0, 1.0),))
    return Region(intervals=((0.0, x_lo), (x_hi, 1.0)))


def region_bounds(region):
    """Back out the (x_lo, x_hi) pair a region was combined from.

    The full support returns (1.0, 0.0) and the empty region (None, None),
    mirroring the boundary conventions of the screening layer.
    """
    if region.intervals == ((0.0, 1.0),):
        return 1.0, 0.0
    x_lo = None
    x_hi = None
    for lo, hi in region.intervals:
        if lo == 0.0:
            x_lo = hi
        if hi == 1.0:
            x_hi = lo
    return x_lo, x_hi


def _region_mass(adj, region, which):
    total = 0.0
    for lo, hi in region.intervals:
        if hi == 1.0:
            # evaluate [lo, 1] in the complement variable so thin right
            # tails keep relative precision
            total += eval_upper_cdf(adj, 1.0 - lo, which)
        else:
            total += eval_cdf(adj, hi, which) - eval_cdf(adj, lo, which)
    return min(max(total, 0.0), 1.0)


def power_metrics(adj, region):
    """Power, error rates and precision of a region under ``adj``."""
    power = _region_mass(adj, region, "F1_hat")
    type_i = _region_mass(adj, region, "F0_hat")
    mix = _region_mass(adj, region, "F_mixture")
    if mix > 0.0:
        precision = adj.p1_hat * power / mix
        fdr_o = adj.p0_hat * type_i / mix
    else:
        precision = None
        fdr_o = None
    return PowerReport(
        region=region,
        power=power,
        type_i=type_i,
        type_ii=1.0 - power,
        precision=precision,
        fdr_o=fdr_o,
        accuracy=adj.p1_hat * power + adj.p0_hat * (1.0 - type_i),
    )


def critical_frequency(adj, region, q_star, n_splits):
    """Smallest detection frequency worth reporting at budget q_star.

    The expected null detection rate of the region bounds the relative
    frequency a pure-noise feature can reach, so counts must clear
    type_i_mass / q_star before they mean anything.
    """
    if not 0.0 < q_star < 1.0:
        raise ValueError("q_star must lie in (0, 1)")
    if n_splits < 1:
        raise ValueError("n_splits must be at least 1")
    null_mass = adj.p0_hat * _region_mass(adj, region, "F0_hat")
    rfreq = null_mass / q_star
    return FrequencyThreshold(
        threshold_rfreq=rfreq,
        threshold_count=n_splits * rfreq,
        attainable=rfreq < 1.0,
    )


def select_discoveries(freq_table, threshold):
    """Rows of a frequency table whose count strictly beats the cutoff."""
    return tuple(r for r in freq_table.rows if r.freq > threshold.threshold_count)


def power_curves(run_result, q_grid, q_stars=None):
    """Combined-versus-whole operating curves over a grid of q values.

    Boundaries are re-solved from the stored per-split fits at every q;
    nothing is re-split or re-fitted. Metrics for both sources are taken
    under the whole-data fit so the comparison is like for like. Returns
    one point per (q, source), combined first at each q.
    """
    whole = run_result.whole_fit
    if whole is None:
        raise ValueError(f"whole-data fit unavailable: {run_result.whole_failure}")
    cfg = run_result.config
    if q_stars is None:
        q_stars = (cfg.q_star,)
    fits = [rec.adjusted for rec in run_result.per_split if rec.failure is None]

    points = []
    for q in q_grid:
        per_split = [rejection_boundary(adj, q, cfg.tool, cfg.mode) for adj in fits]
        combined = combine_rejections(per_split)
        whole_region = combine_rejections([rejection_boundary(whole, q, cfg.tool, cfg.mode)])
        thresholds = tuple(
            critical_frequency(whole, combined, qs, run_result.n_splits).threshold_rfreq
            for qs in q_stars
        )
        for source, region, rfreq in (
            ("combined", combined, thresholds),
            ("whole", whole_region, None),
        ):
            rep = power_metrics(whole, region)
            x_lo, x_hi = region_bounds(region)
            points.append(PowerCurvePoint(
                source=source,
                q=float(q),
                x_lo=x_lo,
                x_hi=x_hi,
                power=rep.power,
                type_i=rep.type_i,
                type_ii=rep.type_ii,
                precision=rep.precision,
                fdr_o=rep.fdr_o,
                accuracy=rep.accuracy,
                crit_rfreq=rfreq,
            ))
    return tuple(points)
