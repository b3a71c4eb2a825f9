"""Per-feature two-group statistics feeding the screening layer.

Continuous data get a pooled-variance t statistic mapped through the exact
t CDF; count data get a negative binomial likelihood ratio with a
per-feature dispersion shared between the null and full models. Both paths
return values on [0, 1] that downstream code treats as mixture draws.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .special import digamma, normal_tail, student_t_cdf, trigamma

GROUP_CONTROL = "control"
GROUP_TREATMENT = "treatment"

# Search box for the NB size parameter r = 1/phi. Outside this range the
# fit is indistinguishable from the boundary model (Poisson on the high
# end), so the profile solver just pins r to the box edge.
_R_LO = 1e-8
_R_HI = 1e8


class DegenerateFeatureError(ValueError):
    """The requested statistic is undefined for this feature and subset.

    Raised for zero pooled variance in the t path and for an all-zero
    count group in the NB path. Callers running many features at once
    should catch this and drop the feature rather than abort the run.
    """


@dataclass(frozen=True, eq=False)
class Dataset:
    """A features-by-subjects matrix with group labels.

    ``matrix`` rows are features, columns subjects. ``group`` assigns every
    subject to ``control`` or ``treatment``. ``kind`` is ``continuous`` or
    ``counts``; count matrices must hold nonnegative integers. Instances
    are immutable (the matrix is a read-only copy) so they can be shared
    across worker processes without defensive copying.
    """

    matrix: np.ndarray
    group: tuple
    feature_ids: tuple
    kind: str
    control_mask: np.ndarray = field(init=False, repr=False)
    treatment_mask: np.ndarray = field(init=False, repr=False)
    _id_index: dict = field(init=False, repr=False)

    def __post_init__(self):
        if self.kind not in ("continuous", "counts"):
            raise ValueError("kind must be 'continuous' or 'counts'")
        mat = np.array(self.matrix, dtype=np.float64)
        if mat.ndim != 2 or mat.size == 0:
            raise ValueError("matrix must be a nonempty 2-d array")
        if not np.all(np.isfinite(mat)):
            raise ValueError("matrix values must be finite")
        if self.kind == "counts":
            if np.any(mat < 0.0) or np.any(mat != np.floor(mat)):
                raise ValueError("count matrices must hold integers >= 0")
        group = tuple(str(g) for g in self.group)
        if len(group) != mat.shape[1]:
            raise ValueError("one group label per subject is required")
        labels = set(group)
        if not labels <= {GROUP_CONTROL, GROUP_TREATMENT}:
            raise ValueError(f"unknown group labels: {sorted(labels - {GROUP_CONTROL, GROUP_TREATMENT})}")
        cmask = np.array([g == GROUP_CONTROL for g in group], dtype=bool)
        tmask = ~cmask
        if cmask.sum() < 2 or tmask.sum() < 2:
            raise ValueError("each group needs at least two subjects")
        ids = tuple(str(f) for f in self.feature_ids)
        if len(ids) != mat.shape[0]:
            raise ValueError("one feature id per matrix row is required")
        if len(set(ids)) != len(ids):
            raise ValueError("feature ids must be unique")
        mat.setflags(write=False)
        cmask.setflags(write=False)
        tmask.setflags(write=False)
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "group", group)
        object.__setattr__(self, "feature_ids", ids)
        object.__setattr__(self, "control_mask", cmask)
        object.__setattr__(self, "treatment_mask", tmask)
        object.__setattr__(self, "_id_index", {f: i for i, f in enumerate(ids)})

    @property
    def n_features(self):
        return self.matrix.shape[0]

    @property
    def n_subjects(self):
        return self.matrix.shape[1]

    def feature_index(self, feature_id):
        try:
            return self._id_index[feature_id]
        except KeyError:
            raise KeyError(f"unknown feature id: {feature_id!r}") from None


def _group_columns(dataset, subjects):
    """Split a subject subset into control and treatment column indices."""
    if subjects is None:
        idx = np.arange(dataset.n_subjects)
    else:
        idx = np.asarray(subjects, dtype=np.intp)
        if idx.ndim != 1 or idx.size == 0:
            raise ValueError("subjects must be a nonempty 1-d index sequence")
        if np.any(idx < 0) or np.any(idx >= dataset.n_subjects):
            raise ValueError("subject index out of range")
        if np.unique(idx).size != idx.size:
            raise ValueError("subject indices must be distinct")
    ic = idx[dataset.control_mask[idx]]
    it = idx[~dataset.control_mask[idx]]
    if ic.size < 2 or it.size < 2:
        raise ValueError("subset must keep at least two subjects per group")
    return ic, it


def _pooled_t(yc, yt):
    # fsum is exactly rounded, so reordering subjects inside a group cannot
    # move the result, and swapping the labels flips the numerator's sign
    # bit for bit (the pooled sum of squares is a commutative float add).
    nc = yc.size
    nt = yt.size
    mc = math.fsum(yc) / nc
    mt = math.fsum(yt) / nt
    ss = math.fsum((yc - mc) ** 2) + math.fsum((yt - mt) ** 2)
    pooled = ss / (nc + nt - 2)
    if pooled == 0.0:
        raise DegenerateFeatureError("zero pooled variance")
    return (mc - mt) / math.sqrt(pooled * (1.0 / nc + 1.0 / nt))


def t_lta_batch(dataset, subjects=None):
    """Left tail areas of the pooled t statistic for every feature.

    Returns ``(x, ok)`` where ``x[i]`` is the tail area of feature ``i``
    (NaN when undefined) and ``ok[i]`` flags whether the statistic exists.
    The t statistic is (control mean - treatment mean) on ``df = nc+nt-2``,
    so treatment-elevated features land near 0 and suppressed ones near 1.
    """
    ic, it = _group_columns(dataset, subjects)
    yc = dataset.matrix[:, ic]
    yt = dataset.matrix[:, it]
    nf = dataset.n_features
    tvals = np.zeros(nf)
    ok = np.ones(nf, dtype=bool)
    for i in range(nf):
        try:
            tvals[i] = _pooled_t(yc[i], yt[i])
        except DegenerateFeatureError:
            ok[i] = False
    x = student_t_cdf(tvals, ic.size + it.size - 2)
    x = np.where(ok, x, np.nan)
    return x, ok


def two_sample_t_lta(dataset, feature_id, subjects=None):
    """Tail area for one feature; raises DegenerateFeatureError when flat."""
    row = dataset.feature_index(feature_id)
    ic, it = _group_columns(dataset, subjects)
    t = _pooled_t(dataset.matrix[row, ic], dataset.matrix[row, it])
    return float(student_t_cdf(t, ic.size + it.size - 2))


def _nb_score_terms(y, mu, r):
    """Profile score dL/dr and its r-derivative, summed over subjects.

    ``y`` and ``mu`` are (features, subjects); ``r`` is (features,). The
    group means are the mu-MLEs for any fixed r, so only r is profiled.
    """
    rc = r[:, None]
    n = y.shape[1]
    rm = rc + mu
    score = (
        digamma(y + rc).sum(axis=1) - n * digamma(r) + n * np.log(r)
        - np.log(rm).sum(axis=1) + ((mu - y) / rm).sum(axis=1)
    )
    dscore = (
        trigamma(y + rc).sum(axis=1) - n * trigamma(r) + n / r
        - (1.0 / rm).sum(axis=1) - ((mu - y) / rm ** 2).sum(axis=1)
    )
    return score, dscore


def _profile_size(y, mu):
    """Maximize the NB log likelihood over the size r for each feature row.

    Newton in u = log r with a bisection safeguard; the bracket is the
    fixed box [_R_LO, _R_HI]. When the score does not change sign inside
    the box the likelihood is monotone there and the edge is the MLE
    (the high edge is the Poisson limit for underdispersed rows).
    """
    nf = y.shape[0]
    ulo = np.full(nf, np.log(_R_LO))
    uhi = np.full(nf, np.log(_R_HI))
    r_hat = np.empty(nf)
    slo, _ = _nb_score_terms(y, mu, np.full(nf, _R_LO))
    shi, _ = _nb_score_terms(y, mu, np.full(nf, _R_HI))
    pin_hi = shi > 0.0
    pin_lo = ~pin_hi & (slo < 0.0)
    r_hat[pin_hi] = _R_HI
    r_hat[pin_lo] = _R_LO
    active = ~(pin_hi | pin_lo)

    # Moment start: sum (y - mu)^2 ~ sum mu + phi * sum mu^2.
    resid = ((y - mu) ** 2).sum(axis=1)
    phi0 = (resid - mu.sum(axis=1)) / np.maximum((mu ** 2).sum(axis=1), 1e-300)
    r0 = 1.0 / np.clip(phi0, 1e-6, 1e6)
    u = np.clip(np.log(r0), ulo + 1e-9, uhi - 1e-9)
    # Rows drop out of the working set as they settle; each row's update
    # sequence is unchanged by the shrinking, the loop just stops paying
    # the digamma bill for rows that are already done.
    idx = np.flatnonzero(active)
    u_act, lo_act, hi_act = u[idx], ulo[idx], uhi[idx]
    y_act, mu_act = y[idx], mu[idx]
    with np.errstate(all="ignore"):
        for _ in range(80):
            if idx.size == 0:
                break
            r = np.exp(u_act)
            s, ds = _nb_score_terms(y_act, mu_act, r)
            above = s > 0.0
            lo_act = np.where(above, u_act, lo_act)
            hi_act = np.where(above, hi_act, u_act)
            gu = ds * r
            step = np.where(gu < 0.0, -s / gu, np.nan)
            unew = u_act + step
            bad = ~np.isfinite(unew) | (unew <= lo_act) | (unew >= hi_act)
            unew = np.where(bad, 0.5 * (lo_act + hi_act), unew)
            settled = (np.abs(unew - u_act) < 1e-12) | (hi_act - lo_act < 1e-12)
            u_act = unew
            u[idx] = u_act
            if settled.any():
                keep = ~settled
                idx = idx[keep]
                u_act, lo_act, hi_act = u_act[keep], lo_act[keep], hi_act[keep]
                y_act, mu_act = y_act[keep], mu_act[keep]
    interior = ~(pin_hi | pin_lo)
    r_hat[interior] = np.exp(u[interior])
    return r_hat


def nb_lr_batch(dataset, subjects=None):
    """NB likelihood-ratio p-values for every feature of a count dataset.

    The full model gives each group its own mean; the null shares one.
    Both are evaluated at the dispersion fitted under the full model, so
    the ratio is nonnegative by nesting and the gamma terms cancel from
    the difference. Returns ``(p, ok)`` in the same shape as t_lta_batch.
    """
    if dataset.kind != "counts":
        raise ValueError("nb_lr_batch needs a counts dataset")
    ic, it = _group_columns(dataset, subjects)
    yc = dataset.matrix[:, ic]
    yt = dataset.matrix[:, it]
    nc, nt = ic.size, it.size
    # counts are integers, so these sums are exact in float64
    tc = yc.sum(axis=1)
    tt = yt.sum(axis=1)
    muc = tc / nc
    mut = tt / nt
    mu0 = (tc + tt) / (nc + nt)
    ok = (muc > 0.0) & (mut > 0.0)

    nf = dataset.n_features
    pvals = np.full(nf, np.nan)
    if ok.any():
        y = np.concatenate([yc[ok], yt[ok]], axis=1)
        mu_full = np.concatenate(
            [np.repeat(muc[ok, None], nc, axis=1), np.repeat(mut[ok, None], nt, axis=1)],
            axis=1,
        )
        r = _profile_size(y, mu_full)
        rc = r[:, None]
        m0 = mu0[ok, None]
        lr = 2.0 * (
            y * (np.log(mu_full) - np.log(m0))
            - (y + rc) * (np.log(rc + mu_full) - np.log(rc + m0))
        ).sum(axis=1)
        pvals[ok] = chi2_1_upper_tail(np.maximum(lr, 0.0))
    return pvals, ok


def nb_lr_pvalue(dataset, feature_id, subjects=None):
    """LR p-value for one feature; raises DegenerateFeatureError on all-zero groups."""
    row = dataset.feature_index(feature_id)
    sub = Dataset(
        dataset.matrix[row:row + 1],
        dataset.group,
        (dataset.feature_ids[row],),
        dataset.kind,
    )
    p, ok = nb_lr_batch(sub, subjects)
    if not ok[0]:
        raise DegenerateFeatureError("a group has all-zero counts")
    return float(p[0])


def chi2_1_upper_tail(x):
    """P(X > x) for chi-square with one degree of freedom.

    Uses the normal relation P(chi2_1 > x) = 2 P(Z > sqrt(x)), which stays
    accurate far into the tail.
    """
    arr = np.asarray(x, dtype=np.float64)
    if np.any(arr < 0.0):
        raise ValueError("chi-square tail requires x >= 0")
    out = 2.0 * normal_tail(np.sqrt(arr))
    return float(out) if arr.ndim == 0 else out
