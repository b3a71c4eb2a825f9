"""Two-point uniform-beta mixture: EM fitting and the tail-adjusted form.

The raw fit is ``f(x) = p0* + p1* beta_pdf(x; alpha, beta)``. The adjusted
form splits the beta component at density 1: the part below 1 is absorbed
into the background, the excess above 1 becomes the signal density after
normalizing by its mass ``a11``. All distribution functions of the adjusted
model are closed-form in the beta CDF, so no quadrature is needed anywhere
downstream.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .special import digamma, log_beta, reg_inc_beta, trigamma

__all__ = [
    "MixtureFit",
    "AdjustedMixture",
    "fit_uniform_beta",
    "tail_adjust",
    "eval_pdf",
    "eval_cdf",
]

# Data entering likelihoods is clamped away from {0, 1}: the beta density
# diverges at an endpoint whenever a shape parameter is below 1.
CLAMP_EPS = 1e-10
_SHAPE_LO = 1e-8
_SHAPE_HI = 1e8


@dataclass(frozen=True)
class MixtureFit:
    """Raw EM fit of uniform weight p0*, beta weight p1* and shapes."""

    p0_star: float
    p1_star: float
    alpha: float
    beta: float
    loglik: float
    iterations: int
    converged: bool
    loglik_trace: tuple = field(default=(), repr=False, compare=False)


@dataclass(frozen=True)
class AdjustedMixture:
    """Rearranged fit with the above-1 beta excess as the signal component.

    ``crossings`` are the points where the beta density equals 1.
    ``excess`` lists the (lo, hi) intervals where it exceeds 1, and
    ``excess_compl`` carries the same intervals as distances from 1
    ((1-hi, 1-lo)) at full relative precision for upper-tail arithmetic.
    """

    p0_hat: float
    p1_hat: float
    source: MixtureFit
    crossings: tuple
    a11: float
    excess: tuple = ()
    excess_compl: tuple = ()


def _beta_logpdf(x, a, b, lb=None):
    if lb is None:
        lb = log_beta(a, b)
    return (a - 1.0) * np.log(x) + (b - 1.0) * np.log1p(-x) - lb


def _moment_init(x):
    """Shape init from the pooled extreme deciles, method of moments."""
    q10, q90 = np.quantile(x, [0.1, 0.9])
    ext = x[(x <= q10) | (x >= q90)]
    m = float(np.mean(ext))
    v = float(np.var(ext))
    if v <= 1e-12 or not 0.0 < m < 1.0:
        return 0.5, 0.5
    t = m * (1.0 - m) / v - 1.0
    if t <= 1e-6:
        t = 1e-6
    return float(np.clip(m * t, 0.02, 50.0)), float(np.clip((1.0 - m) * t, 0.02, 50.0))


def _solve_shape_1d(other, s):
    """Bisection for one weighted-MLE score equation at fixed other shape.

    Solves psi(a) - psi(a + other) = s in a (monotone increasing, root
    always exists for s < 0).
    """
    lo, hi = _SHAPE_LO, _SHAPE_HI

    def f(v):
        return digamma(v) - digamma(v + other) - s

    if f(hi) <= 0.0:
        return hi
    if f(lo) >= 0.0:
        return lo
    for _ in range(200):
        mid = np.sqrt(lo * hi)
        if f(mid) < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * hi:
            break
    return np.sqrt(lo * hi)


def _weighted_beta_mle(s1, s2, a0, b0):
    """Solve the weighted beta score system for (alpha, beta).

    psi(a) - psi(a+b) = s1 and psi(b) - psi(a+b) = s2. Damped Newton in log
    parameters with a coordinate-bisection fallback; the system is smooth
    but stiff for shapes far below 1.
    """
    a = float(np.clip(a0, _SHAPE_LO, _SHAPE_HI))
    b = float(np.clip(b0, _SHAPE_LO, _SHAPE_HI))

    def resid(aa, bb):
        d = digamma(aa + bb)
        return digamma(aa) - d - s1, digamma(bb) - d - s2

    r1, r2 = resid(a, b)
    norm = max(abs(r1), abs(r2))
    for _ in range(100):
        if norm < 1e-12:
            return a, b
        tg = trigamma(a + b)
        j11 = (trigamma(a) - tg) * a
        j12 = -tg * b
        j21 = -tg * a
        j22 = (trigamma(b) - tg) * b
        det = j11 * j22 - j12 * j21
        if abs(det) < 1e-300:
            break
        du = -(j22 * r1 - j12 * r2) / det
        dv = -(-j21 * r1 + j11 * r2) / det
        step = max(abs(du), abs(dv))
        if step > 5.0:
            du, dv = du * 5.0 / step, dv * 5.0 / step
        lam, improved = 1.0, False
        for _ in range(40):
            an = float(np.clip(a * np.exp(lam * du), _SHAPE_LO, _SHAPE_HI))
            bn = float(np.clip(b * np.exp(lam * dv), _SHAPE_LO, _SHAPE_HI))
            n1, n2 = resid(an, bn)
            if max(abs(n1), abs(n2)) < norm:
                a, b, r1, r2 = an, bn, n1, n2
                norm = max(abs(r1), abs(r2))
                improved = True
                break
            lam *= 0.5
        if not improved:
            break
    # Fallback: alternate exact 1-D solves; each is monotone so this
    # converges linearly even where Newton stalls.
    for _ in range(200):
        a_new = _solve_shape_1d(b, s1)
        b_new = _solve_shape_1d(a_new, s2)
        moved = max(abs(a_new - a) / a_new, abs(b_new - b) / b_new)
        a, b = a_new, b_new
        if moved < 1e-12:
            break
    return a, b


def fit_uniform_beta(data, max_iter=2000, tol=1e-8, init=None):
    """EM fit of the two-point uniform-beta mixture.

    Parameters
    ----------
    data : array_like of values in [0, 1], length >= 50
    max_iter, tol : EM stopping rule, |delta loglik| < tol
    init : optional (p1, alpha, beta) starting point; default is p1 = 0.1
        with shapes from method-of-moments on the pooled extreme deciles.

    Returns
    -------
    MixtureFit with ``converged`` False when the iteration cap is hit.
    """
    x = np.asarray(data, dtype=np.float64).ravel()
    if x.size < 50:
        raise ValueError(f"need at least 50 data points, got {x.size}")
    if np.any(x < 0.0) or np.any(x > 1.0) or np.any(np.isnan(x)):
        raise ValueError("data must lie in [0, 1]")
    x = np.clip(x, CLAMP_EPS, 1.0 - CLAMP_EPS)
    n = x.size
    lx = np.log(x)
    l1x = np.log1p(-x)

    if init is not None:
        p1, a, b = float(init[0]), float(init[1]), float(init[2])
    else:
        p1 = 0.1
        a, b = _moment_init(x)

    trace = []
    prev = -np.inf
    converged = False
    iterations = 0
    for it in range(1, max_iter + 1):
        iterations = it
        lb = log_beta(a, b)
        f1 = np.exp((a - 1.0) * lx + (b - 1.0) * l1x - lb)
        dens = (1.0 - p1) + p1 * f1
        ll = float(np.sum(np.log(dens)))
        trace.append(ll)
        if abs(ll - prev) < tol:
            converged = True
            break
        prev = ll
        w = p1 * f1 / dens
        sw = float(np.sum(w))
        p1 = min(max(sw / n, 0.0), 1.0)
        if sw > 1e-10:
            s1 = float(np.dot(w, lx) / sw)
            s2 = float(np.dot(w, l1x) / sw)
            a, b = _weighted_beta_mle(s1, s2, a, b)
    return MixtureFit(
        p0_star=1.0 - p1,
        p1_star=p1,
        alpha=a,
        beta=b,
        loglik=trace[-1],
        iterations=iterations,
        converged=converged,
        loglik_trace=tuple(trace),
    )


def _glog(a, b, lb, x, c):
    """log beta_pdf - lb at a point carried as the pair (x, 1-x).

    Terms with a unit shape are dropped so saturated coordinates (x or c
    rounded to 0/1) cannot produce 0 * inf.
    """
    g = -lb
    if a != 1.0:
        g += (a - 1.0) * np.log(x)
    if b != 1.0:
        g += (b - 1.0) * np.log(c)
    return g


def _root_between(a, b, lb, lo_pt, hi_pt):
    """Root of log beta_pdf = lb between two points given as (x, 1-x) pairs.

    Bisects in ln x when the bracket sits left of 1/2 and in ln(1-x) when it
    sits right of it (a straddling bracket is first cut at 1/2), so a root
    arbitrarily close to either endpoint keeps full relative precision in
    its nearest coordinate. Returns the root as an (x, 1-x) pair, or None
    when the bracket does not change sign.
    """
    glo = _glog(a, b, lb, lo_pt[0], lo_pt[1])
    ghi = _glog(a, b, lb, hi_pt[0], hi_pt[1])
    if glo == 0.0:
        return lo_pt
    if ghi == 0.0:
        return hi_pt
    if (glo > 0.0) == (ghi > 0.0):
        return None
    if lo_pt[0] < 0.5 < hi_pt[0]:
        gm = _glog(a, b, lb, 0.5, 0.5)
        if gm == 0.0:
            return 0.5, 0.5
        if (gm > 0.0) == (glo > 0.0):
            lo_pt, glo = (0.5, 0.5), gm
        else:
            hi_pt, ghi = (0.5, 0.5), gm

    from_left = hi_pt[0] <= 0.5
    if from_left:
        tlo, thi = np.log(max(lo_pt[0], 1e-300)), np.log(hi_pt[0])
        ganchor = glo
    else:
        # Complement coordinate: s = ln(1-x) runs from the high end down.
        tlo, thi = np.log(max(hi_pt[1], 1e-300)), np.log(lo_pt[1])
        ganchor = ghi
    for _ in range(200):
        if thi - tlo <= 1e-13 * max(1.0, abs(thi)):
            break
        mid = 0.5 * (tlo + thi)
        if from_left:
            gm = _glog(a, b, lb, np.exp(mid), -np.expm1(mid))
        else:
            gm = _glog(a, b, lb, -np.expm1(mid), np.exp(mid))
        if (gm > 0.0) == (ganchor > 0.0):
            tlo = mid
        else:
            thi = mid
    t = 0.5 * (tlo + thi)
    if from_left:
        return float(np.exp(t)), float(-np.expm1(t))
    return float(-np.expm1(t)), float(np.exp(t))


def tail_adjust(fit: MixtureFit) -> AdjustedMixture:
    """Rearrange a MixtureFit into the adjusted background/signal form.

    Crossings of the beta density with 1 are bracketed by shape class and
    bisected on the log density; the excess mass a11 is assembled in closed
    form from the beta CDF over each interval where the density exceeds 1.
    """
    a, b = fit.alpha, fit.beta
    if a == 1.0 and b == 1.0:
        return AdjustedMixture(1.0, 0.0, fit, (), 0.0)
    lb = log_beta(a, b)

    # Endpoints carried as (x, 1-x) pairs with a 1e-300 inset standing in
    # for the exact endpoint; the stationary point splits the two-crossing
    # classes, with its complement computed directly to avoid cancellation.
    left_end = (1e-300, 1.0)
    right_end = (1.0, 1e-300)
    if a < 1.0 and b < 1.0:
        den = 2.0 - a - b
        mid_pt = ((1.0 - a) / den, (1.0 - b) / den)
        brackets = [(left_end, mid_pt), (mid_pt, right_end)]
    elif a > 1.0 and b > 1.0:
        den = a + b - 2.0
        mid_pt = ((a - 1.0) / den, (b - 1.0) / den)
        brackets = [(left_end, mid_pt), (mid_pt, right_end)]
    else:
        # Strictly monotone density: at most one crossing.
        brackets = [(left_end, right_end)]

    roots = []
    for lo_pt, hi_pt in brackets:
        r = _root_between(a, b, lb, lo_pt, hi_pt)
        if r is not None:
            roots.append(r)
    roots.sort(key=lambda rc: rc[0])
    crossings = tuple(r[0] for r in roots)

    # Partition (0, 1) by the crossings and keep the cells where the
    # density exceeds 1; cell membership is decided at an interior probe.
    # The probe keeps x and 1-x as separate coordinates so cells hugging
    # either endpoint are classified at full precision.
    edges = [(0.0, 1.0)] + list(roots) + [(1.0, 0.0)]
    excess, excess_c = [], []
    for (x0, c0), (x1, c1) in zip(edges[:-1], edges[1:]):
        px = 0.5 * (x0 + x1)
        pc = 0.5 * (c0 + c1)
        if px <= 0.0 or pc <= 0.0:
            continue
        g = -lb
        if a != 1.0:
            g += (a - 1.0) * np.log(px)
        if b != 1.0:
            g += (b - 1.0) * np.log(pc)
        if g > 0.0:
            excess.append((x0, x1))
            excess_c.append((c1, c0))

    a11 = 0.0
    for lo, hi in excess:
        contrib = float(reg_inc_beta(hi, a, b) - reg_inc_beta(lo, a, b)) - (hi - lo)
        a11 += max(contrib, 0.0)
    if a11 <= 0.0 or not excess:
        return AdjustedMixture(1.0, 0.0, fit, crossings, 0.0)
    p1_hat = fit.p1_star * a11
    return AdjustedMixture(
        p0_hat=1.0 - p1_hat,
        p1_hat=p1_hat,
        source=fit,
        crossings=crossings,
        a11=a11,
        excess=tuple(excess),
        excess_compl=tuple(excess_c),
    )


def _pdf_pieces(adj: AdjustedMixture, x):
    fit = adj.source
    x = np.clip(np.asarray(x, dtype=np.float64), CLAMP_EPS, 1.0 - CLAMP_EPS)
    f1s = np.exp(_beta_logpdf(x, fit.alpha, fit.beta))
    return x, f1s


def eval_pdf(adj: AdjustedMixture, x, which="mixture"):
    """Pointwise density of the adjusted model.

    ``which`` is one of ``"f0_hat"``, ``"f1_hat"``, ``"mixture"``. Inputs at
    exactly 0 or 1 are evaluated at the clamped endpoint.
    """
    scalar = np.ndim(x) == 0
    _, f1s = _pdf_pieces(adj, x)
    fit = adj.source
    if which == "f1_hat":
        if adj.a11 == 0.0:
            out = np.zeros_like(f1s)
        else:
            out = np.maximum(f1s - 1.0, 0.0) / adj.a11
    elif which == "f0_hat":
        out = (fit.p0_star + fit.p1_star * np.minimum(f1s, 1.0)) / adj.p0_hat
    elif which == "mixture":
        f0 = (fit.p0_star + fit.p1_star * np.minimum(f1s, 1.0)) / adj.p0_hat
        if adj.a11 == 0.0:
            f1 = np.zeros_like(f1s)
        else:
            f1 = np.maximum(f1s - 1.0, 0.0) / adj.a11
        out = adj.p0_hat * f0 + adj.p1_hat * f1
    else:
        raise ValueError(f"unknown density {which!r}")
    return float(out) if scalar else out


def _excess_below(adj: AdjustedMixture, t):
    """Excess beta mass above density 1 restricted to [0, t], elementwise."""
    fit = adj.source
    out = t * 0.0  # float in, float out; keeps the scalar fast path warm
    for lo, hi in adj.excess:
        tt = np.clip(t, lo, hi)
        ib = reg_inc_beta(tt, fit.alpha, fit.beta) - reg_inc_beta(lo, fit.alpha, fit.beta)
        out = out + np.maximum(ib - (tt - lo), 0.0)
    return out


def _excess_above(adj: AdjustedMixture, delta):
    """Excess mass restricted to (1-delta, 1], computed in the complement
    coordinate for full relative precision near 1."""
    fit = adj.source
    out = delta * 0.0
    for dlo, dhi in adj.excess_compl:
        td = np.clip(delta, dlo, dhi)
        ib = reg_inc_beta(td, fit.beta, fit.alpha) - reg_inc_beta(dlo, fit.beta, fit.alpha)
        out = out + np.maximum(ib - (td - dlo), 0.0)
    return out


def eval_cdf(adj: AdjustedMixture, x, which="F_mixture"):
    """Closed-form CDFs of the adjusted model at x in [0, 1].

    ``which`` is one of ``"F0_hat"``, ``"F1_hat"``, ``"F_mixture"``.
    """
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise ValueError("cdf argument must lie in [0, 1]")
    fit = adj.source
    ib = reg_inc_beta(x, fit.alpha, fit.beta)
    if which == "F_mixture":
        out = fit.p0_star * x + fit.p1_star * ib
    elif which == "F1_hat":
        if adj.a11 == 0.0:
            out = np.zeros_like(x)
        else:
            out = np.clip(_excess_below(adj, x) / adj.a11, 0.0, 1.0)
    elif which == "F0_hat":
        exc = _excess_below(adj, x) if adj.a11 > 0.0 else np.zeros_like(x)
        out = np.clip((fit.p0_star * x + fit.p1_star * (ib - exc)) / adj.p0_hat, 0.0, 1.0)
    else:
        raise ValueError(f"unknown distribution {which!r}")
    return float(out) if scalar else out


def eval_upper_cdf(adj: AdjustedMixture, delta, which="F_mixture"):
    """Complement CDFs 1 - F(1 - delta), evaluated directly in delta.

    Used by the screening layer so extreme right-tail masses keep full
    relative precision instead of cancelling against 1.
    """
    scalar = np.ndim(delta) == 0
    delta = np.asarray(delta, dtype=np.float64)
    if np.any(delta < 0.0) or np.any(delta > 1.0):
        raise ValueError("tail argument must lie in [0, 1]")
    fit = adj.source
    ib = reg_inc_beta(delta, fit.beta, fit.alpha)
    if which == "F_mixture":
        out = fit.p0_star * delta + fit.p1_star * ib
    elif which == "F1_hat":
        if adj.a11 == 0.0:
            out = np.zeros_like(delta)
        else:
            out = np.clip(_excess_above(adj, delta) / adj.a11, 0.0, 1.0)
    elif which == "F0_hat":
        exc = _excess_above(adj, delta) if adj.a11 > 0.0 else np.zeros_like(delta)
        out = np.clip((fit.p0_star * delta + fit.p1_star * (ib - exc)) / adj.p0_hat, 0.0, 1.0)
    else:
        raise ValueError(f"unknown distribution {which!r}")
    return float(out) if scalar else out
