"""Self-contained special functions and distribution kernels.

Everything here is pure, vectorized over numpy arrays, and carries its own
precision contract (stated per function) so no external math library is
needed. Scalars in, scalars out; arrays in, arrays out.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "log_gamma",
    "digamma",
    "trigamma",
    "reg_inc_beta",
    "log_beta",
    "student_t_cdf",
    "normal_cdf",
    "normal_tail",
    "nb_log_pmf",
]

_LN_SQRT_2PI = 0.9189385332046727417803297364056176
_INV_SQRT2 = 0.7071067811865475244008443621048490
_INV_SQRT_PI = 0.5641895835477562869480794515607726

# Lanczos approximation, g = 7, 9 terms. Relative error on Gamma itself is
# below 1e-13 over the positive axis.
_LANCZOS_G = 7.0
_LANCZOS_COEF = np.array([
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
])


def _wrap(x):
    a = np.asarray(x, dtype=np.float64)
    return a, a.ndim == 0


def _unwrap(a, scalar):
    return float(a) if scalar else a


def log_gamma(z):
    """ln Gamma(z) for z > 0.

    Relative error <= 1e-12 on [1e-3, 1e3] (absolute near the zeros of
    ln Gamma at z = 1 and z = 2).
    """
    if isinstance(z, (float, int)) and not isinstance(z, bool):
        # Scalar fast path, operation for operation the array computation.
        z = float(z)
        if not z > 0.0:
            raise ValueError("log_gamma requires z > 0")
        small = z < 0.5
        zz = 1.0 - z if small else z
        x = _LANCZOS_COEF[0]
        for i in range(1, 9):
            x = x + _LANCZOS_COEF[i] / (zz + i - 1.0)
        t = zz + _LANCZOS_G - 0.5
        main = _LN_SQRT_2PI + (zz - 0.5) * np.log(t) - t + np.log(x)
        if small:
            return float(np.log(np.pi / np.abs(np.sin(np.pi * z))) - main)
        return float(main)
    z, scalar = _wrap(z)
    if np.any(z <= 0.0) or np.any(np.isnan(z)):
        raise ValueError("log_gamma requires z > 0")
    small = z < 0.5
    # Reflection for z < 0.5 keeps the Lanczos sum in its accurate range.
    zz = np.where(small, 1.0 - z, z)
    x = np.full_like(zz, _LANCZOS_COEF[0])
    for i in range(1, 9):
        x = x + _LANCZOS_COEF[i] / (zz + i - 1.0)
    t = zz + _LANCZOS_G - 0.5
    main = _LN_SQRT_2PI + (zz - 0.5) * np.log(t) - t + np.log(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        refl = np.log(np.pi / np.abs(np.sin(np.pi * np.where(small, z, 0.5)))) - main
    return _unwrap(np.where(small, refl, main), scalar)


def log_beta(a, b):
    """ln B(a, b) = ln Gamma(a) + ln Gamma(b) - ln Gamma(a+b)."""
    return log_gamma(a) + log_gamma(b) - log_gamma(np.asarray(a, dtype=np.float64) + b)


def digamma(z):
    """psi(z) for z > 0, absolute error <= 1e-10 on [1e-3, 1e3].

    Upward recurrence to z >= 10, then the asymptotic Bernoulli series.
    """
    if isinstance(z, (float, int)) and not isinstance(z, bool):
        # Scalar fast path; mirrors the array arithmetic operation for
        # operation so results agree bitwise.
        z = float(z)
        if not z > 0.0:
            raise ValueError("digamma requires z > 0")
        acc = 0.0
        while z < 10.0:
            acc = acc - 1.0 / z
            z = z + 1.0
        inv2 = 1.0 / (z * z)
        series = inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 / 132.0))))
        return float(acc + np.log(z) - 0.5 / z - series)
    z, scalar = _wrap(z)
    if np.any(z <= 0.0) or np.any(np.isnan(z)):
        raise ValueError("digamma requires z > 0")
    z = z.copy()
    acc = np.zeros_like(z)
    for _ in range(10):
        mask = z < 10.0
        if not mask.any():
            break
        acc = np.where(mask, acc - 1.0 / z, acc)
        z = np.where(mask, z + 1.0, z)
    inv2 = 1.0 / (z * z)
    series = inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 / 132.0))))
    return _unwrap(acc + np.log(z) - 0.5 / z - series, scalar)


def trigamma(z):
    """psi'(z) for z > 0, absolute error <= 1e-8 on [1e-3, 1e3]."""
    if isinstance(z, (float, int)) and not isinstance(z, bool):
        z = float(z)
        if not z > 0.0:
            raise ValueError("trigamma requires z > 0")
        acc = 0.0
        while z < 10.0:
            acc = acc + 1.0 / (z * z)
            z = z + 1.0
        inv = 1.0 / z
        inv2 = inv * inv
        series = inv * (1.0 + inv * (0.5 + inv * (1.0 / 6.0 - inv2 * (1.0 / 30.0 - inv2 * (1.0 / 42.0 - inv2 / 30.0)))))
        return float(acc + series)
    z, scalar = _wrap(z)
    if np.any(z <= 0.0) or np.any(np.isnan(z)):
        raise ValueError("trigamma requires z > 0")
    z = z.copy()
    acc = np.zeros_like(z)
    for _ in range(10):
        mask = z < 10.0
        if not mask.any():
            break
        acc = np.where(mask, acc + 1.0 / (z * z), acc)
        z = np.where(mask, z + 1.0, z)
    inv = 1.0 / z
    inv2 = inv * inv
    series = inv * (1.0 + inv * (0.5 + inv * (1.0 / 6.0 - inv2 * (1.0 / 30.0 - inv2 * (1.0 / 42.0 - inv2 / 30.0)))))
    return _unwrap(acc + series, scalar)


def _betacf(x, a, b, max_iter=400, eps=3e-16):
    """Continued fraction for the incomplete beta, modified Lentz, vectorized.

    Assumes x < (a+1)/(a+b+2) elementwise (callers apply the symmetry switch).
    """
    tiny = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = np.ones_like(x)
    d = 1.0 - qab * x / qap
    d = np.where(np.abs(d) < tiny, tiny, d)
    d = 1.0 / d
    h = d.copy()
    done = np.zeros(x.shape, dtype=bool)
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < tiny, tiny, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < tiny, tiny, c)
        d = 1.0 / d
        h = np.where(done, h, h * d * c)
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < tiny, tiny, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < tiny, tiny, c)
        d = 1.0 / d
        delta = d * c
        h = np.where(done, h, h * delta)
        done |= np.abs(delta - 1.0) < eps
        if done.all():
            break
    return h


def _betacf_scalar(x, a, b, max_iter=400, eps=3e-16):
    tiny = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h = h * d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h = h * delta
        if abs(delta - 1.0) < eps:
            break
    return h


_LNBETA_CACHE = {}


def reg_inc_beta(x, a, b):
    """Regularized incomplete beta I_x(a, b), absolute error <= 1e-12.

    Parameters
    ----------
    x : array_like in [0, 1]
    a, b : array_like, positive shape parameters

    Continued fraction with the symmetry switch at x = (a+1)/(a+b+2), which
    keeps convergence uniform for shapes below 1.
    """
    if (
        isinstance(x, (float, int)) and not isinstance(x, bool)
        and isinstance(a, (float, int)) and not isinstance(a, bool)
        and isinstance(b, (float, int)) and not isinstance(b, bool)
    ):
        # Scalar fast path mirroring the array computation bitwise.
        x, a, b = float(x), float(a), float(b)
        if not (a > 0.0 and b > 0.0):
            raise ValueError("reg_inc_beta requires a > 0 and b > 0")
        if not 0.0 <= x <= 1.0:
            raise ValueError("reg_inc_beta requires 0 <= x <= 1")
        if x == 0.0:
            return 0.0
        if x == 1.0:
            return 1.0
        if x >= (a + 1.0) / (a + b + 2.0):
            xx, aa, bb, flip = 1.0 - x, b, a, True
        else:
            xx, aa, bb, flip = x, a, b, False
        # The shape pair rarely changes between calls (bisection loops hold
        # it fixed), so memoize the log-beta prefactor term.
        key = (aa, bb)
        lnbeta = _LNBETA_CACHE.get(key)
        if lnbeta is None:
            if len(_LNBETA_CACHE) >= 512:
                _LNBETA_CACHE.clear()
            lnbeta = log_gamma(aa) + log_gamma(bb) - log_gamma(aa + bb)
            _LNBETA_CACHE[key] = lnbeta
        front = np.exp(aa * np.log(xx) + bb * np.log1p(-xx) - lnbeta) / aa
        val = front * _betacf_scalar(xx, aa, bb)
        if flip:
            val = 1.0 - val
        return min(max(float(val), 0.0), 1.0)
    x, sx = _wrap(x)
    a, sa = _wrap(a)
    b, sb = _wrap(b)
    scalar = sx and sa and sb
    x, a, b = np.broadcast_arrays(x, a, b)
    x = np.array(x, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if np.any(a <= 0.0) or np.any(b <= 0.0):
        raise ValueError("reg_inc_beta requires a > 0 and b > 0")
    if np.any(x < 0.0) or np.any(x > 1.0) or np.any(np.isnan(x)):
        raise ValueError("reg_inc_beta requires 0 <= x <= 1")

    at0 = x == 0.0
    at1 = x == 1.0
    flip = x >= (a + 1.0) / (a + b + 2.0)
    xx = np.where(flip, 1.0 - x, x)
    aa = np.where(flip, b, a)
    bb = np.where(flip, a, b)
    # Interior points only; endpoints get exact 0/1 below.
    interior = ~(at0 | at1)
    xi = np.where(interior, xx, 0.5)
    with np.errstate(divide="ignore"):
        front = np.exp(
            aa * np.log(xi) + bb * np.log1p(-xi)
            - (log_gamma(aa) + log_gamma(bb) - log_gamma(aa + bb))
        ) / aa
    val = front * _betacf(xi, aa, bb)
    val = np.where(flip, 1.0 - val, val)
    out = np.where(at0, 0.0, np.where(at1, 1.0, val))
    return _unwrap(np.clip(out, 0.0, 1.0), scalar)


def student_t_cdf(t, df):
    """P(T <= t) for the central t distribution, error <= 1e-10.

    ``df`` must be a positive integer (broadcastable). Built on the
    incomplete beta so that cdf(t) + cdf(-t) rounds to exactly 1.
    """
    t, st = _wrap(t)
    df, sdf = _wrap(df)
    scalar = st and sdf
    t, df = np.broadcast_arrays(t, df)
    df = np.asarray(df, dtype=np.float64)
    if np.any(df < 1) or np.any(df != np.floor(df)):
        raise ValueError("student_t_cdf requires integer df >= 1")
    xib = df / (df + t * t)
    half_tail = 0.5 * reg_inc_beta(xib, 0.5 * df, 0.5)
    out = np.where(t >= 0.0, 1.0 - half_tail, half_tail)
    return _unwrap(out, scalar)


def _erf_small(u):
    # erf(u) = (2u/sqrt(pi)) e^{-u^2} sum (2u^2)^n / (2n+1)!!  -- all terms
    # positive, so there is no cancellation for u <= 2.
    s = np.ones_like(u)
    term = np.ones_like(u)
    tu2 = 2.0 * u * u
    for n in range(1, 60):
        term = term * tu2 / (2.0 * n + 1.0)
        s = s + term
        if np.all(term < 1e-18 * s):
            break
    return 2.0 * u * _INV_SQRT_PI * np.exp(-u * u) * s


def _erfc_cf(u):
    # erfc(u) = e^{-u^2}/(u sqrt(pi)) / (1 + q1/(1 + q2/(1 + ...))),
    # q_n = n / (2u^2). Modified Lentz; accurate for u >= 2.
    tiny = 1e-300
    half_inv_u2 = 0.5 / (u * u)
    c = np.full_like(u, 1e300)
    d = np.ones_like(u)
    h = np.ones_like(u)
    done = np.zeros(u.shape, dtype=bool)
    for n in range(1, 120):
        q = n * half_inv_u2
        d = 1.0 + q * d
        d = np.where(np.abs(d) < tiny, tiny, d)
        c = 1.0 + q / c
        c = np.where(np.abs(c) < tiny, tiny, c)
        d = 1.0 / d
        delta = c * d
        h = np.where(done, h, h * delta)
        done |= np.abs(delta - 1.0) < 1e-17
        if done.all():
            break
    with np.errstate(under="ignore"):
        return np.exp(-u * u) / (u * np.sqrt(np.pi)) * h


def _erfc_nonneg(u):
    """erfc(u) for u >= 0."""
    small = u <= 2.0
    us = np.where(small, u, 0.5)
    ul = np.where(small, 3.0, u)
    return np.where(small, 1.0 - _erf_small(us), _erfc_cf(ul))


def normal_cdf(z):
    """Standard normal Phi(z), absolute error <= 1e-12."""
    z, scalar = _wrap(z)
    u = np.abs(z) * _INV_SQRT2
    e = _erfc_nonneg(u)
    out = np.where(z >= 0.0, 0.5 * (2.0 - e), 0.5 * e)
    return _unwrap(out, scalar)


def normal_tail(z):
    """Upper tail 1 - Phi(z); normal_cdf(z) + normal_tail(z) = 1 to 1e-15."""
    z, scalar = _wrap(z)
    u = np.abs(z) * _INV_SQRT2
    e = _erfc_nonneg(u)
    out = np.where(z >= 0.0, 0.5 * e, 0.5 * (2.0 - e))
    return _unwrap(out, scalar)


def nb_log_pmf(k, mu, phi):
    """log P(K = k) for the negative binomial with mean mu, dispersion phi.

    Parameterized by the variance function mu + phi * mu^2 (size r = 1/phi).
    Evaluated fully in log space so extreme tails stay finite.
    """
    k, sk = _wrap(k)
    mu, sm = _wrap(mu)
    phi, sp = _wrap(phi)
    scalar = sk and sm and sp
    k, mu, phi = np.broadcast_arrays(k, mu, phi)
    k = np.asarray(k, dtype=np.float64)
    mu = np.asarray(mu, dtype=np.float64)
    phi = np.asarray(phi, dtype=np.float64)
    if np.any(k < 0) or np.any(k != np.floor(k)):
        raise ValueError("nb_log_pmf requires integer k >= 0")
    if np.any(mu <= 0.0) or np.any(phi <= 0.0):
        raise ValueError("nb_log_pmf requires mu > 0 and phi > 0")
    r = 1.0 / phi
    out = (
        log_gamma(k + r) - log_gamma(r) - log_gamma(k + 1.0)
        - r * np.log1p(mu / r) + k * (np.log(mu) - np.log(r + mu))
    )
    return _unwrap(out, scalar)
