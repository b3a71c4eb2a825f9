"""Seedable simulation designs used by the tests, demos, and benchmarks.

Three designs ship: a correlated-block continuous design with 30 planted
signals, a pure-null normal design, and a negative binomial count design
with a planted mean shift. Every generator returns the dataset together
with its ground-truth signal labels so downstream precision and recall
can be computed exactly.
"""

from dataclasses import dataclass, field

import numpy as np

from .stats import GROUP_CONTROL, GROUP_TREATMENT, Dataset

DESIGNS = ("table3_continuous", "null_normal", "nb_counts")

# Correlated feature blocks: (feature indices, treatment mean, control mean,
# correlation matrix). Both groups share the covariance; only means differ.
_BLOCKS = (
    ((0, 1), 7.0, 6.0, ((1.0, 0.8), (0.8, 1.0))),
    ((2, 3), 5.0, 6.0, ((1.0, -0.8), (-0.8, 1.0))),
    ((4, 5, 6), 7.5, 6.0, ((1.0, 0.75, 0.8), (0.75, 1.0, 0.9), (0.8, 0.9, 1.0))),
    ((7, 8, 9), 4.5, 6.0, ((1.0, -0.85, -0.9), (-0.85, 1.0, 0.61), (-0.9, 0.61, 1.0))),
)
_BLOCK_SCALE = 2.0


@dataclass(frozen=True)
class SimSpec:
    """Parameters of one simulated dataset.

    ``params`` carries design-specific knobs: ``variance_mode`` for the
    correlated design ("table" keeps variance 2 for the independent
    signal features, "text" uses variance 6), and ``mu0``/``mu1``/``phi``
    for the count design.
    """

    design: str
    n_control: int = 50
    n_treatment: int = 50
    n_features: int = 1000
    signal_count: int = 30
    seed: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.design not in DESIGNS:
            raise ValueError(f"unknown design {self.design!r}; expected one of {DESIGNS}")
        if self.n_control < 2 or self.n_treatment < 2:
            raise ValueError("each group needs at least two subjects")
        if not 0 <= self.signal_count <= self.n_features:
            raise ValueError("signal_count must lie in [0, n_features]")
        if self.design == "table3_continuous" and self.signal_count != 30:
            raise ValueError("the correlated design plants exactly 30 signals")
        if self.design == "null_normal" and self.signal_count != 0:
            raise ValueError("the null design has no signal features")
        mode = self.params.get("variance_mode", "table")
        if mode not in ("table", "text"):
            raise ValueError("variance_mode must be 'table' or 'text'")


def _pivoted_cholesky(cov):
    """Factor a PSD matrix as P L L' P'; returns (L, perm).

    Outer-product Cholesky with diagonal pivoting, so exactly semidefinite
    inputs factor cleanly (trailing columns of L stay zero) and indefinite
    ones are rejected instead of silently producing NaNs.
    """
    a = np.array(cov, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.size == 0:
        raise ValueError("covariance must be a nonempty square matrix")
    scale = max(1.0, float(np.max(np.abs(a))))
    if np.max(np.abs(a - a.T)) > 1e-10 * scale:
        raise ValueError("covariance must be symmetric")
    a = 0.5 * (a + a.T)
    n = a.shape[0]
    perm = np.arange(n)
    tol = 1e-10 * max(1.0, float(np.max(np.diag(a))), 0.0)
    for k in range(n):
        d = np.diagonal(a)
        j = k + int(np.argmax(d[k:]))
        if d[j] <= tol:
            if np.min(d[k:]) < -tol:
                raise ValueError("covariance is not positive semidefinite")
            a[k:, k:] = 0.0  # rank reached; later columns of L stay zero
            break
        if j != k:
            a[[k, j], :] = a[[j, k], :]
            a[:, [k, j]] = a[:, [j, k]]
            perm[[k, j]] = perm[[j, k]]
        piv = np.sqrt(a[k, k])
        a[k, k] = piv
        a[k + 1:, k] /= piv
        a[k + 1:, k + 1:] -= np.outer(a[k + 1:, k], a[k + 1:, k])
        a[k, k + 1:] = 0.0
    return np.tril(a), perm


def _mvn_block(mean, cov, rng, size):
    """``size`` correlated draws as a (size, dim) array."""
    mean = np.asarray(mean, dtype=np.float64)
    lower, perm = _pivoted_cholesky(cov)
    if mean.ndim != 1 or mean.size != lower.shape[0]:
        raise ValueError("mean length must match the covariance dimension")
    z = rng.standard_normal((size, mean.size))
    out = np.empty_like(z)
    out[:, perm] = z @ lower.T
    return out + mean


def mvn_sample(mean, cov, rng):
    """One multivariate normal draw with the given mean and PSD covariance."""
    return _mvn_block(mean, cov, rng, 1)[0]


def gen_table3(spec):
    """Correlated-block continuous design: 30 signals, the rest null.

    Features 1-10 (0-based 0-9) form four correlated blocks with shared
    covariance ``2 * C`` in both groups; features 11-30 are independent
    with treatment means drawn once per dataset from N(5,1) and N(7,1);
    everything else is N(6, variance 2) in both groups. variance_mode
    'text' widens the independent signal features to variance 6.
    """
    if spec.design != "table3_continuous":
        raise ValueError("spec.design must be 'table3_continuous'")
    if spec.n_features < 30:
        raise ValueError("the correlated design needs at least 30 features")
    mode = spec.params.get("variance_mode", "table")
    indep_sd = np.sqrt(2.0) if mode == "table" else np.sqrt(6.0)
    null_sd = np.sqrt(2.0)

    rng = np.random.default_rng(spec.seed)
    nc, nt, nf = spec.n_control, spec.n_treatment, spec.n_features
    mu_c1 = rng.normal(5.0, 1.0, 10)  # one mean per feature, drawn once
    mu_c2 = rng.normal(7.0, 1.0, 10)

    mat = np.empty((nf, nc + nt))
    for idx, mu_t, mu_c, corr in _BLOCKS:
        cov = _BLOCK_SCALE * np.asarray(corr)
        mat[np.ix_(idx, range(nc))] = _mvn_block([mu_c] * len(idx), cov, rng, nc).T
        mat[np.ix_(idx, range(nc, nc + nt))] = _mvn_block([mu_t] * len(idx), cov, rng, nt).T
    for block_row, mus in ((10, mu_c1), (20, mu_c2)):
        rows = slice(block_row, block_row + 10)
        mat[rows, :nc] = rng.normal(6.0, indep_sd, (10, nc))
        mat[rows, nc:] = rng.normal(mus[:, None], indep_sd, (10, nt))
    if nf > 30:
        mat[30:, :] = rng.normal(6.0, null_sd, (nf - 30, nc + nt))

    ds = _as_dataset(mat, nc, nt, "continuous")
    truth = tuple(i < 30 for i in range(nf))
    return ds, truth


def gen_null(spec):
    """Pure-null normal design: both groups i.i.d. N(6, sd 2)."""
    if spec.design != "null_normal":
        raise ValueError("spec.design must be 'null_normal'")
    rng = np.random.default_rng(spec.seed)
    nc, nt, nf = spec.n_control, spec.n_treatment, spec.n_features
    mat = rng.normal(6.0, 2.0, (nf, nc + nt))
    ds = _as_dataset(mat, nc, nt, "continuous")
    return ds, tuple(False for _ in range(nf))


def gen_nb(spec):
    """Negative binomial count design with a planted treatment mean shift.

    Controls are NB(mu0, phi) everywhere; the first ``signal_count``
    features get NB(mu1, phi) in the treatment group. Defaults follow
    the benchmark setup: mu0 = 1000, mu1 = 1500, phi = 0.5.
    """
    if spec.design != "nb_counts":
        raise ValueError("spec.design must be 'nb_counts'")
    mu0 = float(spec.params.get("mu0", 1000.0))
    mu1 = float(spec.params.get("mu1", 1500.0))
    phi = float(spec.params.get("phi", 0.5))
    if mu0 <= 0 or mu1 <= 0 or phi <= 0:
        raise ValueError("mu0, mu1, phi must all be positive")
    r = 1.0 / phi

    rng = np.random.default_rng(spec.seed)
    nc, nt, nf, ns = spec.n_control, spec.n_treatment, spec.n_features, spec.signal_count
    mat = np.empty((nf, nc + nt))
    mat[:, :nc] = rng.negative_binomial(r, r / (r + mu0), (nf, nc))
    if ns:
        mat[:ns, nc:] = rng.negative_binomial(r, r / (r + mu1), (ns, nt))
    mat[ns:, nc:] = rng.negative_binomial(r, r / (r + mu0), (nf - ns, nt))
    ds = _as_dataset(mat, nc, nt, "counts")
    return ds, tuple(i < ns for i in range(nf))


def generate(spec):
    """Dispatch to the generator named by ``spec.design``."""
    if spec.design == "table3_continuous":
        return gen_table3(spec)
    if spec.design == "null_normal":
        return gen_null(spec)
    return gen_nb(spec)


def _as_dataset(mat, nc, nt, kind):
    ids = tuple(f"f{i + 1:04d}" for i in range(mat.shape[0]))
    group = (GROUP_CONTROL,) * nc + (GROUP_TREATMENT,) * nt
    return Dataset(mat, group, ids, kind)
