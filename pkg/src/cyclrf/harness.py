"""Monte Carlo experiments: field path, oracle path, normality checks, convergence tables.

Every replication ``i`` draws from its own stream keyed by ``(seed, i)``, and
results are stored by index and aggregated with exact summation, so reports
do not depend on the number of worker threads.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import math
import time

import numpy as np
from scipy import special as sp

from .errors import CyclrfError, ModelError, TooFewSamples
from .fieldsim import rng_stream, simulate
from .functionals import (Quadrature, convergence_R, convergence_S, functional_I, normalization_constants,
                          normalize, oracle_matrix)
from .limits import cholesky_factor, limit_variance
from .spectrum import Envelope, SpectralModel
from .weights import make_donsker, make_gaussian

KS_TERMS = 100


# ---------------------------------------------------------------- statistics

def kolmogorov_sf(x):
    """``P(K > x)`` for the Kolmogorov distribution (100-term series)."""
    if x <= 0:
        return 1.0
    k = np.arange(1, KS_TERMS + 1)
    if x < 1.0:
        # theta-function form converges fast for small x
        cdf = math.sqrt(2.0 * math.pi) / x * np.sum(np.exp(-((2 * k - 1) ** 2) * math.pi**2 / (8.0 * x * x)))
        return float(min(1.0, max(0.0, 1.0 - cdf)))
    terms = 2.0 * (-1.0) ** (k - 1) * np.exp(-2.0 * k * k * x * x)
    return float(min(1.0, max(0.0, math.fsum(terms))))


def ks_test(samples, cdf):
    """One-sample Kolmogorov-Smirnov test; returns (statistic, asymptotic p-value)."""
    x = np.sort(np.asarray(samples, dtype=float))
    M = x.size
    if M < 8:
        raise TooFewSamples(f"KS test needs at least 8 samples, got {M}")
    F = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, M + 1)
    D = float(max(np.max(i / M - F), np.max(F - (i - 1) / M)))
    return D, kolmogorov_sf(math.sqrt(M) * D)


def normal_cdf(sd):
    return lambda x: sp.ndtr(np.asarray(x) / sd)


def normal_quantile(sd):
    return lambda p: sd * sp.ndtri(np.asarray(p))


def qq_points(samples, quantile):
    """(theoretical, empirical) pairs at plotting positions (i - 0.5)/M."""
    x = np.sort(np.asarray(samples, dtype=float))
    if x.size == 0:
        raise ValueError("qq_points needs at least one sample")
    p = (np.arange(1, x.size + 1) - 0.5) / x.size
    return np.column_stack([np.asarray(quantile(p), dtype=float), x])


def _mean_var(col):
    M = col.size
    mean = math.fsum(col) / M
    var = math.fsum((col - mean) ** 2) / (M - 1)
    return mean, var


# ---------------------------------------------------------------- convergence

@dataclass
class ConvergenceTable:
    rows: list  # (r, t, R, S, R_err, S_err); S entries nan when j = 0
    trend: object = None  # None when no trend is asserted, else bool(last < first) for every column

    @property
    def decreasing(self):
        """Strict decrease of every populated column along the ladder."""
        cols = [np.array([row[2] for row in self.rows])]
        if not math.isnan(self.rows[0][3]):
            cols.append(np.array([row[3] for row in self.rows]))
        return all(bool(np.all(np.diff(c) < 0)) for c in cols)


def convergence_study(model, w, consts, r_ladder, t=1.0, rtol=1e-8):
    """Tabulate ``R_r(t)`` (and ``S_r(t)`` when j != 0) along an increasing ladder.

    ``trend`` is ``last < first`` for each column; it is not asserted for a
    single-rung ladder or when the first value does not exceed its error
    estimate (Q vanishes up to rounding).
    """
    ladder = [float(r) for r in r_ladder]
    if any(b <= a for a, b in zip(ladder, ladder[1:])):
        raise ValueError("r ladder must be increasing")
    rows = []
    for r in ladder:
        R = convergence_R(model, w, consts, r, t, rtol=rtol)
        if consts.j != 0:
            S = convergence_S(model, w, consts, r, t, rtol=rtol)
            rows.append((r, float(t), R.value, S.value, R.error, S.error))
        else:
            rows.append((r, float(t), R.value, math.nan, R.error, math.nan))
    trend = None
    if len(rows) > 1 and rows[0][2] > rows[0][4]:
        trend = rows[-1][2] < rows[0][2]
        if consts.j != 0:
            trend = trend and rows[-1][3] < rows[0][3]
    return ConvergenceTable(rows, trend)


# ---------------------------------------------------------------- experiments

@dataclass
class ExperimentConfig:
    model: SpectralModel
    weight: object
    r: float = 100.0
    tgrid: tuple = (1.0,)
    M: int = 500
    N: int = 2**14
    seed: int = 0
    workers: int = 1
    quad: Quadrature = field(default_factory=Quadrature)
    ladder: tuple = ()
    label: str = "experiment"

    def __post_init__(self):
        self.tgrid = tuple(float(t) for t in self.tgrid)
        if self.M < 2:
            raise ModelError("an experiment needs M >= 2 replications")
        if not self.r > 0:
            raise ModelError("r must be positive")
        if not self.tgrid or any(not 0 <= t <= 1 for t in self.tgrid) or list(self.tgrid) != sorted(self.tgrid):
            raise ModelError("t-grid must be a sorted subset of [0, 1]")
        if self.N < 1:
            raise ModelError("N must be at least 1")
        if self.weight.n != self.model.n:
            raise ModelError("weight and model dimensions differ")


@dataclass
class ExperimentReport:
    label: str
    n: int
    j: int
    r: float
    M: int
    N: int
    seed: int
    tgrid: tuple
    field_samples: np.ndarray  # M x len(tgrid)
    oracle_samples: np.ndarray
    mean: list
    mean_stderr: list
    variance: list
    variance_stderr: list
    oracle_variance: list
    limit_variance: list
    oracle_path_variance: list
    ks_statistic: float
    ks_pvalue: float
    ks_degenerate: bool
    oracle_ks_statistic: float
    oracle_ks_pvalue: float
    qq: np.ndarray
    convergence: object = None
    elapsed: float = 0.0

    def summary(self):
        """Key-value view of the report (wall-clock time excluded so reruns compare equal)."""
        d = {"label": self.label, "n": self.n, "j": self.j, "r": self.r, "M": self.M, "N": self.N,
             "seed": self.seed, "t": list(self.tgrid)}
        for name in ("mean", "mean_stderr", "variance", "variance_stderr", "oracle_variance",
                     "limit_variance", "oracle_path_variance"):
            d[name] = list(getattr(self, name))
        d.update(ks_statistic=self.ks_statistic, ks_pvalue=self.ks_pvalue, ks_degenerate=self.ks_degenerate,
                 oracle_ks_statistic=self.oracle_ks_statistic, oracle_ks_pvalue=self.oracle_ks_pvalue,
                 qq_points=int(self.qq.shape[0]))
        if self.convergence is not None:
            d["convergence_trend"] = self.convergence.trend
        return d

    def variance_zscores(self):
        out = []
        for v, o in zip(self.variance, self.oracle_variance):
            sd = o * math.sqrt(2.0 / (self.M - 1))
            out.append((v - o) / sd if sd > 0 else (0.0 if v == 0 else math.inf))
        return out


def _replicate(cfg, consts, i):
    try:
        real = simulate(cfg.model, cfg.N, cfg.seed, i)
        t = np.asarray(cfg.tgrid)
        I = functional_I(real, cfg.weight, cfg.r * t ** (1.0 / cfg.model.n), cfg.quad)
        return normalize(I, consts, cfg.r, t)
    except CyclrfError as exc:
        raise type(exc)(f"replication {i}: {exc}") from exc


def run_experiment(cfg):
    """Field path and oracle path for ``cfg``; deterministic given ``cfg.seed``."""
    start = time.perf_counter()
    model, w = cfg.model, cfg.weight
    consts = normalization_constants(model, w.j)
    t = np.asarray(cfg.tgrid)
    m = t.size

    with ThreadPoolExecutor(max_workers=max(1, int(cfg.workers))) as pool:
        rows = list(pool.map(lambda i: _replicate(cfg, consts, i), range(cfg.M)))
    X = np.vstack(rows)

    K = oracle_matrix(model, w, consts, cfg.r, t)
    pos = np.flatnonzero(np.diag(K) > 0)
    Y = np.zeros_like(X)
    if pos.size:
        L = cholesky_factor(K[np.ix_(pos, pos)])
        for i in range(cfg.M):
            Y[i, pos] = L @ rng_stream(cfg.seed, i, 1).standard_normal(pos.size)

    lim = [limit_variance(w, consts.alpha, model.n, tt) for tt in t]
    stats = [_mean_var(X[:, k]) for k in range(m)]
    mean = [s[0] for s in stats]
    var = [s[1] for s in stats]
    mse = [math.sqrt(v / cfg.M) for v in var]
    vse = [v * math.sqrt(2.0 / (cfg.M - 1)) for v in var]
    ovar = [float(K[k, k]) for k in range(m)]
    opvar = [_mean_var(Y[:, k])[1] for k in range(m)]

    last = m - 1
    sd = math.sqrt(ovar[last])
    degenerate = not sd > 0
    if degenerate:
        ks = (math.nan, math.nan)
        oks = (math.nan, math.nan)
        qq = qq_points(X[:, last], lambda p: np.zeros_like(p))
    else:
        ks = ks_test(X[:, last], normal_cdf(sd))
        oks = ks_test(Y[:, last], normal_cdf(sd))
        qq = qq_points(X[:, last], normal_quantile(sd))

    conv = None
    if cfg.ladder:
        conv = convergence_study(model, w, consts, cfg.ladder, t[last])
    return ExperimentReport(cfg.label, model.n, w.j, float(cfg.r), cfg.M, cfg.N, cfg.seed, tuple(cfg.tgrid), X, Y,
                            mean, mse, var, vse, ovar, lim, opvar, ks[0], ks[1], degenerate, oks[0], oks[1], qq,
                            conv, time.perf_counter() - start)


# ---------------------------------------------------------------- shipped pairs

def shipped_pairs():
    """Stand-in (model, weight) pairs used by the acceptance suite and the example configs.

    ``cauchy-like`` and ``bessel-like`` are our own instances of the two model
    classes (n = 2); the n = 1 pairs cover the zero and non-zero singularity.
    """
    exp = Envelope.exponential
    return {
        "line-zero": (SpectralModel.build(1, (0.0, 0.5, exp(1.0, 1.0))), make_donsker(1)),
        "line-cyclic": (SpectralModel.build(1, (0.0, 0.5, exp(1.0, 1.0)), (1.0, 0.5, exp(1.0, 1.0))),
                        make_gaussian(1, 1, 1.0)),
        "cauchy-like": (SpectralModel.build(2, (0.0, 1.0, exp(1.0, 1.0))), make_donsker(2)),
        "bessel-like": (SpectralModel.build(2, (0.0, 1.0, exp(0.5, 1.0)), (1.0, 0.5, exp(1.0, 1.0))),
                        make_gaussian(2, 1, 1.0)),
    }
