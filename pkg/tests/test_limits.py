import math

import numpy as np
import pytest
from scipy import stats

from cyclrf.errors import DivergentLimitIntegral, DomainError, IndexMismatch, NotPositiveDefinite
from cyclrf.functionals import normalization_constants, oracle_matrix
from cyclrf.harness import ks_test, normal_cdf, shipped_pairs
from cyclrf.limits import (LimitProcess, cholesky_factor, corollary_integrals, covariance_matrix, fd_jacobian,
                           inner_map, jacobian_inner, jacobian_outer, limit_covariance, limit_variance, outer_map,
                           simulate_limit)
from cyclrf.spectrum import Envelope, SpectralModel
from cyclrf.weights import RadialWeight, make_donsker, make_gaussian
from oracles import midpoint, sphere_area, weber_schafheitlin

E = Envelope
PAIRS = shipped_pairs()
TGRID = np.array([0.2, 0.4, 0.6, 0.8, 1.0])


# ---------------------------------------------------------------- limit variance

@pytest.mark.parametrize("n,alpha", [(1, 0.25), (1, 0.5), (1, 0.75), (2, 0.5), (2, 1.0), (2, 1.5),
                                     (3, 0.5), (3, 1.5), (3, 2.5)])
def test_donsker_limit_variance_closed_form(n, alpha):
    # omega_n (2 pi)^n int J_{n/2}(rho)^2 rho^(alpha - n - 1) d rho
    ref = sphere_area(n) * (2 * math.pi) ** n * weber_schafheitlin(n / 2, n + 1 - alpha)
    assert limit_variance(make_donsker(n), alpha, n) == pytest.approx(ref, rel=1e-8)


def test_donsker_line_brute_force():
    # 2 int (2 sin rho / rho)^2 rho^(-1/2) d rho; rho = s^2 on [0, 100^2], mean-square tail beyond
    T = 1e4
    body = midpoint(lambda s: 16 * np.sin(s * s) ** 2 / s**4, 0.0, math.sqrt(T), 10_000_000)
    tail = 2 * 2 * (2.0 / 3.0) * T**-1.5
    assert limit_variance(make_donsker(1), 0.5, 1) == pytest.approx(body + tail, rel=1e-6)


def test_gaussian_limit_variance_closed_form():
    # omega_n (2 pi)^n int e^{-rho^2} rho^(alpha-1) = omega_n (2 pi)^n Gamma(alpha/2) / 2
    for n, alpha in ((1, 0.5), (2, 0.5), (3, 0.9)):
        ref = sphere_area(n) * (2 * math.pi) ** n * math.gamma(alpha / 2) / 2
        assert limit_variance(make_gaussian(n, 1, 1.0), alpha, n) == pytest.approx(ref, rel=1e-10)


@pytest.mark.parametrize("name", sorted(PAIRS))
def test_variance_scaling(name):
    m, w = PAIRS[name]
    alpha, n = m.components[w.j].alpha, m.n
    v1 = limit_variance(w, alpha, n, 1.0)
    assert limit_variance(w, alpha, n, 0.0) == 0.0
    for t in (0.25, 0.5, 0.75):
        assert abs(limit_variance(w, alpha, n, t) / v1 - t ** (2 - alpha / n)) <= 1e-10


def test_divergent_limits_rejected():
    with pytest.raises(DivergentLimitIntegral):
        limit_variance(make_donsker(2), 2.0, 2)
    with pytest.raises(DivergentLimitIntegral):
        limit_variance(make_donsker(2), 0.0, 2)
    slow = RadialWeight.custom(2, lambda s: 1.0 / (1.0 + np.abs(s)) ** 0.2, s0=1.0, C=10.0)
    with pytest.raises(DivergentLimitIntegral):
        limit_variance(slow, 1.0, 2)


# ---------------------------------------------------------------- covariance kernel

@pytest.mark.parametrize("name", sorted(PAIRS))
def test_kernel_properties(name):
    m, w = PAIRS[name]
    alpha, n = m.components[w.j].alpha, m.n
    assert limit_covariance(w, alpha, n, 0.7, 0.0) == 0.0
    assert limit_covariance(w, alpha, n, 0.0, 0.3) == 0.0
    for t in (0.3, 1.0):
        assert abs(limit_covariance(w, alpha, n, t, t) - limit_variance(w, alpha, n, t)) <= 1e-10 * limit_variance(
            w, alpha, n, t)
    K = covariance_matrix(w, alpha, n, TGRID)
    assert np.array_equal(K, K.T)
    d = np.diag(K)
    assert np.all(K**2 <= np.outer(d, d) * (1 + 1e-12))
    assert np.all(np.linalg.eigvalsh(K) > 0)


def test_limit_process_object():
    w = make_donsker(2)
    p = LimitProcess(w, 1.0, 2)
    assert p.kernel(0.5, 0.25) == limit_covariance(w, 1.0, 2, 0.5, 0.25)
    assert p.variance_at_1 == limit_variance(w, 1.0, 2)


def test_cholesky_jitter_and_failure():
    L = cholesky_factor(np.ones((3, 3)))  # rank one: needs the jitter
    assert np.allclose(L @ L.T, np.ones((3, 3)), atol=1e-10)
    with pytest.raises(NotPositiveDefinite):
        cholesky_factor(np.array([[1.0, 2.0], [2.0, 1.0]]))


# ---------------------------------------------------------------- simulation

def test_zero_grid_paths():
    assert np.array_equal(simulate_limit(make_donsker(2), 1.0, 2, [0.0], 50), np.zeros((50, 1)))
    with pytest.raises(DomainError):
        simulate_limit(make_donsker(2), 1.0, 2, [1.5], 5)


def test_paths_deterministic():
    w = make_donsker(1)
    a = simulate_limit(w, 0.5, 1, TGRID, 20, seed=5)
    assert np.array_equal(a, simulate_limit(w, 0.5, 1, TGRID, 20, seed=5))
    assert not np.array_equal(a, simulate_limit(w, 0.5, 1, TGRID, 20, seed=6))


@pytest.fixture(scope="module")
def cauchy_paths():
    m, w = PAIRS["cauchy-like"]
    chol = simulate_limit(w, 1.0, 2, TGRID, 10_000, seed=0)
    shells = simulate_limit(w, 1.0, 2, TGRID, 10_000, seed=1, method="shells")
    return w, chol, shells


def test_empirical_covariance_within_three_sigma(cauchy_paths):
    w, chol, _ = cauchy_paths
    K = covariance_matrix(w, 1.0, 2, TGRID)
    M = chol.shape[0]
    S = chol.T @ chol / M  # zero-mean process
    sd = np.sqrt((np.outer(np.diag(K), np.diag(K)) + K**2) / M)
    assert np.all(np.abs(S - K) <= 3 * sd)


def test_shells_agree_with_cholesky(cauchy_paths):
    w, chol, shells = cauchy_paths
    assert stats.ks_2samp(chol[:, -1], shells[:, -1]).statistic <= 0.02


def test_marginals_gaussian(cauchy_paths):
    w, chol, shells = cauchy_paths
    for k in (0, 2, 4):
        sd = math.sqrt(limit_variance(w, 1.0, 2, TGRID[k]))
        assert ks_test(chol[:, k], normal_cdf(sd))[1] > 0.01
        assert ks_test(shells[:, k], normal_cdf(sd))[1] > 0.01


# ---------------------------------------------------------------- Jacobians

def test_jacobian_examples():
    assert jacobian_outer(1.0, [1.0, 0.0, 0.0], 3) == 4.0
    assert jacobian_outer(0.0, [0.3, -2.0], 2) == 1.0
    assert jacobian_inner(2.0, [1.0, 0.0], 2) == -1.0
    with pytest.raises(DomainError):
        jacobian_outer(1.0, [0.0, 0.0], 2)
    with pytest.raises(DomainError):
        jacobian_inner(1.0, [2.0, 0.0], 2)


@pytest.mark.parametrize("n", [2, 3])
def test_finite_difference_jacobians(n):
    rng = np.random.default_rng(100 + n)
    for _ in range(100):
        a = rng.uniform(0.2, 3.0)
        u = rng.normal(size=n)
        u *= rng.uniform(0.1, 5.0) / np.linalg.norm(u)
        fd = fd_jacobian(lambda v: outer_map(a, v), u)
        assert abs(fd - jacobian_outer(a, u, n)) <= 1e-6 * max(1.0, abs(fd))
        ui = u / np.linalg.norm(u) * rng.uniform(0.05, 0.95) * a
        fd = fd_jacobian(lambda v: inner_map(a, v), ui)
        assert abs(fd - jacobian_inner(a, ui, n)) <= 1e-6 * max(1.0, abs(fd))


def _bump(c, h):
    def psi(z):
        x = (np.asarray(z) - c) / h
        out = np.zeros_like(x)
        inside = np.abs(x) < 1
        out[inside] = np.exp(-1.0 / (1.0 - x[inside] ** 2))
        return out
    return psi


TEST_FUNCTIONS = {
    "bump": _bump(2.0, 1.2),
    "gaussian": lambda z: np.exp(-((np.asarray(z) - 1.0) ** 2)),
    "poly": lambda z: np.clip(1.0 - (np.asarray(z) / 4.0) ** 2, 0.0, None) ** 4,
}


@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("name", sorted(TEST_FUNCTIONS))
def test_measure_identity(n, name):
    from scipy.integrate import quad
    psi = TEST_FUNCTIONS[name]
    a = 0.7
    lhs = sphere_area(n) * quad(lambda z: float(psi(z)) * z ** (n - 1), a, 20.0, limit=400,
                                epsabs=1e-13, epsrel=1e-12)[0]
    # right side as an integral over R^n in polar/spherical product form, with the Jacobian
    # evaluated point by point at Cartesian nodes
    rho, wr = np.polynomial.legendre.leggauss(200)
    edges = np.linspace(0.0, 20.0, 41)
    R = np.concatenate([0.5 * (p + q) + 0.5 * (q - p) * rho for p, q in zip(edges[:-1], edges[1:])])
    WR = np.concatenate([0.5 * (q - p) * wr for p, q in zip(edges[:-1], edges[1:])])
    if n == 2:
        th = 2 * math.pi * np.arange(16) / 16
        dirs, wd = np.stack([np.cos(th), np.sin(th)], 1), np.full(16, 2 * math.pi / 16)
    else:
        mu, wmu = np.polynomial.legendre.leggauss(8)
        ph = 2 * math.pi * np.arange(16) / 16
        st = np.sqrt(1 - mu**2)
        dirs = np.stack([np.outer(st, np.cos(ph)).ravel(), np.outer(st, np.sin(ph)).ravel(),
                         np.repeat(mu, 16)], 1)
        wd = np.repeat(wmu, 16) * 2 * math.pi / 16
    total = 0.0
    for d, wdir in zip(dirs, wd):
        pts = R[:, None] * d[None, :]
        jac = np.array([jacobian_outer(a, p, n) for p in pts])
        total += wdir * math.fsum(WR * R ** (n - 1) * psi(R + a) * jac)
    assert abs(total - lhs) <= 1e-6 * max(1.0, abs(lhs))


# ---------------------------------------------------------------- corollary integrals

def _corollary_model():
    return SpectralModel.build(2, (0.0, 0.6, E.plateau(1.0, 4.0)), (1.0, 0.5, E.plateau(1.0, 0.4)),
                               (2.5, 0.5, E.plateau(1.0, 0.3)))


def test_corollary_integrals_riemann_oracle():
    m = _corollary_model()
    got = {c.label: c.value for c in corollary_integrals(m, 2)}
    assert set(got) == {"outer:0", "outer:1", "inner:0", "inner:1"}
    a, n, K = 2.5, 2, 1_000_000
    # integrands exactly as displayed (before simplification), singularities removed by substitution
    outer0 = midpoint(lambda p: (p + a) ** (0.6 - n) * (1 + a / p) ** (n - 1) * p ** (n - 1), 0.0, 1.5, K)
    inner0 = midpoint(lambda u: (lambda p: (a - p) ** (0.6 - n) * (a / p - 1) ** (n - 1) * p ** (n - 1))(
        a - u ** (5 / 3)) * (5 / 3) * u ** (2 / 3), 0.0, a**0.6, K)

    def inner1(u, sign):
        p = 1.5 + sign * u * u
        return np.abs(a - p - 1.0) ** -0.5 * (a / p - 1) ** (n - 1) * p ** (n - 1) * 2 * u

    w = math.sqrt(0.4)
    inner1_ref = midpoint(lambda u: inner1(u, 1.0), 0.0, w, K) + midpoint(lambda u: inner1(u, -1.0), 0.0, w, K)
    assert got["outer:0"] == pytest.approx(outer0, abs=1e-5)
    assert got["outer:1"] == 0.0
    assert got["inner:0"] == pytest.approx(inner0, abs=1e-5)
    assert got["inner:1"] == pytest.approx(inner1_ref, abs=1e-5)
    # closed forms for the two simplified zero-frequency integrals
    assert got["outer:0"] == pytest.approx((4.0**0.6 - a**0.6) / 0.6, rel=1e-9)
    assert got["inner:0"] == pytest.approx(a**0.6 / 0.6, rel=1e-9)


def test_corollary_inner_empty_at_zero_frequency():
    m = _corollary_model()
    labels = [c.label for c in corollary_integrals(m, 0)]
    assert labels == ["outer:0", "outer:1", "outer:2"]
    with pytest.raises(IndexMismatch):
        corollary_integrals(m, 3)


def test_corollary_integrals_finite_for_shipped_models():
    for name, (m, w) in PAIRS.items():
        for c in corollary_integrals(m, w.j):
            assert math.isfinite(c.value) and c.value >= 0


# ---------------------------------------------------------------- link to the functional

@pytest.mark.parametrize("name", ["line-zero", "cauchy-like"])
def test_normalised_oracle_approaches_limit(name):
    m, w = PAIRS[name]
    consts = normalization_constants(m, w.j)
    lim = limit_variance(w, consts.alpha, m.n)
    gaps = [abs(oracle_matrix(m, w, consts, r, [1.0])[0, 0] - lim) for r in (10.0, 100.0, 1000.0, 10000.0)]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))


@pytest.mark.parametrize("name", ["line-cyclic", "bessel-like"])
def test_normalised_oracle_approaches_limit_cyclic(name):
    # not monotone at the smallest scale; the gap still shrinks along the ladder's upper end
    m, w = PAIRS[name]
    consts = normalization_constants(m, w.j)
    lim = limit_variance(w, consts.alpha, m.n)
    gaps = [abs(oracle_matrix(m, w, consts, r, [1.0])[0, 0] - lim) for r in (10.0, 100.0, 1000.0, 10000.0)]
    assert gaps[1] > gaps[2] > gaps[3] and gaps[3] < gaps[0]
