"""Acceptance criteria 1-7, one pass/fail line each.

Run with ``pytest tests/test_acceptance.py -v`` or as a script.  The lines are
printed as each criterion finishes and repeated in the terminal summary.
"""

import math
import os
import sys
import time

import numpy as np
import pytest
import yaml

from cyclrf import io
from cyclrf.cli import main
from cyclrf.functionals import normalization_constants
from cyclrf.harness import convergence_study, shipped_pairs
from cyclrf.limits import (covariance_matrix, fd_jacobian, inner_map, jacobian_inner, jacobian_outer, limit_variance,
                           outer_map, simulate_limit)
from cyclrf.special import SUPPORTED_ORDERS, besselj, sphere_area
from cyclrf.weights import make_donsker
from oracles import ball_volume, bessel_series
from shared import FIXTURE_SEEDS, pair_report

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
PAIRS = shipped_pairs()
LADDER = (10.0, 100.0, 1000.0, 10000.0)
TGRID = np.array([0.2, 0.4, 0.6, 0.8, 1.0])

# pinned tolerances
SIGMA = 3.0
KS_LEVEL = 0.01
KS_MIN_SEEDS = 9
CONV_RATIO = 0.1
CONV_BUDGET = 120.0
LIMIT_M = 10_000
SCALING_TOL = 1e-10
JAC_TOL = 1e-6
JAC_POINTS = 100
MEASURE_TOL = 1e-6
SERIES_TOL = 1e-10
BALL_TOL = 1e-10
WORKERS = (1, 4, 16)


def _report(acceptance, k, ok, text):
    acceptance(f"[{'PASS' if ok else 'FAIL'}] criterion {k}: {text}")
    assert ok, text


# ---------------------------------------------------------------- 1

def test_criterion_1_oracle_equivalence(acceptance):
    parts, ok = [], True
    for name in sorted(PAIRS):
        rep = pair_report(name, seed=0)
        z = rep.variance_zscores()[-1]
        good = rep.M == 500 and rep.r == 100.0 and rep.tgrid[-1] == 1.0 and abs(z) <= SIGMA
        ok &= good
        parts.append(f"{name} z={z:+.2f} ({rep.elapsed:.0f}s)")
    _report(acceptance, 1, ok, "field variance at t=1 within 3 sigma of oracle; " + ", ".join(parts))


# ---------------------------------------------------------------- 2

def test_criterion_2_cauchy_like_ks(acceptance):
    pv = [pair_report("cauchy-like", seed=s).ks_pvalue for s in FIXTURE_SEEDS]
    passed = sum(p > KS_LEVEL for p in pv)
    _report(acceptance, 2, passed >= KS_MIN_SEEDS,
            f"cauchy-like KS p > {KS_LEVEL} on {passed}/{len(pv)} seeds (min p {min(pv):.3g})")


# ---------------------------------------------------------------- 3

def test_criterion_3_convergence_trend(acceptance):
    start = time.perf_counter()
    parts, ok = [], True
    for name in sorted(PAIRS):
        m, w = PAIRS[name]
        tab = convergence_study(m, w, normalization_constants(m, w.j), LADDER, 1.0)
        cols = [("R", [row[2] for row in tab.rows])]
        if w.j == 1:
            cols.append(("S", [row[3] for row in tab.rows]))
        for label, vals in cols:
            good = all(b < a for a, b in zip(vals, vals[1:])) and vals[-1] < CONV_RATIO * vals[0]
            ok &= good
            parts.append(f"{name} {label} {vals[0]:.2e}->{vals[-1]:.2e}")
    elapsed = time.perf_counter() - start
    ok &= elapsed <= CONV_BUDGET
    _report(acceptance, 3, ok, f"R (and S for j=1) strictly decreasing, last < 0.1 x first in {elapsed:.0f}s; "
            + ", ".join(parts))


# ---------------------------------------------------------------- 4

def test_criterion_4_limit_process(acceptance):
    ok, worst_scale = True, 0.0
    m, w = PAIRS["cauchy-like"]
    alpha, n = m.components[w.j].alpha, m.n
    paths = simulate_limit(w, alpha, n, TGRID, LIMIT_M, seed=0)
    K = covariance_matrix(w, alpha, n, TGRID)
    S = paths.T @ paths / LIMIT_M
    sd = np.sqrt((np.outer(np.diag(K), np.diag(K)) + K**2) / LIMIT_M)
    worst_z = float(np.max(np.abs(S - K) / sd))
    ok &= paths.shape == (LIMIT_M, TGRID.size) and worst_z <= SIGMA
    for name in sorted(PAIRS):
        mm, ww = PAIRS[name]
        a = mm.components[ww.j].alpha
        v1 = limit_variance(ww, a, mm.n, 1.0)
        for t in (0.25, 0.5, 0.75):
            worst_scale = max(worst_scale, abs(limit_variance(ww, a, mm.n, t) / v1 - t ** (2 - a / mm.n)))
    ok &= worst_scale <= SCALING_TOL
    _report(acceptance, 4, ok, f"1e4 limit paths max |z| {worst_z:.2f} <= 3; "
            f"variance scaling error {worst_scale:.1e} <= 1e-10")


# ---------------------------------------------------------------- 5

def _measure_identity(n, psi, a=0.7):
    from scipy.integrate import quad
    lhs = sphere_area(n) * quad(lambda z: float(psi(z)) * z ** (n - 1), a, 20.0, limit=400,
                                epsabs=1e-13, epsrel=1e-12)[0]
    x, wx = np.polynomial.legendre.leggauss(200)
    edges = np.linspace(0.0, 20.0, 41)
    R = np.concatenate([0.5 * (p + q) + 0.5 * (q - p) * x for p, q in zip(edges[:-1], edges[1:])])
    WR = np.concatenate([0.5 * (q - p) * wx for p, q in zip(edges[:-1], edges[1:])])
    if n == 2:
        th = 2 * math.pi * np.arange(16) / 16
        dirs, wd = np.stack([np.cos(th), np.sin(th)], 1), np.full(16, 2 * math.pi / 16)
    else:
        mu, wmu = np.polynomial.legendre.leggauss(8)
        ph = 2 * math.pi * np.arange(16) / 16
        st = np.sqrt(1 - mu**2)
        dirs = np.stack([np.outer(st, np.cos(ph)).ravel(), np.outer(st, np.sin(ph)).ravel(), np.repeat(mu, 16)], 1)
        wd = np.repeat(wmu, 16) * 2 * math.pi / 16
    total = 0.0
    for d, wdir in zip(dirs, wd):
        jac = np.array([jacobian_outer(a, p, n) for p in R[:, None] * d[None, :]])
        total += wdir * math.fsum(WR * R ** (n - 1) * psi(R + a) * jac)
    return abs(total - lhs) / max(1.0, abs(lhs))


def _bump(z):
    x = (np.asarray(z) - 2.0) / 1.2
    out = np.zeros_like(x)
    inside = np.abs(x) < 1
    out[inside] = np.exp(-1.0 / (1.0 - x[inside] ** 2))
    return out


def test_criterion_5_jacobians(acceptance):
    worst_fd, worst_meas = 0.0, 0.0
    for n in (2, 3):
        rng = np.random.default_rng(100 + n)
        for _ in range(JAC_POINTS):
            a = rng.uniform(0.2, 3.0)
            u = rng.normal(size=n)
            u *= rng.uniform(0.1, 5.0) / np.linalg.norm(u)
            fd = fd_jacobian(lambda v: outer_map(a, v), u)
            worst_fd = max(worst_fd, abs(fd - jacobian_outer(a, u, n)) / max(1.0, abs(fd)))
            ui = u / np.linalg.norm(u) * rng.uniform(0.05, 0.95) * a
            fd = fd_jacobian(lambda v: inner_map(a, v), ui)
            worst_fd = max(worst_fd, abs(fd - jacobian_inner(a, ui, n)) / max(1.0, abs(fd)))
        for psi in (_bump, lambda z: np.exp(-((np.asarray(z) - 1.0) ** 2)),
                    lambda z: np.clip(1.0 - (np.asarray(z) / 4.0) ** 2, 0.0, None) ** 4):
            worst_meas = max(worst_meas, _measure_identity(n, psi))
    ok = worst_fd <= JAC_TOL and worst_meas <= MEASURE_TOL
    _report(acceptance, 5, ok, f"FD Jacobians max rel error {worst_fd:.1e}, measure identity {worst_meas:.1e} "
            "(tol 1e-6, n=2,3)")


# ---------------------------------------------------------------- 6

def test_criterion_6_special_functions(acceptance):
    xs = np.linspace(0.0, 20.0, 161)
    worst = 0.0
    for nu in SUPPORTED_ORDERS:
        for x in (xs[1:] if nu < 0 else xs):
            ref = bessel_series(nu, x)
            worst = max(worst, abs(besselj(nu, x) - ref) / max(1.0, abs(ref)))
    ball = max(abs(make_donsker(n).profile(0.0) - ball_volume(n)) for n in (1, 2, 3))
    _report(acceptance, 6, worst <= SERIES_TOL and ball <= BALL_TOL,
            f"besselj vs series max error {worst:.1e}, Donsker g(0) vs ball volume {ball:.1e} (tol 1e-10)")


# ---------------------------------------------------------------- 7

def test_criterion_7_determinism(acceptance, tmp_path):
    with open(os.path.join(ROOT, "configs", "cauchy_like.yaml")) as fh:
        base = yaml.safe_load(fh)
    digests = []
    for workers in WORKERS:
        cfg = dict(base, experiment={**base["experiment"], "workers": workers})
        path = tmp_path / f"w{workers}.yaml"
        path.write_text(yaml.safe_dump(cfg))
        out = tmp_path / f"out{workers}"
        code = main(["experiment", str(path), "-o", str(out)])
        assert code == 0
        csvs = sorted(p for p in os.listdir(out) if p.endswith(".csv"))
        digests.append({p: io.sha256_file(out / p) for p in csvs})
    ok = len(digests[0]) > 0 and all(d == digests[0] for d in digests)
    _report(acceptance, 7, ok, f"{len(digests[0])} CSV outputs byte-identical under workers {WORKERS}")


if __name__ == "__main__":
    sys.exit(pytest.main([os.path.abspath(__file__), "-v", "-p", "no:cacheprovider", *sys.argv[1:]]))
