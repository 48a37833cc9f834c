"""The Gaussian limit process X_j(t) and the change-of-variable identities.

The limit is the isotropic Wiener integral

    X_j(t) = t int g_j(|u| t^(1/n)) |u|^(-(n - alpha_j)/2) dZ(u),

so by the Ito isometry

    Cov(X_j(t), X_j(s)) = t s omega_n int_0^inf g_j(rho t^(1/n)) g_j(rho s^(1/n)) rho^(alpha_j - 1) d rho.
"""

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np

from . import quadrature
from .errors import DivergentLimitIntegral, DomainError, IndexMismatch, NotPositiveDefinite
from .fieldsim import rng_stream
from .special import sphere_area
from .weights import check_decay

# oscillatory part of a radial integral runs up to this profile argument
P_OSC = 4000.0
# cross terms g(c1 rho) g(c2 rho) decorrelate; they are integrated further out and then dropped
P_CROSS = 64000.0
JITTER = 1e-12


def _check_limit(w, alpha):
    if not alpha > 0:
        raise DivergentLimitIntegral(f"origin check failed: rho^(alpha-1) with alpha={alpha} is not integrable at 0")
    if math.isfinite(w.s_max):
        return
    if not alpha < w.n:
        raise DivergentLimitIntegral(f"tail check failed: alpha={alpha} >= n={w.n}")
    probe = np.geomspace(max(w.s0, 1.0), 1e6, 121)
    holds, worst = check_decay(w, probe)
    if not holds:
        raise DivergentLimitIntegral(
            f"tail check failed: g^2 s^n reaches {worst:.3g} > C={w.C:.3g}; decay certificate does not hold")


def weighted_radial_integral(w, alpha, c1, c2=None, extra=None, singular=(), breaks=(),
                             rtol=1e-10, atol=1e-300):
    """``int_0^inf g(c1 rho) g(c2 rho) rho^(alpha-1) extra(rho) d rho`` as a QuadResult.

    The range is split at ``rho = 1/c``; up to profile argument ``P_OSC`` the
    integrand is integrated as is, with panels of a quarter oscillation
    period.  Beyond that (``c1 == c2`` only) ``g^2`` is replaced by its smooth
    mean square and the tail is integrated in ``v = log(rho)``.  ``extra``
    may have algebraic singularities listed as ``(rho_s, beta)`` pairs.
    """
    c2 = c1 if c2 is None else c2
    if c1 <= 0 or c2 <= 0:
        return quadrature.ZERO
    cmin, cmax = min(c1, c2), max(c1, c2)
    same = c1 == c2
    extra = extra if extra is not None else (lambda rho: 1.0)

    def body(rho):
        return w.g(c1 * rho) * w.g(c2 * rho) * rho ** (alpha - 1.0) * extra(rho)

    sing = [(0.0, alpha)] + [(float(p), float(b)) for p, b in singular if p > 0]
    period = w.period if w.period is not None else 2.0 * math.pi
    max_len = 0.25 * period / cmax
    split = 1.0 / cmax
    if math.isfinite(w.s_max):
        hi = w.s_max / cmax
        use_tail = False
    else:
        hi = (P_OSC if same else P_CROSS) / cmin
        use_tail = True
    split = min(split, hi)
    total = quadrature.integrate_pieces(body, 0.0, split, singular=sing, breaks=breaks, rtol=rtol, atol=atol)
    total = total + quadrature.integrate_pieces(body, split, hi, singular=sing, breaks=breaks,
                                                max_len=max_len, rtol=rtol, atol=atol)
    if not use_tail or not same:
        return total
    n = w.n
    v0 = math.log(hi)
    span = min(600.0, 46.0 / max(n - alpha, 1e-3))
    ms = w.mean_square

    def tail(v):
        rho = np.exp(v)
        g2 = ms(c1 * rho) if ms is not None else w.g(c1 * rho) ** 2
        return g2 * rho**alpha * extra(rho)

    vs = [(math.log(p), b) for p, b in sing if p > hi]
    vbreaks = [math.log(b) for b in breaks if b > hi]
    total = total + quadrature.integrate_pieces(tail, v0, v0 + span, singular=vs, breaks=vbreaks,
                                                max_len=0.5, rtol=rtol, atol=atol)
    return total


def limit_covariance(w, alpha, n, t, s, rtol=1e-12):
    """``Cov(X_j(t), X_j(s))``; symmetric, zero when either time is 0."""
    t, s = float(t), float(s)
    if not (0.0 <= t <= 1.0 and 0.0 <= s <= 1.0):
        raise DomainError("times must lie in [0, 1]")
    if w.n != n:
        raise IndexMismatch(f"weight is for dimension {w.n}, not {n}")
    _check_limit(w, alpha)
    if t == 0 or s == 0:
        return 0.0
    if s < t:
        t, s = s, t
    res = weighted_radial_integral(w, alpha, t ** (1.0 / n), s ** (1.0 / n), rtol=rtol)
    return t * s * sphere_area(n) * res.value


def limit_variance(w, alpha, n, t=1.0, rtol=1e-12):
    """``Var X_j(t) = t^(2 - alpha/n) omega_n int g^2 rho^(alpha-1)``, integrated directly at scale t."""
    return limit_covariance(w, alpha, n, t, t, rtol=rtol)


def covariance_matrix(w, alpha, n, tgrid):
    """Kernel matrix over ``tgrid`` (weights are immutable, so results are memoised)."""
    return _covariance_matrix(w, float(alpha), int(n), tuple(float(t) for t in np.ravel(tgrid))).copy()


@lru_cache(maxsize=64)
def _covariance_matrix(w, alpha, n, tgrid):
    m = len(tgrid)
    K = np.zeros((m, m))
    for a in range(m):
        for b in range(a, m):
            K[a, b] = K[b, a] = limit_covariance(w, alpha, n, tgrid[a], tgrid[b])
    return K


@dataclass(frozen=True, eq=False)
class LimitProcess:
    """Limit X_j for one weight; ``kernel(t, s)`` is the covariance function."""

    w: object
    alpha: float
    n: int

    def kernel(self, t, s):
        return limit_covariance(self.w, self.alpha, self.n, t, s)

    @property
    def variance_at_1(self):
        return limit_variance(self.w, self.alpha, self.n, 1.0)


def cholesky_factor(K):
    """Lower factor of ``K``, adding ``1e-12 trace/m`` to the diagonal at most once."""
    m = K.shape[0]
    if m == 0:
        return K.copy()
    try:
        return np.linalg.cholesky(K)
    except np.linalg.LinAlgError:
        pass
    jitter = JITTER * np.trace(K) / m
    try:
        return np.linalg.cholesky(K + jitter * np.eye(m))
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite(f"covariance matrix not positive definite even with jitter {jitter:.3g}") from None


def shell_rule(w, alpha, n, K=4096):
    """Nodes and weights discretising ``int_0^inf F(rho) rho^(alpha-1) d rho`` with ``K`` nodes.

    128 nodes cover [0, 1] (singular at 0), the rest cover [1, P] with 8-point
    panels a quarter oscillation period long (or the support of g when finite).
    """
    if K < 64:
        raise ValueError("K must be at least 64")
    z0, w0 = quadrature.fixed_rule(0.0, 1.0, center=0.0, power=alpha, max_len=1.0 / 8, order=16)
    panels = (K - z0.size) // 8
    if math.isfinite(w.s_max):
        hi = w.s_max
    else:
        period = w.period if w.period is not None else 2.0 * math.pi
        hi = 1.0 + panels * 0.25 * period
    z1, w1 = quadrature.fixed_rule(1.0, hi, max_len=(hi - 1.0) / panels, order=8)
    rho = np.concatenate([z0, z1])
    wt = np.concatenate([w0, w1 * z1 ** (alpha - 1.0)])
    return rho, wt


def simulate_limit(w, alpha, n, tgrid, M, K=4096, seed=0, method="cholesky"):
    """Draw ``M`` paths of X_j on ``tgrid``; row ``i`` uses the stream (seed, i).

    ``method="cholesky"`` factors the exact kernel matrix; ``method="shells"``
    discretises the Wiener integral on ``K`` radial shells (white noise on a
    shell of radius ``rho`` has variance ``omega_n rho^(n-1) d rho``).
    """
    tgrid = np.asarray(tgrid, dtype=float)
    if np.any((tgrid < 0) | (tgrid > 1)):
        raise DomainError("tgrid must lie in [0, 1]")
    _check_limit(w, alpha)
    M = int(M)
    out = np.zeros((M, tgrid.size))
    pos = np.flatnonzero(tgrid > 0)
    if pos.size == 0:
        return out
    tp = tgrid[pos]
    if method == "cholesky":
        L = cholesky_factor(covariance_matrix(w, alpha, n, tp))
        for i in range(M):
            out[i, pos] = L @ rng_stream(seed, i).standard_normal(pos.size)
        return out
    if method != "shells":
        raise ValueError(f"unknown method {method!r}")
    rho, wt = shell_rule(w, alpha, n, K)
    # column k: t g(rho_k t^(1/n)) sqrt(omega_n w_k)
    A = tp[:, None] * w.g(rho[None, :] * tp[:, None] ** (1.0 / n)) * np.sqrt(sphere_area(n) * wt)[None, :]
    for i in range(M):
        out[i, pos] = A @ rng_stream(seed, i).standard_normal(rho.size)
    return out


def jacobian_outer(a, u, n):
    """``det J_n(u) = (1 + a/|u|)^(n-1)`` for the map ``u -> u (1 + a/|u|)``."""
    r = float(np.linalg.norm(np.atleast_1d(u)))
    if r == 0:
        raise DomainError("jacobian_outer needs |u| != 0")
    if a < 0:
        raise DomainError("a_j must be non-negative")
    return (1.0 + a / r) ** (n - 1)


def jacobian_inner(a, u, n):
    """``det J~_n(u) = -(a/|u| - 1)^(n-1)`` for ``u -> u (a/|u| - 1)``, valid for 0 < |u| < a."""
    r = float(np.linalg.norm(np.atleast_1d(u)))
    if not 0 < r < a:
        raise DomainError("jacobian_inner needs 0 < |u| < a_j")
    return -((a / r - 1.0) ** (n - 1))


def outer_map(a, u):
    u = np.asarray(u, dtype=float)
    return u * (1.0 + a / np.linalg.norm(u))


def inner_map(a, u):
    u = np.asarray(u, dtype=float)
    return u * (a / np.linalg.norm(u) - 1.0)


def fd_jacobian(fn, u, h=1e-6):
    """Central-difference Jacobian determinant of ``fn`` at ``u``."""
    u = np.asarray(u, dtype=float)
    n = u.size
    J = np.empty((n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        J[:, k] = (fn(u + e) - fn(u - e)) / (2 * h)
    return float(np.linalg.det(J))


@dataclass(frozen=True)
class CorollaryIntegral:
    label: str
    value: float
    error: float


def corollary_integrals(model, j, rtol=1e-10, atol=1e-13):
    """Finite radial integrals left after the changes of variables around ``a_j``.

    Outer region (|lambda| > a_j, rho = |lambda| - a_j): one integral for the
    zero-frequency term and one for each i != j, i >= 1.  Inner region
    (|lambda| < a_j, rho = a_j - |lambda|): the same terms over (0, a_j);
    empty when a_j = 0.  Returns a list of ``CorollaryIntegral``.
    """
    comps = model.components
    if not 0 <= j < len(comps):
        raise IndexMismatch(f"no component {j}")
    n = model.n
    a = comps[j].a
    out = []

    def run(label, f, lo, hi, sing, brk):
        if hi <= lo:
            out.append(CorollaryIntegral(label, 0.0, 0.0))
            return
        res = quadrature.integrate_pieces(f, lo, hi, singular=sing, breaks=brk, rtol=rtol, atol=atol)
        if not math.isfinite(res.value):
            raise DivergentLimitIntegral(f"{label} integral is not finite")
        out.append(CorollaryIntegral(label, res.value, res.error))

    c0 = comps[0]
    e0 = c0.h.extent(n, 0.0)

    def outer0(rho):
        return c0.h(rho + a) / (rho + a) ** (n - c0.alpha) * (1.0 + a / rho) ** (n - 1) * rho ** (n - 1)

    sing0 = [(0.0, c0.alpha)] if a == 0 else []
    run("outer:0", outer0, 0.0, max(e0 - a, 0.0), sing0, [L - a for L in c0.h.kinks() if L > a])
    for i, c in enumerate(comps[1:], start=1):
        if i == j:
            continue
        ext = c.h.extent(n, c.a)

        def outer_i(rho, c=c):
            s = rho - c.a + a
            return c.h(s) / np.abs(s) ** (1.0 - c.alpha) * (1.0 + a / rho) ** (n - 1) * rho ** (n - 1)

        run(f"outer:{i}", outer_i, max(c.a - a - ext, 0.0), c.a - a + ext, [(c.a - a, c.alpha)],
            [c.a - a + k for k in c.h.kinks()])
    if a == 0:
        return out

    def inner0(rho):
        return c0.h(a - rho) / (a - rho) ** (n - c0.alpha) * (a / rho - 1.0) ** (n - 1) * rho ** (n - 1)

    run("inner:0", inner0, max(a - e0, 0.0), a, [(a, c0.alpha)], [a - L for L in c0.h.kinks() if 0 < L < a])
    for i, c in enumerate(comps[1:], start=1):
        if i == j:
            continue
        ext = c.h.extent(n, c.a)

        def inner_i(rho, c=c):
            s = a - rho - c.a
            return c.h(s) / np.abs(s) ** (1.0 - c.alpha) * (a / rho - 1.0) ** (n - 1) * rho ** (n - 1)

        lo, hi = max(a - c.a - ext, 0.0), min(a - c.a + ext, a)
        run(f"inner:{i}", inner_i, lo, hi, [(a - c.a, c.alpha)], [a - c.a - k for k in c.h.kinks()])
    return out
