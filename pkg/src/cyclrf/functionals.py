"""Weighted functionals of the field and their exact Gaussian law.

    I_j(r)     = r^-n int f_{j,r}(x) xi(x) dx
    X_{r,j}(t) = t r^(alpha_j/2) I_j(r t^(1/n)) / sqrt(A_j h_j(0))

``I_j(r)`` is a zero-mean Gaussian with variance
``int g_j(r(|lambda| - a_j))^2 phi(|lambda|) d lambda`` (the spectral
oracle).  ``R_r(t)`` and ``S_r(t)`` are the exact L2 distances between the
normalised functional and its limit, split over the outer and inner regions
|lambda| > a_j and |lambda| < a_j.
"""

from dataclasses import dataclass
import math

import numpy as np

from . import quadrature
from .errors import IndexMismatch, ModelError, ResolutionTooCoarse, SingularPoint
from .limits import weighted_radial_integral
from .spectrum import spectral_integral
from .special import sphere_area

# r * |z - a_j| beyond which an oscillating g^2 is replaced by its mean square
P_OSC = 4000.0
# Q is a squared difference of O(1) numbers, so it carries rounding noise of order eps^2
Q_FLOOR = 1e-28


@dataclass(frozen=True)
class NormalizationConstants:
    n: int
    j: int
    a: float
    alpha: float
    h0: float  # h_j(0)
    A: float
    V: float

    @classmethod
    def for_model(cls, model, j):
        if not 0 <= j < len(model.components):
            raise IndexMismatch(f"model has no component {j}")
        c = model.components[j]
        n = model.n
        V = 1.0 if j == 0 else c.a ** (n - 1)
        A = 1.0 if j == 0 else 2.0 * V
        return cls(n, j, c.a, c.alpha, float(c.h.at0()), A, V)

    @property
    def scale(self):
        return math.sqrt(self.A * self.h0)


def normalization_constants(model, j):
    return NormalizationConstants.for_model(model, j)


def _check_weight(model, w, j=None):
    if w.n != model.n:
        raise IndexMismatch(f"weight dimension {w.n} differs from model dimension {model.n}")
    j = w.j if j is None else j
    if not 0 <= j < len(model.components):
        raise IndexMismatch(f"weight matched to j={j} but the model has k={model.k}")
    if abs(model.components[j].a - w.a) > 1e-12 * max(1.0, w.a):
        raise IndexMismatch(f"weight frequency a={w.a} differs from a_{j}={model.components[j].a}")


# ---------------------------------------------------------------- functional I

@dataclass(frozen=True)
class Quadrature:
    """How ``functional_I`` integrates the field.

    ``plane-wave`` integrates each plane wave of the realisation exactly (its
    weighted integral is the weight's Fourier transform); ``product`` is
    spatial product quadrature with ``radial`` x ``angular`` nodes
    (trapezoid with ``radial`` nodes on each half-line when n = 1).
    """

    method: str = "plane-wave"
    radial: int = 256
    angular: int = 128
    nodes_per_wavelength: float = 4.0

    def __post_init__(self):
        if self.method not in ("plane-wave", "product"):
            raise ModelError(f"unknown quadrature method {self.method!r}")


def _product_rule(n, R, q):
    """Points and weights for ``int_{|x| <= R} F(x) dx``."""
    if n == 1:
        x = np.linspace(-R, R, 2 * q.radial + 1)
        wt = np.full(x.size, x[1] - x[0])
        wt[[0, -1]] *= 0.5
        return x[:, None], wt, x[1] - x[0], 0.0
    panels = max(1, q.radial // 8)
    rho, wr = quadrature.fixed_rule(0.0, R, max_len=R / panels, order=8)
    dr = R / panels / 2.0
    if n == 2:
        th = 2.0 * math.pi * np.arange(q.angular) / q.angular
        dirs = np.stack([np.cos(th), np.sin(th)], axis=1)
        wd = np.full(q.angular, 2.0 * math.pi / q.angular)
        arc = 2.0 * math.pi * R / q.angular
    else:
        mu, wmu = np.polynomial.legendre.leggauss(max(2, q.angular // 2))
        ph = 2.0 * math.pi * np.arange(q.angular) / q.angular
        st = np.sqrt(1.0 - mu**2)
        dirs = np.stack([np.outer(st, np.cos(ph)).ravel(), np.outer(st, np.sin(ph)).ravel(),
                         np.repeat(mu, ph.size)], axis=1)
        wd = np.repeat(wmu, ph.size) * (2.0 * math.pi / q.angular)
        arc = 2.0 * math.pi * R / q.angular
    pts = (rho[:, None, None] * dirs[None, :, :]).reshape(-1, n)
    wt = (wr[:, None] * rho[:, None] ** (n - 1) * wd[None, :]).ravel()
    return pts, wt, dr, arc


def functional_I(real, w, r, quad=None):
    """``I_j(r)`` for one realisation; ``r`` may be an array (one field, many windows)."""
    q = quad or Quadrature()
    rs = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(rs < 0):
        raise ValueError("r must be non-negative")
    s = real.sample
    if w.n != s.n:
        raise IndexMismatch("weight and field dimensions differ")
    out = np.zeros(rs.shape)
    if q.method == "plane-wave":
        # r^-n int f_{j,r}(x) cos<lambda,x> dx = transform(|lambda|); the sine part vanishes
        lam = s.radii
        cz = s.amplitudes * s.zeta
        for k, rr in enumerate(rs):
            if rr > 0:
                out[k] = math.fsum(cz * w.transform(lam, rr))
    else:
        lam_max = float(np.max(s.radii)) if s.N else 0.0
        for k, rr in enumerate(rs):
            if rr == 0:
                continue
            R = w.spatial_radius(rr)
            pts, wt, dr, arc = _product_rule(s.n, R, q)
            if lam_max > 0:
                need = 2.0 * math.pi / lam_max / q.nodes_per_wavelength
                if max(dr, arc) > need:
                    raise ResolutionTooCoarse(
                        f"node spacing {max(dr, arc):.3g} exceeds {need:.3g} "
                        f"({q.nodes_per_wavelength} nodes per wavelength 2pi/{lam_max:.3g})")
            vals = real.evaluate(pts)
            f = w.spatial_value(np.linalg.norm(pts, axis=1), rr)
            out[k] = math.fsum(wt * f * vals) / rr**s.n
    return out if np.ndim(r) else float(out[0])


def normalize(I, consts, r, t):
    """``X_{r,j}(t)`` from ``I_j(r t^(1/n))``; exactly 0 at t = 0."""
    t = np.asarray(t, dtype=float)
    I = np.asarray(I, dtype=float)
    if np.any((t < 0) | (t > 1)):
        raise ValueError("t must lie in [0, 1]")
    if not r > 0:
        raise ValueError("r must be positive")
    X = t * r ** (consts.alpha / 2.0) * I / consts.scale
    X = np.where(t == 0, 0.0, X)
    return X if X.ndim else float(X)


# ---------------------------------------------------------------- spectral oracle

def spectral_covariance(model, w, r1, r2, rtol=1e-9, atol=0.0):
    """``Cov(I_j(r1), I_j(r2)) = int T_r1(|lambda|) T_r2(|lambda|) phi`` with T the weight transform.

    For ``r1 == r2`` and an oscillating profile, ``g^2`` beyond
    ``r |z - a_j| = P_OSC`` is replaced by its mean square.
    """
    _check_weight(model, w)
    r1, r2 = float(r1), float(r2)
    if r1 <= 0 or r2 <= 0:
        return quadrature.ZERO
    rmax = max(r1, r2)
    period = w.period if w.period is not None else 2.0 * math.pi
    max_len = 0.25 * period / rmax
    a = w.a
    ms = w.mean_square
    if r1 == r2 and ms is not None:
        cut = P_OSC / r1

        def F(z):
            d = np.abs(z - a)
            near = w.transform(z, r1) ** 2
            far = ms(r1 * np.maximum(d, cut))
            if w.mirror:
                far = far + w.g(r1 * (z + a)) ** 2
            return np.where(d <= cut, near, far)

        brk = [x for x in (a - cut, a + cut) if x > 0]
        inner = spectral_integral(model, F, 0.0, a + cut, max_len=max_len, breaks=brk, rtol=rtol, atol=atol)
        # the mean-square tail decays algebraically; 40 e-folds past the cut it is negligible
        lo = a + cut
        knots = list(lo * np.exp(np.arange(1.0, 40.0)))
        outer = spectral_integral(model, F, lo, lo * math.exp(40.0), breaks=knots, rtol=rtol, atol=atol)
        return inner + outer
    hi = math.inf
    if math.isfinite(w.s_max):
        hi = a + w.s_max / min(r1, r2)

    def F(z):
        return w.transform(z, r1) * w.transform(z, r2)

    return spectral_integral(model, F, 0.0, hi, max_len=max_len, rtol=rtol, atol=atol)


def spectral_variance(model, w, r, rtol=1e-9, atol=0.0):
    """Exact variance of ``I_j(r)`` (value only; see ``spectral_covariance`` for the error)."""
    if not r > 0:
        return 0.0
    return spectral_covariance(model, w, r, r, rtol=rtol, atol=atol).value


def oracle_matrix(model, w, consts, r, tgrid):
    """Covariance of ``X_{r,j}(t)`` over ``tgrid`` implied by the spectral oracle."""
    tgrid = np.asarray(tgrid, dtype=float)
    m = tgrid.size
    K = np.zeros((m, m))
    rt = r * tgrid ** (1.0 / model.n)
    fac = tgrid * r ** (consts.alpha / 2.0) / consts.scale
    for p in range(m):
        for q in range(p, m):
            if tgrid[p] > 0 and tgrid[q] > 0:
                v = spectral_covariance(model, w, rt[p], rt[q]).value
                K[p, q] = K[q, p] = fac[p] * fac[q] * v
    return K


# ---------------------------------------------------------------- Q, R, S

def _terms(model, consts, x, reflected):
    """Bracketed density combination and the factor in front of its square root."""
    comps = model.components
    n, j, a = model.n, consts.j, consts.a
    hj0 = consts.h0
    x = np.asarray(x, dtype=float)
    xa = x ** (1.0 - consts.alpha)
    c0 = comps[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        if not reflected:
            b = np.zeros_like(x)
            if j != 0:
                b = b + comps[j].h(x) / hj0
            b = b + xa * c0.h(x + a) / (hj0 * (x + a) ** (n - c0.alpha))
            for i, c in enumerate(comps[1:], start=1):
                if i != j:
                    s = x - c.a + a
                    b = b + xa * c.h(s) / (hj0 * np.abs(s) ** (1.0 - c.alpha))
            pre = (a + x) ** ((n - 1) / 2.0) / math.sqrt(consts.V)
        else:
            b = comps[j].h(-x) / hj0
            b = b + xa * c0.h(a - x) / (hj0 * (a - x) ** (n - c0.alpha))
            for i, c in enumerate(comps[1:], start=1):
                if i != j:
                    s = a - x - c.a
                    b = b + xa * c.h(s) / (hj0 * np.abs(s) ** (1.0 - c.alpha))
            pre = np.maximum(1.0 - x / a, 0.0) ** ((n - 1) / 2.0)
    return pre, b


def _square_dev(pre, b):
    y = pre * np.sqrt(b)
    # (y - 1)^2 with y - 1 formed as (y^2 - 1) / (y + 1) to keep digits near y = 1
    return ((y * y - 1.0) / (y + 1.0)) ** 2


def q_factor(model, consts, r, rho, strict=True):
    """``Q_r(rho)``: squared deviation of the normalised local density from its power law."""
    x = np.asarray(rho, dtype=float) / r
    pre, b = _terms(model, consts, x, reflected=False)
    if strict and np.any(~np.isfinite(b)):
        raise SingularPoint("Q_r evaluated at a singular point of a shifted envelope")
    out = _square_dev(pre, b)
    return out if out.ndim else float(out)


def q_bar_factor(model, consts, r, rho, strict=True):
    """``Q-bar_r(rho)`` for the inner region; identically 1 once rho >= r a_j (the (.)_+ factor is 0)."""
    if consts.j == 0:
        raise IndexMismatch("the inner-region factor is defined for j != 0 only")
    x = np.asarray(rho, dtype=float) / r
    pre, b = _terms(model, consts, x, reflected=True)
    inside = x < consts.a
    if strict and np.any(inside & ~np.isfinite(b)):
        raise SingularPoint("Q-bar_r evaluated at a singular point of a shifted envelope")
    out = np.where(inside, _square_dev(pre, np.where(inside, b, 0.0)), 1.0)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class ConvergenceValue:
    value: float
    error: float


def _guard(q):
    def safe(rho):
        with np.errstate(invalid="ignore", divide="ignore"):
            v = q(rho)
        return np.where(np.isfinite(v), v, 0.0)
    return safe


def _floor(w, consts, c):
    """Absolute tolerance matching the rounding level of Q times the limit integral."""
    return Q_FLOOR * weighted_radial_integral(w, consts.alpha, c, rtol=1e-6).value


def convergence_R(model, w, consts, r, t=1.0, rtol=1e-8):
    """``R_r(t) = t^2 omega_n int_0^inf g^2(rho t^(1/n)) rho^(alpha_j - 1) Q_r(rho) d rho``."""
    _check_weight(model, w, consts.j)
    t = float(t)
    if t == 0:
        return ConvergenceValue(0.0, 0.0)
    n, a = model.n, consts.a
    sing = [(r * (c.a - a), c.alpha) for c in model.components[1:] if c.a > a]
    brk = [r * (c.a - a + s) for c in model.components for s in c.h.kinks() if c.a - a + s > 0]
    floor = _floor(w, consts, t ** (1.0 / n))
    res = weighted_radial_integral(w, consts.alpha, t ** (1.0 / n), extra=_guard(lambda p: q_factor(model, consts, r, p, strict=False)),
                                   singular=sing, breaks=sorted(set(brk)), rtol=rtol, atol=floor)
    f = t * t * sphere_area(n)
    return ConvergenceValue(f * res.value, f * max(res.error, floor))


def convergence_S(model, w, consts, r, t=1.0, rtol=1e-8):
    """``S_r(t)``: as ``R_r`` with the inner-region factor Q-bar_r; j != 0 only."""
    if consts.j == 0:
        raise IndexMismatch("S_r(t) is defined for j != 0 only (the inner region |lambda| < a_0 is empty)")
    _check_weight(model, w, consts.j)
    t = float(t)
    if t == 0:
        return ConvergenceValue(0.0, 0.0)
    n, a = model.n, consts.a
    c0 = model.components[0]
    sing = [(r * (a - c.a), c.alpha) for c in model.components[1:consts.j]]
    brk = [r * a]
    if c0.alpha < 1.0:
        sing.append((r * a, c0.alpha))
    for i, c in enumerate(model.components):
        for s in c.h.kinks():
            p = r * (a - c.a - s)
            if 0 < p < r * a:
                brk.append(p)
    floor = _floor(w, consts, t ** (1.0 / n))
    res = weighted_radial_integral(w, consts.alpha, t ** (1.0 / n),
                                   extra=_guard(lambda p: q_bar_factor(model, consts, r, p, strict=False)),
                                   singular=sing, breaks=sorted(set(brk)), rtol=rtol, atol=floor)
    f = t * t * sphere_area(n)
    return ConvergenceValue(f * res.value, f * max(res.error, floor))
