"""Radial weight families and their Fourier profiles.

A weight ``f_{j,r}`` is matched to singularity ``j`` (frequency ``a_j``) when
the Fourier transform of ``r**-n f_{j,r}`` is ``g_j(r(|lambda| - a_j))`` for
an even profile ``g_j`` with ``g_j(s)**2 <= C / s**n`` beyond ``s_0``.  A
``RadialWeight`` carries the spatial side, the Fourier side and the decay
certificate ``(s_0, C)`` together.

Transform convention: ``hat f(lambda) = int e^{i <lambda, x>} f(x) dx``.
"""

from dataclasses import dataclass, field
import math
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from . import quadrature
from .errors import IndexMismatch, ModelError, NotIntegrable
from .special import (bessel_modulus_sq, bessel_ratio, check_dimension, radial_kernel,
                      sphere_area)

# Gaussian profiles are treated as zero beyond this argument (exp(-72) ~ 5e-32)
_GAUSS_SMAX = 12.0


@dataclass(frozen=True, eq=False)
class RadialWeight:
    """One weight family ``f_{j,r}`` with its Fourier profile ``g_j``.

    ``spatial(rho, r)`` gives ``f_{j,r}`` at ``|x| = rho``; ``support`` is the
    spatial support radius in units of ``r`` (``None`` when unbounded, then
    ``reach`` bounds the region that matters).  ``mean_square`` is a smooth
    envelope of ``g**2`` used for oscillatory tails, ``period`` the oscillation
    period of ``g**2`` and ``s_max`` the argument beyond which ``g`` vanishes
    numerically.  ``mirror`` marks one-dimensional modulated weights whose
    exact transform also carries ``g(r(|lambda| + a))``.
    """

    n: int
    j: int
    a: float
    profile: Callable
    s0: float
    C: float
    kind: str = "custom"
    spatial: Optional[Callable] = None
    support: Optional[float] = None
    reach: float = math.inf
    mean_square: Optional[Callable] = None
    period: Optional[float] = None
    s_max: float = math.inf
    mirror: bool = False
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        check_dimension(self.n)
        if self.j < 0:
            raise ModelError("matched index j must be non-negative")
        if (self.j == 0) != (self.a == 0.0):
            raise IndexMismatch("a_j = 0 exactly when j = 0")

    def g(self, s):
        s = np.asarray(s, dtype=float)
        return np.asarray(self.profile(np.abs(s)), dtype=float)

    def transform(self, lam, r):
        """Exact Fourier transform of ``r**-n f_{j,r}`` at ``|lambda| = lam``."""
        lam = np.asarray(lam, dtype=float)
        out = self.g(r * (lam - self.a))
        if self.mirror:
            out = out + self.g(r * (lam + self.a))
        return out

    def spatial_value(self, rho, r):
        if self.spatial is None:
            raise ModelError(f"{self.kind} weight has no spatial profile")
        return self.spatial(np.asarray(rho, dtype=float), float(r))

    def spatial_radius(self, r):
        """Radius outside which ``f_{j,r}`` is zero or negligible."""
        if self.support is not None:
            return self.support * r
        return self.reach * r

    @classmethod
    def custom(cls, n, profile, *, j=0, a=0.0, s0=1.0, C=1.0, **kw):
        return cls(n, j, float(a), profile, float(s0), float(C), **kw)


def _donsker_profile(n):
    nu = n / 2.0
    coef = (2.0 * math.pi) ** nu

    def g(s):
        return coef * bessel_ratio(nu, s)

    return g


def make_donsker(n):
    """Ball-indicator weight ``f_{0,r} = 1{|x| <= r}``.

    Its profile is ``(2 pi)^(n/2) J_{n/2}(s) / s^(n/2)``; the certificate uses
    the monotone decrease of ``J^2 + Y^2``:  ``g(s)^2 s^n <= (2 pi)^n (J^2+Y^2)(s_0)``.
    """
    n = check_dimension(n)
    nu = n / 2.0
    s0 = 1.0
    C = (2.0 * math.pi) ** n * float(bessel_modulus_sq(nu, s0))
    coef = (2.0 * math.pi) ** n

    def mean_square(s):
        return 0.5 * coef * bessel_modulus_sq(nu, s) / s**n

    def spatial(rho, r):
        return np.where(rho <= r, 1.0, 0.0)

    return RadialWeight(n, 0, 0.0, _donsker_profile(n), s0, C, kind="donsker", spatial=spatial,
                        support=1.0, mean_square=mean_square, period=math.pi,
                        params={"kind": "donsker"})


def make_gaussian(n, j=0, a=0.0):
    """Gaussian-window weight with profile ``(2 pi)^(n/2) exp(-s^2 / 2)``.

    For ``j = 0`` the spatial side is ``exp(-|x|^2 / (2 r^2))``.  For ``j > 0``
    it is a radial wave packet concentrated at frequency ``a``: in one
    dimension ``2 cos(a x) exp(-x^2 / (2 r^2))`` (whose transform also has the
    mirror term at ``-a``), in higher dimensions the inverse Hankel transform
    of ``g(r(|lambda| - a))``, evaluated by Gauss-Legendre quadrature.
    """
    n = check_dimension(n)
    a = float(a)
    coef = (2.0 * math.pi) ** (n / 2.0)
    # g^2 s^n is maximal at s^2 = n/2
    C = coef**2 * (n / (2.0 * math.e)) ** (n / 2.0)

    def g(s):
        return coef * np.exp(-0.5 * np.asarray(s) ** 2)

    common = dict(kind="gaussian", support=None, reach=_GAUSS_SMAX, period=None, s_max=_GAUSS_SMAX,
                  params={"kind": "gaussian", "j": j, "a": a})
    if j == 0:
        if a != 0.0:
            raise IndexMismatch("a_j = 0 exactly when j = 0")

        def spatial(rho, r):
            return np.exp(-0.5 * (rho / r) ** 2)

        return RadialWeight(n, 0, 0.0, g, 0.0, C, spatial=spatial, **common)
    if not a > 0:
        raise IndexMismatch("a matched weight with j > 0 needs a_j > 0")
    if n == 1:
        def spatial(rho, r):
            return 2.0 * np.cos(a * rho) * np.exp(-0.5 * (rho / r) ** 2)

        return RadialWeight(n, j, a, g, 0.0, C, spatial=spatial, mirror=True, **common)

    v_nodes, v_weights = _panel_rule(-_GAUSS_SMAX, _GAUSS_SMAX, 32, 24)
    wn = sphere_area(n)

    def spatial(rho, r):
        rho = np.asarray(rho, dtype=float)
        keep = v_nodes > -r * a
        v, wv = v_nodes[keep], v_weights[keep]
        lam = a + v / r
        wts = wv * g(v) * lam ** (n - 1)
        flat = rho.ravel()
        out = np.empty_like(flat)
        for start in range(0, flat.size, 4096):
            sl = slice(start, start + 4096)
            out[sl] = radial_kernel(n, np.outer(flat[sl], lam)) @ wts
        return (r ** (n - 1) * wn / (2.0 * math.pi) ** n) * out.reshape(rho.shape)

    return RadialWeight(n, j, a, g, 0.0, C, spatial=spatial, **common)


def _panel_rule(lo, hi, panels, order):
    xg, wg = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(lo, hi, panels + 1)
    mid, half = 0.5 * (edges[1:] + edges[:-1]), 0.5 * np.diff(edges)
    return (mid[:, None] + half[:, None] * xg).ravel(), (half[:, None] * wg).ravel()


@dataclass(frozen=True)
class SpatialProfile:
    """Radial spatial profile ``f~(rho)`` on ``[0, radius]``.

    kinds: ``ball`` (1 on [0, 1]), ``polynomial`` (sum c_k rho^k on [0, 1]),
    ``samples`` (piecewise linear through (radii, values), zero outside).
    """

    kind: str
    coeffs: tuple = ()
    radii: tuple = ()
    values: tuple = ()

    def __post_init__(self):
        if self.kind not in ("ball", "polynomial", "samples"):
            raise ModelError(f"unknown spatial profile kind {self.kind!r}")
        if self.kind == "samples":
            r = np.asarray(self.radii, dtype=float)
            if len(r) < 2 or len(r) != len(self.values) or np.any(np.diff(r) <= 0) or r[0] < 0:
                raise ModelError("samples profile needs >= 2 increasing radii with matching values")

    @property
    def radius(self):
        return float(self.radii[-1]) if self.kind == "samples" else 1.0

    @property
    def breaks(self):
        return tuple(self.radii) if self.kind == "samples" else ()

    def __call__(self, rho):
        rho = np.asarray(rho, dtype=float)
        inside = (rho >= 0) & (rho <= self.radius)
        if self.kind == "ball":
            val = np.ones_like(rho)
        elif self.kind == "polynomial":
            val = np.polynomial.polynomial.polyval(rho, np.asarray(self.coeffs, dtype=float))
        else:
            val = np.interp(rho, self.radii, self.values, left=0.0, right=0.0)
        return np.where(inside, val, 0.0)

    def norm(self, n, p):
        res = quadrature.integrate(lambda x: np.abs(self(x)) ** p * x ** (n - 1), 0.0, self.radius,
                                   breaks=self.breaks, rtol=1e-10, atol=1e-300)
        return sphere_area(n) * res.value


def radial_fourier(f, n, k, radius, *, breaks=(), rtol=1e-11, atol=1e-14):
    """``int_{|x| <= radius} e^{i<lambda,x>} f(|x|) dx`` at ``|lambda| = k`` (order (n-2)/2 Hankel)."""
    wn = sphere_area(n)
    out = np.empty(np.shape(k))
    flat = np.abs(np.ravel(np.asarray(k, dtype=float)))
    for idx, kk in enumerate(flat):
        max_len = math.pi / kk if kk > 0 else math.inf
        res = quadrature.integrate(lambda x: f(x) * radial_kernel(n, kk * x) * x ** (n - 1), 0.0,
                                   radius, breaks=breaks, max_len=max_len, rtol=rtol, atol=atol)
        out.flat[idx] = wn * res.value
    return out if np.ndim(k) else float(out)


def _check_profile(desc, n):
    l1, l2 = desc.norm(n, 1), desc.norm(n, 2)
    if not (l1 > 1e-14 and math.isfinite(l1) and math.isfinite(l2)):
        raise NotIntegrable(f"{desc.kind} profile is not essentially non-zero / integrable (L1={l1:g})")
    return l1, l2


def hankel_profile(desc, n, a, grid):
    """Fourier profile of a spatial descriptor sampled at ``|lambda| = a + s`` for ``s`` in ``grid``.

    ``r`` is scaled out: the transform is computed for the unit-scale profile,
    so ``f_{0,r}(x) = f~(|x| / r)`` has profile ``g(r |lambda|)``.
    """
    n = check_dimension(n)
    _check_profile(desc, n)
    lam = float(a) + np.asarray(grid, dtype=float)
    return radial_fourier(desc, n, lam, desc.radius, breaks=desc.breaks)


class TabulatedProfile:
    """Cubic-spline interpolant of a Fourier profile on ``[0, s_tab]``.

    Beyond the table the transform is computed directly.
    """

    def __init__(self, desc, n, s_tab=None, step=None):
        self.desc, self.n = desc, n
        R = desc.radius
        self.s_tab = s_tab if s_tab is not None else 200.0 / R
        step = step if step is not None else 0.05 / R
        self.nodes = np.linspace(0.0, self.s_tab, int(math.ceil(self.s_tab / step)) + 1)
        self.values = hankel_profile(desc, n, 0.0, self.nodes)
        # even extension keeps the spline's slope at 0 equal to zero
        x = np.concatenate([-self.nodes[:0:-1], self.nodes])
        y = np.concatenate([self.values[:0:-1], self.values])
        self._spline = CubicSpline(x, y)

    def __call__(self, s):
        s = np.abs(np.asarray(s, dtype=float))
        out = np.asarray(self._spline(np.minimum(s, self.s_tab)), dtype=float)
        far = s > self.s_tab
        if np.any(far):
            out = np.array(out, copy=True)
            out[far] = radial_fourier(self.desc, self.n, s[far], self.desc.radius, breaks=self.desc.breaks)
        return out


def make_tabulated(desc, n):
    """Weight ``f_{0,r}(x) = f~(|x| / r)`` with a numerically tabulated profile.

    The certificate is estimated empirically: ``C`` is 1.5 times the largest
    ``g^2 s^n`` seen on a probe grid in ``[s_0, 10 s_tab]`` with ``s_0 = 1``.
    """
    n = check_dimension(n)
    _check_profile(desc, n)
    prof = TabulatedProfile(desc, n)
    probe = np.concatenate([prof.nodes[prof.nodes >= 1.0],
                            np.geomspace(prof.s_tab, 10 * prof.s_tab, 64)[1:]])
    C = 1.5 * float(np.max(prof(probe) ** 2 * probe**n))

    def spatial(rho, r):
        return desc(rho / r)

    return RadialWeight(n, 0, 0.0, prof, 1.0, C, kind="tabulated", spatial=spatial, support=desc.radius,
                        period=math.pi / desc.radius,
                        params={"kind": "tabulated", "spatial": {"kind": desc.kind, "coeffs": list(desc.coeffs),
                                                                 "radii": list(desc.radii),
                                                                 "values": list(desc.values)}})


def check_decay(w, grid):
    """Check ``g^2(s) <= C / s^n`` on ``grid``; returns (holds, worst ratio g^2 s^n)."""
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        return True, 0.0
    if np.any(grid < w.s0):
        raise ValueError(f"decay grid must lie in [s_0, inf) = [{w.s0}, inf)")
    ratio = w.g(grid) ** 2 * grid**w.n
    worst = float(np.max(ratio))
    return bool(worst <= w.C), worst


def verify_pair(w, r, lam_grid, rtol=1e-12):
    """Largest gap between the numerical transform of ``r^-n f_{j,r}`` and ``w.transform``."""
    if w.spatial is None:
        raise ModelError("verify_pair needs a weight with a spatial profile")
    r = float(r)
    radius = w.spatial_radius(r)
    brk = [w.support * r] if w.support is not None else []
    lam = np.abs(np.asarray(lam_grid, dtype=float))
    # absolute tolerance on the scale of the profile, not of each (possibly tiny) value
    atol = rtol * r**w.n * max(float(np.max(np.abs(w.g(np.linspace(0.0, 4.0, 9))))), 1e-300)
    numeric = radial_fourier(lambda x: w.spatial_value(x, r), w.n, lam, radius, breaks=brk,
                             rtol=rtol, atol=atol) / r**w.n
    return float(np.max(np.abs(numeric - w.transform(lam, r))))


def weight_from_dict(d, n):
    """Build a weight from its configuration mapping (see README for the schema)."""
    kind = d.get("kind")
    if kind == "donsker":
        if d.get("j", 0) != 0:
            raise IndexMismatch("the Donsker weight is matched to j = 0")
        return make_donsker(n)
    if kind == "gaussian":
        return make_gaussian(n, int(d.get("j", 0)), float(d.get("a", 0.0)))
    if kind == "tabulated":
        sp = d.get("spatial") or {}
        desc = SpatialProfile(sp.get("kind", "ball"), tuple(sp.get("coeffs", ())),
                              tuple(sp.get("radii", ())), tuple(sp.get("values", ())))
        return make_tabulated(desc, n)
    raise ModelError(f"unknown weight kind {kind!r}; expected donsker | gaussian | tabulated")
