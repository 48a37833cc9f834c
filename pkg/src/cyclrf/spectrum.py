"""Isotropic spectral densities with power-law singularities on spheres.

A model is a sum of terms

    h_0(z) / z**(n - alpha_0)  +  sum_i h_i(z - a_i) / |z - a_i|**(1 - alpha_i)

in the frequency magnitude ``z = |lambda|``, with envelopes drawn from a small
parametric family.  All radial integrals ``int F(z) dPhi(z)`` go through
``spectral_integral``, which removes each singularity with the substitution
``w = |z - a_i|**alpha_i`` before quadrature.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from . import quadrature
from .errors import MassNotFinite, ModelError, SingularPoint
from .special import check_dimension, radial_kernel, sphere_area

DEFAULT_RTOL = 1e-6
DEFAULT_ATOL = 1e-8

# exp(-_TAIL_EXP) is treated as zero when truncating exponential envelopes
_TAIL_EXP = 46.0


@dataclass(frozen=True)
class Envelope:
    """Bounded, non-negative envelope ``h(s)`` of one singular term.

    kinds: ``constant`` (c), ``exponential`` (c * exp(-beta |s|)),
    ``plateau`` (c on |s| <= L, else 0).
    """

    kind: str
    c: float = 1.0
    beta: float = 0.0
    L: float = math.inf

    def __post_init__(self):
        if self.kind not in ("constant", "exponential", "plateau"):
            raise ModelError(f"unknown envelope kind {self.kind!r}")
        if not (self.c > 0 and math.isfinite(self.c)):
            raise ModelError("envelope must satisfy 0 < h(0) < inf")
        if self.kind == "exponential" and not self.beta > 0:
            raise ModelError("exponential envelope needs beta > 0")
        if self.kind == "plateau" and not (self.L > 0 and math.isfinite(self.L)):
            raise ModelError("plateau envelope needs a finite half-width L > 0")

    @classmethod
    def constant(cls, c=1.0):
        return cls("constant", c=float(c))

    @classmethod
    def exponential(cls, c=1.0, beta=1.0):
        return cls("exponential", c=float(c), beta=float(beta))

    @classmethod
    def plateau(cls, c=1.0, L=1.0):
        return cls("plateau", c=float(c), L=float(L))

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "constant":
            return np.full_like(s, self.c)
        if self.kind == "exponential":
            return self.c * np.exp(-self.beta * np.abs(s))
        return np.where(np.abs(s) <= self.L, self.c, 0.0)

    @property
    def sup(self):
        return self.c

    def at0(self):
        return self.c

    def extent(self, n=1, a=0.0):
        """Half-width beyond which the envelope is zero or negligible."""
        if self.kind == "plateau":
            return self.L
        if self.kind == "constant":
            return math.inf
        return (_TAIL_EXP + (n - 1) * math.log(2.0 + a + _TAIL_EXP / self.beta)) / self.beta

    @property
    def params(self):
        if self.kind == "constant":
            return {"c": self.c}
        if self.kind == "exponential":
            return {"c": self.c, "beta": self.beta}
        return {"c": self.c, "L": self.L}

    def kinks(self):
        return (-self.L, self.L) if self.kind == "plateau" else ()


@dataclass(frozen=True)
class SingularComponent:
    a: float
    alpha: float
    h: Envelope


@dataclass(frozen=True)
class CovarianceEvaluation:
    lag: float
    value: float
    error: float


@dataclass(frozen=True)
class SpectralModel:
    """Dimension ``n`` and singular components ordered by location (a_0 = 0 first).

    With ``require_finite_mass`` (the default) construction fails unless the
    total spectral mass is finite; turning it off allows the locally defined
    models used for pointwise density and convergence computations.
    """

    n: int
    components: tuple
    require_finite_mass: bool = True
    _masses: tuple = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        n = self.n
        try:
            check_dimension(n)
        except ModelError as exc:
            raise ModelError(str(exc)) from None
        comps = self.components
        if not comps:
            raise ModelError("a model needs at least the zero-frequency component")
        if comps[0].a != 0.0:
            raise ModelError("invariant a_0 = 0 violated: first component must sit at frequency 0")
        for i, c in enumerate(comps):
            if not isinstance(c.h, Envelope):
                raise ModelError("envelopes must be Envelope instances")
            if i == 0:
                if not 0.0 < c.alpha < n:
                    raise ModelError(f"invariant 0 < alpha_0 < n violated: alpha_0={c.alpha}, n={n}")
            else:
                if not c.a > comps[i - 1].a:
                    raise ModelError("invariant a_i strictly increasing violated")
                if not 0.0 < c.alpha < 1.0:
                    raise ModelError(f"invariant 0 < alpha_i < 1 violated: alpha_{i}={c.alpha}")
        if self.require_finite_mass:
            masses = tuple(component_mass(self, i) for i in range(len(comps)))
            object.__setattr__(self, "_masses", masses)

    @classmethod
    def build(cls, n, *specs, require_finite_mass=True):
        """``SpectralModel.build(2, (0, 1.0, Envelope.exponential()), (1, .5, ...))``."""
        comps = tuple(SingularComponent(float(a), float(al), h) for a, al, h in specs)
        return cls(int(n), comps, require_finite_mass)

    @property
    def k(self):
        return len(self.components) - 1

    @property
    def singular_points(self):
        return tuple(c.a for c in self.components)

    @property
    def envelope_sup(self):
        return tuple(c.h.sup for c in self.components)

    @property
    def masses(self):
        if self._masses is None:
            object.__setattr__(self, "_masses",
                               tuple(component_mass(self, i) for i in range(len(self.components))))
        return self._masses

    @property
    def total_mass(self):
        return math.fsum(self.masses)

    def support(self, i):
        """Frequency interval carrying component ``i``."""
        c = self.components[i]
        ext = c.h.extent(self.n, c.a)
        return max(0.0, c.a - ext), c.a + ext

    @property
    def upper_frequency(self):
        return max(self.support(i)[1] for i in range(len(self.components)))

    def to_dict(self):
        return {
            "n": self.n,
            "components": [
                {"a": c.a, "alpha": c.alpha, "h": {"kind": c.h.kind, "params": c.h.params}}
                for c in self.components
            ],
        }

    @classmethod
    def from_dict(cls, d, require_finite_mass=True):
        try:
            comps = [
                SingularComponent(float(c["a"]), float(c["alpha"]),
                                  Envelope(c["h"]["kind"], **{k: float(v) for k, v in c["h"].get("params", {}).items()}))
                for c in d["components"]
            ]
            n = int(d["n"])
        except (KeyError, TypeError) as exc:
            raise ModelError(f"malformed model definition: missing or invalid field {exc}") from None
        return cls(n, tuple(comps), require_finite_mass)


def density(model, z):
    """Vectorised density; ``inf`` exactly at singular frequencies."""
    z = np.asarray(z, dtype=float)
    n = model.n
    out = np.zeros_like(z)
    with np.errstate(divide="ignore"):
        for i, c in enumerate(model.components):
            if i == 0:
                out = out + c.h(z) * z ** (c.alpha - n)
            else:
                s = z - c.a
                out = out + c.h(s) * np.abs(s) ** (c.alpha - 1.0)
    return out


def eval_density(model, lam):
    """Isotropic spectral density at frequency magnitude ``lam``."""
    lam = float(lam)
    if lam < 0:
        raise ValueError("frequency magnitude must be non-negative")
    for a in model.singular_points:
        if abs(lam - a) <= 4 * np.finfo(float).eps * max(1.0, a):
            raise SingularPoint(f"density is singular at |lambda| = {a}; integrate instead")
    return float(density(model, lam))


def _component_G(model, i, F):
    c = model.components[i]
    n = model.n
    if i == 0:
        return lambda z: F(z) * c.h(z)
    return lambda z: F(z) * z ** (n - 1) * c.h(z - c.a)


def component_integral(model, i, F, lo=0.0, hi=math.inf, *, max_len=math.inf, breaks=(),
                       rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL):
    """``omega_n * int_lo^hi F(z) z**(n-1) * term_i(z) dz`` for one component."""
    c = model.components[i]
    s_lo, s_hi = model.support(i)
    lo, hi = max(lo, s_lo), min(hi, s_hi)
    if not math.isfinite(hi):
        raise MassNotFinite(f"component {i} has an envelope without decay; integral over [.., inf) diverges")
    if hi <= lo:
        return quadrature.ZERO
    kinks = [c.a + k for k in c.h.kinks()] + list(breaks)
    res = quadrature.integrate(_component_G(model, i, F), lo, hi, center=c.a, power=c.alpha,
                               breaks=kinks, max_len=max_len, rtol=rtol, atol=atol / len(model.components))
    w = sphere_area(model.n)
    return quadrature.QuadResult(w * res.value, w * res.error, res.panels)


def spectral_integral(model, F, lo=0.0, hi=math.inf, *, max_len=math.inf, breaks=(),
                      rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL):
    """``int_{lo <= |lambda| <= hi} F(|lambda|) phi(|lambda|) d lambda``; returns a QuadResult."""
    total = quadrature.ZERO
    for i in range(len(model.components)):
        total = total + component_integral(model, i, F, lo, hi, max_len=max_len, breaks=breaks,
                                           rtol=rtol, atol=atol)
    return total


def _one(z):
    return np.ones_like(z)


def component_mass(model, i):
    return component_integral(model, i, _one, rtol=1e-12, atol=1e-15).value


def spectral_function(model, u, rtol=1e-12, atol=1e-15):
    """Spectral function Phi(u): spectral mass of the ball |lambda| <= u.

    Past half the mass, Phi is the total mass minus the tail beyond ``u``,
    which keeps Phi <= total mass and makes the error relative to the tail.
    """
    u = float(u)
    if u < 0:
        raise ValueError("u must be non-negative")
    if u == 0:
        return 0.0
    if math.isinf(u):
        return model.total_mass
    head = spectral_integral(model, _one, 0.0, u, rtol=rtol, atol=atol).value
    if not model.require_finite_mass or head <= 0.5 * model.total_mass:
        return head
    tail = spectral_integral(model, _one, u, math.inf, rtol=rtol, atol=atol).value
    return model.total_mass - tail


def covariance(model, r, tol=None, *, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL):
    """Isotropic covariance B_n(r) from the Bessel-kernel representation.

    Panels are at most half an oscillation of the kernel long, so the
    integration runs between consecutive near-zeros of J_nu(r u).
    """
    r = float(r)
    if r < 0:
        raise ValueError("lag must be non-negative")
    if tol is not None:
        atol = float(tol)
    n = model.n
    if r == 0:
        res = spectral_integral(model, _one, rtol=rtol, atol=atol)
    else:
        res = spectral_integral(model, lambda z: radial_kernel(n, r * z), max_len=math.pi / r,
                                rtol=rtol, atol=atol)
    return CovarianceEvaluation(r, res.value, res.error)


def covariance_many(model, lags, order=24, upper=math.inf):
    """Covariance at many lags from one fixed rule sized for the largest lag.

    Returns (values, error_estimates); the error is the change against the
    rule with half the nodes per panel.  Frequencies above ``upper`` are
    dropped (their mass bounds the extra error).
    """
    lags = np.asarray(lags, dtype=float)
    n = model.n
    rmax = float(lags.max()) if lags.size else 0.0
    max_len = math.pi / rmax if rmax > 0 else math.inf
    vals = np.zeros_like(lags)
    coarse = np.zeros_like(lags)
    for i, c in enumerate(model.components):
        lo, hi = model.support(i)
        if not math.isfinite(hi):
            raise MassNotFinite(f"component {i} has infinite mass")
        hi = min(hi, upper)
        if hi <= lo:
            continue
        kinks = [c.a + k for k in c.h.kinks()]
        G = _component_G(model, i, _one)
        for o, acc in ((order, vals), (order // 2, coarse)):
            z, w = quadrature.fixed_rule(lo, hi, center=c.a, power=c.alpha, breaks=kinks,
                                         max_len=max_len, order=o)
            wg = w * G(z)
            for start in range(0, lags.size, 256):
                sl = slice(start, start + 256)
                acc[sl] += radial_kernel(n, np.outer(lags[sl], z)) @ wg
    w_n = sphere_area(n)
    return w_n * vals, w_n * np.abs(vals - coarse)


def mass_quantile(model, tail=1e-9):
    """Smallest frequency ``u`` (to bisection accuracy) with mass beyond ``u`` below ``tail * total``."""
    total = model.total_mass
    lo, hi = 0.0, model.upper_frequency
    if total - spectral_function(model, hi) <= tail * total:
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if total - spectral_function(model, mid) <= tail * total:
                hi = mid
            else:
                lo = mid
            if hi - lo < 1e-3 * hi:
                break
    return hi


def lrd_diagnostic(model, T_list, step=None, tail=1e-9):
    """Cumulative ``int_0^T |B_n(r)| dr`` for each ``T`` in ``T_list``.

    The covariance is tabulated on a uniform lag grid (spacing ``step``) and
    ``|B|`` integrated by the trapezoid rule.  Frequencies carrying the last
    ``tail`` fraction of the mass are dropped, which changes ``B`` by at most
    ``tail * B(0)``.  Growth without bound along an increasing ``T_list`` is
    the long-range dependence signature.  Work grows like ``T**2``.
    """
    T_list = [float(T) for T in T_list]
    if any(T < 0 for T in T_list) or any(b < a for a, b in zip(T_list, T_list[1:])):
        raise ValueError("T_list must be non-negative and increasing")
    Tmax = max(T_list, default=0.0)
    if Tmax == 0:
        return [(T, 0.0) for T in T_list]
    upper = mass_quantile(model, tail)
    if step is None:
        step = min(0.05, math.pi / (8.0 * upper))
    m = int(math.ceil(Tmax / step))
    grid = np.linspace(0.0, Tmax, m + 1)
    vals = np.empty_like(grid)
    # blocks of lags share one rule sized for the block's largest lag
    for start in range(0, grid.size, 2048):
        sl = slice(start, start + 2048)
        vals[sl], _ = covariance_many(model, grid[sl], upper=upper)
    absb = np.abs(vals)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (absb[1:] + absb[:-1]) * np.diff(grid))])
    return [(T, float(np.interp(T, grid, cum))) for T in T_list]
