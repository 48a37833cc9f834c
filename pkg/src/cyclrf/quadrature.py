"""Vectorised adaptive Gauss-Legendre quadrature.

The integrals in this package are radial and of the form

    int_lo^hi G(z) |z - c|**(beta - 1) dz

with ``G`` bounded (possibly oscillatory) and an integrable algebraic
singularity at ``c``.  Panels adjacent to ``c`` are integrated in the
variable ``w = |z - c|**beta``, in which the integrand ``G(z(w)) / beta``
is bounded; the remaining panels are integrated directly.  Every panel is
evaluated with a 12- and a 24-point Gauss-Legendre rule and the difference
is used as its error estimate; panels are bisected until the sum of
estimates meets ``max(atol, rtol * |value|)``.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import QuadratureFailure

_X12, _W12 = np.polynomial.legendre.leggauss(12)
_X24, _W24 = np.polynomial.legendre.leggauss(24)

_PLAIN, _RIGHT, _LEFT = 0, 1, -1


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float
    panels: int = 0

    def __iter__(self):
        yield self.value
        yield self.error

    def __add__(self, other):
        return QuadResult(self.value + other.value, self.error + other.error, self.panels + other.panels)


ZERO = QuadResult(0.0, 0.0, 0)


def _knots(p, q, max_len, extra):
    pts = {p, q}
    pts.update(x for x in extra if p < x < q)
    pts = sorted(pts)
    out = [pts[0]]
    for a, b in zip(pts[:-1], pts[1:]):
        if np.isfinite(max_len) and b - a > max_len:
            m = int(math.ceil((b - a) / max_len))
            out.extend(np.linspace(a, b, m + 1)[1:].tolist())
        else:
            out.append(b)
    return np.asarray(out)


def _initial_panels(lo, hi, center, beta, breaks, max_len, knots):
    """Panels as (a, b, kind) arrays in their own integration variable."""
    # the substitution only pays off for a genuine singularity (beta < 1)
    singular = center is not None and beta < 1.0
    cuts = {lo, hi}
    if singular and lo < center < hi:
        cuts.add(center)
    cuts.update(b for b in breaks if lo < b < hi)
    cuts = sorted(cuts)
    A, B, K = [], [], []
    for p, q in zip(cuts[:-1], cuts[1:]):
        z = _knots(p, q, max_len, knots)
        if singular and p == center:
            x = (z - center) ** beta
            kind = _RIGHT
        elif singular and q == center:
            x = ((center - z) ** beta)[::-1]
            kind = _LEFT
        else:
            x = z
            kind = _PLAIN
        A.append(x[:-1])
        B.append(x[1:])
        K.append(np.full(len(x) - 1, kind))
    return np.concatenate(A), np.concatenate(B), np.concatenate(K)


def _map(x, kind, center, beta):
    """Physical abscissae and the Jacobian/weight factor for panel nodes."""
    if center is None:
        return x, np.ones_like(x)
    k = kind[:, None]
    inv = 1.0 / beta
    with np.errstate(divide="ignore", invalid="ignore"):
        step = np.abs(x) ** inv
        z = np.where(k == _RIGHT, center + step, np.where(k == _LEFT, center - step, x))
        plain_w = np.abs(x - center) ** (beta - 1.0) if beta != 1.0 else np.ones_like(x)
        plain_w = np.where(np.isinf(plain_w), 0.0, plain_w)
        factor = np.where(k == _PLAIN, plain_w, inv)
    return z, factor


def _evaluate(G, a, b, kind, center, beta):
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    x = np.concatenate([mid[:, None] + half[:, None] * _X12, mid[:, None] + half[:, None] * _X24], axis=1)
    z, factor = _map(x, kind, center, beta)
    f = np.asarray(G(z), dtype=float) * factor
    if not np.all(np.isfinite(f)):
        raise QuadratureFailure("integrand is not finite on a quadrature node")
    q12 = half * (f[:, :12] @ _W12)
    q24 = half * (f[:, 12:] @ _W24)
    scale = half * (np.abs(f[:, 12:]) @ _W24)
    return q24, np.abs(q24 - q12), scale


def integrate(G, lo, hi, *, center=None, power=1.0, breaks=(), knots=(), max_len=np.inf,
              rtol=1e-10, atol=1e-14, max_panels=400_000, max_rounds=60):
    """Adaptive quadrature of ``G(z) * |z - center|**(power - 1)`` over ``[lo, hi]``.

    ``breaks`` are points where ``G`` is not smooth; ``knots`` are extra
    initial panel boundaries; ``max_len`` caps the initial panel length
    (half an oscillation period is a good choice).  Returns a ``QuadResult``.
    """
    lo, hi = float(lo), float(hi)
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise QuadratureFailure("integration limits must be finite")
    if hi < lo:
        raise ValueError("integrate requires lo <= hi")
    if hi == lo:
        return ZERO
    beta = float(power)
    if beta <= 0:
        raise ValueError("power must be positive for an integrable singularity")
    a, b, kind = _initial_panels(lo, hi, center, beta, breaks, max_len, knots)
    val, err, scale = _evaluate(G, a, b, kind, center, beta)
    done_v = done_e = 0.0
    npanel = len(a)
    for _ in range(max_rounds):
        total = done_v + val.sum()
        tol = max(atol, rtol * abs(total))
        if done_e + err.sum() <= tol:
            return QuadResult(float(total), float(done_e + err.sum()), npanel)
        # panels whose error is at rounding level or within their share are frozen
        share = tol / max(len(val), 1)
        settled = (err <= 0.5 * share) | (err <= 64 * np.finfo(float).eps * scale)
        if settled.all():
            return QuadResult(float(total), float(done_e + err.sum()), npanel)
        done_v += val[settled].sum()
        done_e += err[settled].sum()
        a, b, kind = a[~settled], b[~settled], kind[~settled]
        m = 0.5 * (a + b)
        a, b, kind = np.concatenate([a, m]), np.concatenate([m, b]), np.concatenate([kind, kind])
        npanel += len(a) // 2
        if npanel > max_panels:
            break
        val, err, scale = _evaluate(G, a, b, kind, center, beta)
    raise QuadratureFailure(
        f"no convergence on [{lo:g}, {hi:g}]: error {done_e + err.sum():.3g} after {npanel} panels"
    )


def integrate_pieces(f, lo, hi, *, singular=(), breaks=(), knots=(), max_len=np.inf, **kw):
    """Integrate ``f`` over ``[lo, hi]`` with several algebraic singularities.

    ``singular`` lists ``(c, beta)`` pairs meaning ``f(z) ~ |z - c|**(beta - 1)``
    near ``c``.  The interval is cut halfway between neighbouring singular
    points and each piece is handed to ``integrate`` with its own centre.
    """
    pts = sorted((float(c), float(bt)) for c, bt in singular if lo <= c <= hi)
    if not pts:
        return integrate(f, lo, hi, breaks=breaks, knots=knots, max_len=max_len, **kw)
    edges = [lo] + [0.5 * (pts[i][0] + pts[i + 1][0]) for i in range(len(pts) - 1)] + [hi]
    total = ZERO
    for (c, bt), p, q in zip(pts, edges[:-1], edges[1:]):
        if q <= p:
            continue

        def G(z, c=c, bt=bt):
            d = np.maximum(np.abs(z - c), 1e-300)
            return f(z) * d ** (1.0 - bt)

        inner = [x for x in breaks if p < x < q]
        total = total + integrate(G, p, q, center=c, power=bt, breaks=inner, knots=knots,
                                  max_len=max_len, **kw)
    return total


def fixed_rule(lo, hi, *, center=None, power=1.0, breaks=(), max_len=np.inf, order=24):
    """Non-adaptive Gauss-Legendre nodes and weights for the same panel layout.

    The weights include the singular factor, so ``sum(w * G(z))`` approximates
    ``int G(z) |z - center|**(power - 1) dz``.  Useful when one integrand
    family is integrated for many parameter values at once.
    """
    a, b, kind = _initial_panels(float(lo), float(hi), center, float(power), breaks, max_len, ())
    xg, wg = np.polynomial.legendre.leggauss(order)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    x = mid[:, None] + half[:, None] * xg
    z, factor = _map(x, kind, center, float(power))
    w = half[:, None] * wg * factor
    return z.ravel(), w.ravel()
