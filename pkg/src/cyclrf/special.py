"""Bessel functions of the orders needed for n = 1, 2, 3.

Integer orders are taken from ``scipy.special`` (Cephes); half-integer
orders use their elementary closed forms, switching to the power series
where the closed form cancels.
"""

import math

import numpy as np
from scipy import special as sp

from .errors import UnsupportedOrder

SUPPORTED_ORDERS = (-0.5, 0.0, 0.5, 1.0, 1.5)
SUPPORTED_DIMENSIONS = (1, 2, 3)

# below this argument the power series is used for x**-nu * J_nu(x)
_SERIES_CUTOFF = 1.0
_SERIES_TERMS = 16


def _check_order(nu):
    nu = float(nu)
    if nu not in SUPPORTED_ORDERS:
        raise UnsupportedOrder(f"Bessel order {nu} not supported; use one of {SUPPORTED_ORDERS}")
    return nu


def check_dimension(n):
    if n not in SUPPORTED_DIMENSIONS:
        raise UnsupportedOrder(f"dimension n={n} not supported; use one of {SUPPORTED_DIMENSIONS}")
    return int(n)


def _ratio_series(nu, x):
    """x**-nu * J_nu(x) from the power series (accurate for small x)."""
    q = -0.25 * x * x
    term = np.full_like(x, 1.0 / math.gamma(nu + 1.0))
    total = term.copy()
    for k in range(1, _SERIES_TERMS):
        term = term * q / (k * (k + nu))
        total = total + term
    return total / 2.0**nu


def bessel_ratio(nu, x):
    """``J_nu(x) / x**nu`` with its analytic limit ``1 / (2**nu Gamma(nu+1))`` at 0."""
    nu = _check_order(nu)
    scalar = np.ndim(x) == 0
    x = np.abs(np.asarray(x, dtype=float))
    out = np.empty_like(x)
    small = x < _SERIES_CUTOFF
    out[small] = _ratio_series(nu, x[small])
    big = ~small
    xb = x[big]
    if nu == -0.5:
        out[big] = math.sqrt(2.0 / math.pi) * np.cos(xb)
    elif nu == 0.0:
        out[big] = sp.j0(xb)
    elif nu == 0.5:
        out[big] = math.sqrt(2.0 / math.pi) * np.sin(xb) / xb
    elif nu == 1.0:
        out[big] = sp.j1(xb) / xb
    else:
        out[big] = math.sqrt(2.0 / math.pi) * (np.sin(xb) / xb - np.cos(xb)) / (xb * xb)
    return float(out) if scalar else out


def besselj(nu, x):
    """Bessel function of the first kind J_nu(x) for x >= 0 and nu in SUPPORTED_ORDERS."""
    nu = _check_order(nu)
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("besselj is defined here for x >= 0 only")
    if nu == 0.0:
        out = sp.j0(x)
    elif nu == 1.0:
        out = sp.j1(x)
    elif nu == -0.5:
        with np.errstate(divide="ignore"):
            out = np.sqrt(2.0 / (math.pi * x)) * np.cos(x)
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(x > 0, bessel_ratio(nu, x) * x**nu, 0.0)
    return float(out) if scalar else np.asarray(out)


def bessel_modulus_sq(nu, x):
    """J_nu(x)**2 + Y_nu(x)**2, a smooth, decreasing envelope of J_nu(x)**2."""
    nu = _check_order(nu)
    x = np.asarray(x, dtype=float)
    if nu in (-0.5, 0.5):
        return 2.0 / (math.pi * x)
    if nu == 1.5:
        return 2.0 / (math.pi * x) * (1.0 + 1.0 / (x * x))
    return sp.jv(nu, x) ** 2 + sp.yv(nu, x) ** 2


def sphere_area(n):
    """Surface area of the unit sphere in R^n, 2 pi^(n/2) / Gamma(n/2)."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def unit_ball_volume(n):
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


def radial_kernel(n, x):
    """Normalised isotropic kernel 2^nu Gamma(nu+1) J_nu(x) / x^nu, nu = (n-2)/2.

    Equals cos(x), J_0(x) and sin(x)/x for n = 1, 2, 3; its value at 0 is 1.
    """
    check_dimension(n)
    x = np.asarray(x, dtype=float)
    if n == 1:
        return np.cos(x)
    if n == 2:
        return sp.j0(x)
    return np.sinc(x / math.pi)
