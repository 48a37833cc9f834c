"""Spectral (randomisation) simulation of isotropic Gaussian fields.

A realisation is the finite sum

    xi(x) = sum_k c_k [zeta_k cos<lambda_k, x> + eta_k sin<lambda_k, x>]

with independent standard normal ``zeta_k, eta_k``, random frequencies
``lambda_k`` and amplitudes ``c_k**2 = m_i / N_i`` for a frequency drawn from
mixture component ``i`` (mass ``m_i``, ``N_i`` draws).  Whatever the
frequencies, ``E xi(x) xi(y) = B_n(|x - y|)``.

Radii are drawn by inverse CDF separately for each singular term of the
density.  Around ``a_i`` the variable ``w = |z - a_i|**alpha_i`` turns the
power law into a bounded density, so the CDF is tabulated in ``w``.
"""

from dataclasses import dataclass
from functools import lru_cache
import math
import struct

import numpy as np

from .errors import MassNotFinite, ModelError
from .spectrum import spectral_function

_CELLS = 65536
_XG, _WG = np.polynomial.legendre.leggauss(8)

DUMP_MAGIC = b"CYCLRF01"
# magic, n (u32), pad (u32), N (u64), seed (u64), rep (u64), mass (f64)
_HEADER = struct.Struct("<8sIIQQQd")


def rng_stream(seed, rep, sub=0):
    """Counter-based stream keyed by (master seed, replication, sub-stream)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(rep), int(sub)])))


@dataclass(frozen=True, eq=False)
class _Branch:
    """One side of one singular term, tabulated in w = |z - a|**alpha."""

    comp: int
    a: float
    alpha: float
    sign: int
    w: np.ndarray
    cdf: np.ndarray

    def invert(self, u):
        """Radii for CDF levels ``u`` in [0, 1] (linear inversion of the table)."""
        w = np.interp(u * self.cdf[-1], self.cdf, self.w)
        return self.a + self.sign * w ** (1.0 / self.alpha)


def _branch(model, i, sign):
    c = model.components[i]
    n = model.n
    lo, hi = model.support(i)
    span = hi - c.a if sign > 0 else c.a - lo
    if span <= 0:
        return None
    wmax = span**c.alpha
    edges = np.linspace(0.0, wmax, _CELLS + 1)
    mid, half = 0.5 * (edges[1:] + edges[:-1]), 0.5 * np.diff(edges)
    wn = mid[:, None] + half[:, None] * _XG
    step = wn ** (1.0 / c.alpha)
    z = c.a + sign * step
    # density of z mapped to w: z^(n-1) term(z) dz = z^(n-1) h(z - a) dw / alpha
    if i == 0:
        dens = c.h(z)
    else:
        dens = z ** (n - 1) * c.h(z - c.a)
    cells = half * (dens @ _WG) / c.alpha
    cdf = np.concatenate([[0.0], np.cumsum(cells)])
    if not cdf[-1] > 0:
        return None
    return _Branch(i, c.a, c.alpha, sign, edges, cdf)


@lru_cache(maxsize=32)
def _sampler(model):
    masses = model.masses
    if not all(math.isfinite(m) for m in masses):
        raise MassNotFinite("spectral density has infinite mass; cannot sample frequencies")
    comps = []
    for i in range(len(model.components)):
        sides = [b for b in (_branch(model, i, +1), _branch(model, i, -1) if i > 0 else None) if b]
        side_mass = np.array([b.cdf[-1] for b in sides])
        comps.append((sides, side_mass / side_mass.sum()))
    return np.asarray(masses, dtype=float), comps


def _allocate(masses, N, rng):
    """Draw counts per component: stratified (>= 1 each) or multinomial when N is small."""
    p = masses / masses.sum()
    K = len(masses)
    if N < K:
        return rng.multinomial(N, p), True
    extra = (N - K) * p
    counts = 1 + np.floor(extra).astype(int)
    short = N - counts.sum()
    if short:
        order = np.argsort(-(extra - np.floor(extra)), kind="stable")
        counts[order[:short]] += 1
    return counts, False


def _directions(n, N, rng):
    if n == 1:
        return rng.choice(np.array([-1.0, 1.0]), size=(N, 1))
    v = rng.standard_normal((N, n))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


@dataclass(frozen=True, eq=False)
class FrequencySample:
    """Frequencies ``freqs`` (N x n), amplitudes and Gaussian coefficients of one realisation."""

    n: int
    freqs: np.ndarray
    amplitudes: np.ndarray
    zeta: np.ndarray
    eta: np.ndarray
    mass: float
    seed: int = 0
    rep: int = 0

    @property
    def N(self):
        return self.freqs.shape[0]

    @property
    def radii(self):
        return np.linalg.norm(self.freqs, axis=1)

    def dump(self, path):
        """Write the little-endian binary layout documented in the README."""
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(DUMP_MAGIC, self.n, 0, self.N, self.seed, self.rep, self.mass))
            for arr in (self.freqs, self.amplitudes, self.zeta, self.eta):
                fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            raw = fh.read()
        magic, n, _, N, seed, rep, mass = _HEADER.unpack_from(raw)
        if magic != DUMP_MAGIC:
            raise ModelError(f"{path}: not a realisation dump")
        body = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
        if body.size != N * (n + 3):
            raise ModelError(f"{path}: truncated realisation dump")
        freqs = body[: N * n].reshape(N, n)
        amp, zeta, eta = (body[N * n + k * N: N * n + (k + 1) * N] for k in range(3))
        return cls(n, freqs.copy(), amp.copy(), zeta.copy(), eta.copy(), mass, seed, rep)


def sample_frequencies(model, N, seed=0, rep=0):
    """Draw ``N`` frequencies from the normalised spectral measure of ``model``.

    Radii use stratified uniforms ``(k + U_k) / N_i`` inside each component;
    directions are uniform on the sphere.  The result is a deterministic
    function of ``(model, N, seed, rep)``.
    """
    N = int(N)
    if N < 1:
        raise ValueError("N must be at least 1")
    masses, comps = _sampler(model)
    rng = rng_stream(seed, rep)
    counts, pooled = _allocate(masses, N, rng)
    total = math.fsum(masses)
    radii, amps = [], []
    for (sides, side_p), m, Ni in zip(comps, masses, counts):
        if Ni == 0:
            continue
        u = rng.random(Ni) if pooled else (np.arange(Ni) + rng.random(Ni)) / Ni
        # split the stratified levels between the two sides of the singularity
        edge = np.concatenate([[0.0], np.cumsum(side_p)])
        edge[-1] = 1.0
        r = np.empty(Ni)
        for b, lo, hi in zip(sides, edge[:-1], edge[1:]):
            sel = (u >= lo) & (u < hi) if hi < 1.0 else (u >= lo)
            r[sel] = b.invert((u[sel] - lo) / (hi - lo))
        radii.append(r)
        amp = math.sqrt(total / N) if pooled else math.sqrt(m / Ni)
        amps.append(np.full(Ni, amp))
    radii = np.concatenate(radii)
    amps = np.concatenate(amps)
    freqs = _directions(model.n, N, rng) * radii[:, None]
    zeta = rng.standard_normal(N)
    eta = rng.standard_normal(N)
    return FrequencySample(model.n, freqs, amps, zeta, eta, total, int(seed), int(rep))


@dataclass(frozen=True, eq=False)
class FieldRealization:
    sample: FrequencySample

    @property
    def n(self):
        return self.sample.n

    def evaluate(self, points):
        """Field values at ``points`` (shape (P, n), or (P,) when n = 1)."""
        s = self.sample
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1 and s.n == 1:
            pts = pts[:, None]
        pts = np.atleast_2d(pts)
        if pts.shape[1] != s.n:
            raise ValueError(f"points must have {s.n} coordinates")
        cz, ce = s.amplitudes * s.zeta, s.amplitudes * s.eta
        out = np.empty(pts.shape[0])
        block = max(1, 2**22 // max(s.N, 1))
        for start in range(0, pts.shape[0], block):
            ph = pts[start:start + block] @ s.freqs.T
            out[start:start + block] = np.cos(ph) @ cz + np.sin(ph) @ ce
        return out


def simulate(model, N=2**14, seed=0, rep=0):
    return FieldRealization(sample_frequencies(model, N, seed, rep))


@dataclass(frozen=True)
class CovarianceEstimate:
    lag: float
    estimate: float
    stderr: float  # nan when only one replication is available


def estimate_covariance(model, lags, N=2**14, M=100, seed=0):
    """Monte Carlo ``E xi(0) xi(lag e_1)`` over ``M`` independent realisations."""
    lags = np.asarray(lags, dtype=float)
    if np.any(lags < 0):
        raise ValueError("lags must be non-negative")
    M = int(M)
    if M < 1:
        raise ValueError("M must be at least 1")
    pts = np.zeros((lags.size + 1, model.n))
    pts[1:, 0] = lags
    prods = np.empty((M, lags.size))
    for rep in range(M):
        v = simulate(model, N, seed, rep).evaluate(pts)
        prods[rep] = v[0] * v[1:]
    out = []
    for k, lag in enumerate(lags):
        col = prods[:, k]
        mean = math.fsum(col) / M
        se = math.sqrt(math.fsum((col - mean) ** 2) / (M - 1) / M) if M > 1 else math.nan
        out.append(CovarianceEstimate(float(lag), mean, se))
    return out


def radial_cdf(model, u):
    """Normalised radial law of the frequencies, ``Phi(u) / Phi(inf)``."""
    return spectral_function(model, u) / model.total_mass
