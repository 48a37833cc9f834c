import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cyclrf.errors import MassNotFinite, ModelError, SingularPoint
from cyclrf.harness import shipped_pairs
from cyclrf.spectrum import (DEFAULT_ATOL, DEFAULT_RTOL, Envelope, SpectralModel, covariance, density,
                             eval_density, lrd_diagnostic, spectral_function)
from oracles import midpoint

E = Envelope


def _local(n, *specs):
    return SpectralModel.build(n, *specs, require_finite_mass=False)


MODELS = {
    **{name: m for name, (m, _) in shipped_pairs().items()},
    "plateau-3d": SpectralModel.build(3, (0.0, 2.0, E.plateau(1.0, 1.0))),
    "two-rings": SpectralModel.build(2, (0.0, 0.5, E.exponential(1.0, 2.0)), (1.0, 0.3, E.plateau(0.5, 0.4)),
                                     (2.0, 0.7, E.exponential(2.0, 1.0))),
}


# ---------------------------------------------------------------- eval_density

def test_density_examples():
    m1 = _local(2, (0.0, 1.0, E.constant()))
    assert eval_density(m1, 2.0) == pytest.approx(0.5, rel=1e-15)
    m2 = _local(2, (0.0, 1.0, E.constant()), (1.0, 0.5, E.constant()))
    assert eval_density(m2, 2.0) == pytest.approx(1.5, rel=1e-15)
    with pytest.raises(SingularPoint):
        eval_density(m2, 1.0)
    with pytest.raises(SingularPoint):
        eval_density(m2, 0.0)


@pytest.mark.parametrize("name", sorted(MODELS))
def test_density_nonnegative(name):
    m = MODELS[name]
    rng = np.random.default_rng(7)
    z = rng.uniform(0.0, 1.2 * min(m.upper_frequency, 50.0), 10_000)
    z = z[np.all(np.abs(z[:, None] - np.array(m.singular_points)[None, :]) > 1e-12, axis=1)]
    vals = density(m, z)
    assert np.all(np.isfinite(vals)) and np.all(vals >= 0)


# ---------------------------------------------------------------- model invariants

@pytest.mark.parametrize("specs", [
    ((0.0, 1.0, E.constant()),),                       # alpha_0 = n
    ((0.0, 0.0, E.constant()),),                       # alpha_0 = 0
    ((0.5, 0.5, E.constant()),),                       # a_0 != 0
    ((0.0, 0.5, E.constant()), (1.0, 1.0, E.constant())),  # alpha_1 = 1
    ((0.0, 0.5, E.constant()), (1.0, 0.5, E.constant()), (1.0, 0.5, E.constant())),  # a not increasing
])
def test_invalid_models_rejected(specs):
    with pytest.raises(ModelError):
        SpectralModel.build(1, *specs, require_finite_mass=False)


def test_short_range_control_rejected():
    with pytest.raises(ModelError, match="alpha_0"):
        SpectralModel.build(1, (0.0, 1.0, E.plateau(1.0, 1.0)))


def test_unsupported_dimension_and_envelopes():
    with pytest.raises(ModelError):
        SpectralModel.build(4, (0.0, 1.0, E.plateau()))
    with pytest.raises(ModelError):
        E.exponential(1.0, -1.0)
    with pytest.raises(ModelError):
        E.constant(0.0)


def test_infinite_mass_detected():
    with pytest.raises(MassNotFinite):
        SpectralModel.build(2, (0.0, 1.0, E.constant()))


def test_model_dict_round_trip():
    m = MODELS["two-rings"]
    back = SpectralModel.from_dict(m.to_dict())
    assert back.to_dict() == m.to_dict()
    assert back.total_mass == m.total_mass


def test_malformed_dict():
    with pytest.raises(ModelError):
        SpectralModel.from_dict({"n": 2, "components": [{"a": 0.0}]})


# ---------------------------------------------------------------- spectral function

def test_spectral_function_examples():
    m = _local(1, (0.0, 0.5, E.constant()))
    assert spectral_function(m, 0.0) == 0.0
    assert spectral_function(m, 1.0) == pytest.approx(4.0, rel=1e-12)
    p = SpectralModel.build(2, (0.0, 1.0, E.plateau(1.0, 1.0)))
    assert spectral_function(p, 2.0) == pytest.approx(2 * math.pi, rel=1e-12)
    assert spectral_function(p, 1.0) == pytest.approx(2 * math.pi, rel=1e-12)
    assert p.total_mass == pytest.approx(2 * math.pi, rel=1e-12)


def test_spectral_function_riemann_oracle():
    # ring term 2 pi z |z - 1|^(-1/2) e^(-|z-1|) on (0, inf); substitute z = 1 -+ w^2
    m = SpectralModel.build(2, (0.0, 1.0, E.plateau(1.0, 0.5)), (1.0, 0.5, E.exponential(1.0, 1.0)))
    left = midpoint(lambda w: 2 * (1 - w * w) * np.exp(-w * w), 0.0, 1.0, 200_000)
    right = midpoint(lambda w: 2 * (1 + w * w) * np.exp(-w * w), 0.0, 8.0, 1_600_000)
    ref = 2 * math.pi * (0.5 + left + right)
    assert m.total_mass == pytest.approx(ref, rel=1e-9)


@settings(max_examples=40, deadline=None)
@given(name=st.sampled_from(sorted(MODELS)),
       us=st.lists(st.floats(0.0, 60.0, allow_nan=False), min_size=2, max_size=8))
def test_spectral_function_monotone(name, us):
    m = MODELS[name]
    us = sorted(us)
    vals = [spectral_function(m, u) for u in us]
    assert all(b >= a - 1e-12 * m.total_mass for a, b in zip(vals, vals[1:]))
    assert vals[-1] <= m.total_mass * (1 + 1e-12)


# ---------------------------------------------------------------- covariance

@pytest.mark.parametrize("name", sorted(MODELS))
def test_covariance_at_zero_is_total_mass(name):
    m = MODELS[name]
    ev = covariance(m, 0.0)
    tol = DEFAULT_ATOL + DEFAULT_RTOL * m.total_mass
    assert abs(ev.value - m.total_mass) <= 2 * tol


@pytest.mark.parametrize("name", sorted(MODELS))
def test_covariance_bounded_by_variance(name):
    m = MODELS[name]
    b0 = covariance(m, 0.0).value
    for r in (0.1, 0.5, 1.0, 2.0, 3.7, 10.0, 25.0):
        ev = covariance(m, r)
        assert abs(ev.value) <= b0 + ev.error


def test_covariance_riemann_oracle():
    # n = 1: 2 int cos(z) e^-z z^-1/2 dz, with z = s^2: 4 int cos(s^2) e^(-s^2) ds
    m = SpectralModel.build(1, (0.0, 0.5, E.exponential(1.0, 1.0)))
    ref = midpoint(lambda s: 4 * np.cos(s * s) * np.exp(-s * s), 0.0, 7.0, 2_000_000)
    ev = covariance(m, 1.0)
    assert abs(ev.value - ref) <= 1e-6


def test_covariance_half_integer_closed_form():
    # n = 3, alpha_0 = 2: 4 pi int z e^-z sin(2z)/(2z) dz = 4 pi / 5
    m = SpectralModel.build(3, (0.0, 2.0, E.exponential(1.0, 1.0)))
    assert covariance(m, 2.0).value == pytest.approx(4 * math.pi / 5, rel=1e-9)


def test_covariance_plateau_zero():
    # n = 3, alpha_0 = 2, plateau on [0, 1]: B(r) = 8 pi sin^2(r/2) / r^2
    m = MODELS["plateau-3d"]
    for r in (0.5, 1.0, 2 * math.pi, 9.0):
        assert covariance(m, r).value == pytest.approx(8 * math.pi * math.sin(r / 2) ** 2 / r**2, abs=1e-9)


# ---------------------------------------------------------------- LRD

def test_lrd_empty():
    assert lrd_diagnostic(MODELS["line-zero"], [0.0]) == [(0.0, 0.0)]


def test_lrd_grows():
    m = SpectralModel.build(1, (0.0, 0.5, E.plateau(1.0, 1.0)))
    out = lrd_diagnostic(m, [10.0, 100.0, 1000.0])
    vals = [v for _, v in out]
    assert vals[0] < vals[1] < vals[2]
    # |B(r)| ~ c r^(-1/2): the integral keeps growing roughly like sqrt(T)
    assert vals[2] / vals[1] > 2.0


def test_lrd_rejects_decreasing_T():
    with pytest.raises(ValueError):
        lrd_diagnostic(MODELS["line-zero"], [10.0, 5.0])
