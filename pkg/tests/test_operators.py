import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from submonotone.errors import NotStrictlyPositive, UnsupportedPhi
from submonotone.funcspace import (GeneratorProfile, const_fn, indicator_fn, power_fn, random_testfn,
                                   random_weight)
from submonotone.measure import Weight, finite_mass_weight, lebesgue
from submonotone.operators import copson, geo_mean, hardy_avg, harm_mean, phi_mean
from submonotone.pointwise import Fn

T = np.geomspace(1e-3, 1e3, 25)
PHIS = ["log", "reciprocal", ("power", 0.5), "power:0.25"]


def test_hardy_examples():
    w = Weight([2.0], [1.5, 0.7], [0.3, -1.4])
    assert np.allclose(hardy_avg(const_fn(3.0), w)(T), 3.0, rtol=1e-13)
    assert np.allclose(hardy_avg(power_fn(1.0, 1.0), lebesgue())(T), T / 2, rtol=1e-13)
    for beta in (-0.5, 0.0, 2.0):
        f = Fn(lambda s, b=beta: w.V(s) ** b, w.breakpoints)
        got = hardy_avg(f, w)(T)
        assert np.allclose(got, w.V(T) ** beta / (beta + 1), rtol=1e-8)


def test_copson_examples():
    t = np.array([1e-3, 0.1, 0.5, 1.0])
    assert np.allclose(copson(indicator_fn(0.0, 1.0), lebesgue())(t), np.log(1 / t), rtol=1e-12, atol=1e-14)
    assert np.all(copson(const_fn(1.0), lebesgue())(T) == np.inf)
    w = finite_mass_weight()
    beta = 1.0
    f = Fn(lambda s: w.V(s) ** (-beta - 1), w.breakpoints)
    expected = (w.V(T) ** (-beta - 1) - 2.0 ** (-beta - 1)) / (beta + 1)
    assert np.allclose(copson(f, w)(T), expected, rtol=1e-8)


def test_geo_examples():
    assert np.allclose(geo_mean(const_fn(2.5), finite_mass_weight())(T), 2.5, rtol=1e-13)
    assert np.allclose(geo_mean(power_fn(1.0, 1.0), lebesgue())(T), T / math.e, rtol=1e-13)
    with pytest.raises(NotStrictlyPositive):
        geo_mean(indicator_fn(0.0, 1.0), lebesgue())


def test_harm_examples():
    for r in (0.5, 1.0, 3.0):
        assert np.allclose(harm_mean(const_fn(2.0), lebesgue(), r)(T), 2.0 ** r, rtol=1e-13)
    assert np.all(harm_mean(power_fn(1.0, 1.0), lebesgue(), 1.0)(T) == 0.0)


def test_phi_catalogue():
    w = finite_mass_weight()
    f = random_testfn(GeneratorProfile(seed=5))
    assert np.array_equal(phi_mean(f, w, "log")(T), geo_mean(f, w)(T))
    assert np.array_equal(phi_mean(f, w, "reciprocal")(T), harm_mean(f, w, 1.0)(T))
    assert np.allclose(phi_mean(const_fn(3.0), w, ("power", 0.5))(T), 3.0, rtol=1e-13)
    for bad in ("exp", ("power", 1.5), "power:x"):
        with pytest.raises(UnsupportedPhi):
            phi_mean(f, w, bad)


def _sample(seed):
    rng = np.random.default_rng(seed)
    w = random_weight(rng)
    f = random_testfn(GeneratorProfile(seed=int(rng.integers(2**32))))
    t = 10.0 ** rng.uniform(-3, 3, size=8)
    return f, w, t


seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=150, deadline=None)
@given(seeds)
def test_jensen_chain(seed):
    f, w, t = _sample(seed)
    h = harm_mean(f, w, 1.0)(t)
    g = geo_mean(f, w)(t)
    a = hardy_avg(f, w)(t)
    assert np.all(h <= g * (1 + 1e-10))
    assert np.all(g <= a * (1 + 1e-10))
    for phi in PHIS:
        assert np.all(phi_mean(f, w, phi)(t) <= a * (1 + 1e-10))


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_phi_mean_dominates_nonincreasing(seed):
    rng = np.random.default_rng(seed)
    w = random_weight(rng)
    f = random_testfn(GeneratorProfile(seed=seed, exponents=(-1.5, -0.01)))
    # a decreasing piecewise power needs nonincreasing jumps too
    vals = f(np.concatenate([f.edges * (1 - 1e-12), f.edges * (1 + 1e-12)]))
    k = len(f.edges)
    if np.any(vals[k:] > vals[:k]):
        return
    t = 10.0 ** rng.uniform(-3, 3, size=8)
    for phi in PHIS:
        assert np.all(phi_mean(f, w, phi)(t) >= f(t) * (1 - 1e-10))


@settings(max_examples=60, deadline=None)
@given(seeds, st.floats(1e-2, 1e2))
def test_homogeneity(seed, lam):
    f, w, t = _sample(seed)
    g = f.scale(lam)
    assert np.allclose(hardy_avg(g, w)(t), lam * hardy_avg(f, w)(t), rtol=1e-12)
    assert np.allclose(geo_mean(g, w)(t), lam * geo_mean(f, w)(t), rtol=1e-10)
    for r in (0.5, 2.0):
        assert np.allclose(harm_mean(g, w, r)(t), lam ** r * harm_mean(f, w, r)(t), rtol=1e-10)


def test_generic_pointwise_agrees_with_closed_form():
    f, w, t = _sample(11)
    g = Fn(f, f.breakpoints)
    assert np.allclose(hardy_avg(g, w)(t), hardy_avg(f, w)(t), rtol=1e-8)
    assert np.allclose(geo_mean(g, w)(t), geo_mean(f, w)(t), rtol=1e-8)
