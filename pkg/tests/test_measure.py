import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from submonotone.measure import (PiecewisePower, Weight, finite_mass_weight, integrate, integrate_dV,
                                 lebesgue, log_moment, power_moment, primitive, weight_from_json)
from submonotone.pointwise import Fn
from submonotone.funcspace import random_weight


def test_primitive_examples():
    assert primitive(lebesgue(), 3.0) == pytest.approx(3.0, rel=1e-15)
    assert primitive(Weight([], [1.0], [-0.5]), 4.0) == pytest.approx(4.0, rel=1e-15)
    assert primitive(finite_mass_weight(), np.inf) == pytest.approx(2.0, rel=1e-15)
    assert primitive(finite_mass_weight(), 0.0) == 0.0


def test_log_segment_primitive():
    w = Weight([1.0], [1.0, 1.0], [0.0, -1.0])
    assert primitive(w, math.e) == pytest.approx(2.0, rel=1e-14)
    assert primitive(w, np.inf) == np.inf


def test_head_exponent_guard():
    with pytest.raises(ValueError):
        Weight([], [1.0], [-1.0])


def test_power_moment_examples():
    assert power_moment(lebesgue(), 1.0, 0.0, 2.0).value == pytest.approx(2.0, rel=1e-15)
    assert power_moment(lebesgue(), -1.0, 1.0, math.e).value == pytest.approx(1.0, rel=1e-15)
    r = power_moment(finite_mass_weight(), -3.0, 1.0, np.inf)
    assert r.value == pytest.approx(3.0 / 8.0, rel=1e-14)
    assert r.method == "closed-form" and r.error == 0.0


def test_power_moment_divergence_is_inf():
    assert power_moment(lebesgue(), 0.0).value == np.inf
    assert power_moment(lebesgue(), -1.0, 0.0, 1.0).value == np.inf
    assert power_moment(lebesgue(), -2.0, 0.0, 1.0).value == np.inf


def test_log_moment_examples():
    assert log_moment(lebesgue(), 1.0) == pytest.approx(-1.0, rel=1e-15)
    assert log_moment(lebesgue(), math.e) == pytest.approx(0.0, abs=1e-15)
    w = Weight([], [2.0], [1.0])     # V = t^2
    assert log_moment(w, 1.0) == pytest.approx(-1.0, rel=1e-15)


def test_integrate_examples():
    w = finite_mass_weight()
    r = integrate(w, 0.0, np.inf, tol=1e-10)
    assert r.value == pytest.approx(2.0, rel=2e-10)
    g = Fn(lambda s: np.where(s < 2.0, s, 0.0), (2.0,))
    assert integrate(g, 0.0, np.inf, tol=1e-10).value == pytest.approx(2.0, rel=1e-10)


def test_integrate_dV_substitution():
    w = Weight([1.0], [2.0, 0.5], [1.0, -1.5])
    h = Fn(lambda u: np.sqrt(u), ())
    expected = power_moment(w, 0.5, 0.0, 3.0).value
    assert integrate_dV(h, w, 0.0, 3.0).value == pytest.approx(expected, rel=1e-10)


weights = st.builds(lambda s: random_weight(np.random.default_rng(s)), st.integers(0, 2**32 - 1))


@settings(max_examples=60, deadline=None)
@given(weights, st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
def test_primitive_monotone(w, a, b):
    a, b = sorted((a, b))
    assert primitive(w, a) <= primitive(w, b)


@settings(max_examples=60, deadline=None)
@given(weights, st.floats(-0.9, 3.0), st.floats(0.01, 10.0), st.floats(0.01, 10.0), st.floats(0.01, 10.0))
def test_power_moment_additivity(w, alpha, x, y, z):
    a, b, c = sorted((x, y, z))
    whole = power_moment(w, alpha, a, c).value
    parts = power_moment(w, alpha, a, b).value + power_moment(w, alpha, b, c).value
    assert whole == pytest.approx(parts, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(weights, st.floats(-0.9, 2.0), st.floats(0.05, 20.0))
def test_power_moment_matches_quadrature(w, beta, t):
    g = Fn(lambda s: w.V(s) ** beta * w(s), w.breakpoints)
    q = integrate(g, 0.0, t, tol=1e-12).value
    assert q == pytest.approx(float(w.V(t)) ** (beta + 1) / (beta + 1), rel=1e-10)


@settings(max_examples=40, deadline=None)
@given(weights, st.floats(0.05, 20.0))
def test_log_moment_matches_quadrature(w, t):
    g = Fn(lambda s: np.log(w.V(s)) * w(s), w.breakpoints + (float(t),))
    # split at the level V = 1 where the integrand changes sign
    pos = Fn(lambda s: np.maximum(g(s), 0.0), g.breakpoints)
    neg = Fn(lambda s: np.maximum(-g(s), 0.0), g.breakpoints)
    q = integrate(pos, 0.0, t, tol=1e-12).value - integrate(neg, 0.0, t, tol=1e-12).value
    assert q == pytest.approx(log_moment(w, t), rel=1e-9, abs=1e-9)


def test_json_roundtrip():
    w = Weight([0.5, 3.0], [1.0, 2.0, 0.3], [0.2, -1.0, -2.5])
    d = w.to_dict()
    assert d["segments"][-1]["upto"] == "inf"
    w2 = weight_from_json(w.to_json())
    assert w2.same_as(w)
    t = np.geomspace(1e-3, 1e3, 50)
    assert np.array_equal(w2.V(t), w.V(t))


def test_piecewise_algebra():
    f = PiecewisePower([1.0], [2.0, 3.0], [1.0, -2.0])
    assert np.allclose(f.pow(2.0)(np.array([0.5, 2.0])), [1.0, 9.0 / 16.0])
    assert np.allclose(f.reciprocal()(np.array([0.5, 2.0])), [1.0, 4.0 / 3.0])
