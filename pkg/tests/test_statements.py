import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from submonotone.errors import NotStrictlyPositive, UnsupportedStatement
from submonotone.funcspace import GeneratorProfile, const_fn, power_fn, profile_for, random_testfn, random_weight
from submonotone.functionals import Lq
from submonotone.measure import PiecewisePower, Weight, finite_mass_weight, lebesgue
from submonotone.pointwise import ONE
from submonotone.statements import (EVALUATOR, QUANTIFIER, Params, StatementInstance, constant_term_check,
                                    evaluate, hardy_reduction, instance_from_dict, instance_to_dict, lhs,
                                    lhs_expression, ratio, rhs, t3_derived_weight, t4_derived_weight,
                                    two_weight_hardy, validate)

CHI01 = PiecewisePower([1.0], [1.0, 0.0], [0.0, 0.0])


def inst(sid, w=None, rho=None, **params):
    params.setdefault("p", 2.0)
    return StatementInstance(sid, Params(**params), w or lebesgue(), rho or Lq(2.0, CHI01))


def test_validate_examples():
    assert validate(inst("T1.iv", r=1.0, alpha=0.0, beta=1.0)) == []
    bad = validate(inst("T1.iv", r=1.0, alpha=1.0, beta=1.0))
    assert any("alpha p - beta r < r - 1" in s for s in bad)
    bad = validate(inst("T1.ii", alpha=-0.6))
    assert len(bad) == 1 and "alpha > max{-1/p, -1/p'}" in bad[0]


def test_validate_literal_beta_bound_at_r_one():
    # with r = 1 the bound -1/r' is 0, enforced literally
    assert validate(inst("T1.iv", r=1.0, alpha=-0.2, beta=-0.1))
    assert validate(inst("T1.iv", r=1.0, alpha=-0.2, beta=0.1)) == []


def test_validate_t3_and_t4():
    u = Weight([], [1.0], [0.5])
    ok = StatementInstance("T3.iii", Params(p=2.0, r=1.0, m=1.0, alpha=0.0, beta=0.5), lebesgue(), Lq(2.0, CHI01), u)
    assert validate(ok) == []
    low_m = StatementInstance("T3.iii", Params(p=2.0, m=0.5), lebesgue(), Lq(2.0, CHI01), u)
    assert any("m > 1/p" in s for s in validate(low_m))
    t4 = StatementInstance("T4.ii", Params(p=2.0, m=0.4, alpha=0.0, beta=0.0), lebesgue(), Lq(2.0, CHI01), u)
    assert any("m p > 1" in s for s in validate(t4))
    with pytest.raises(UnsupportedStatement):
        StatementInstance("T3.i", Params(p=2.0), lebesgue(), Lq(2.0, CHI01))


def test_evaluate_constant_example():
    rec = evaluate(inst("T1.i", finite_mass_weight()), const_fn(1.0))
    assert rec.lhs == pytest.approx(1.0, rel=1e-14)
    assert rec.rhs == pytest.approx(math.sqrt(2.0), rel=1e-14)
    assert rec.ratio == pytest.approx(1 / math.sqrt(2.0), rel=1e-14)


def test_geo_expression():
    G = lhs_expression(inst("T1.vi"), power_fn(1.0, 1.0))
    t = np.geomspace(1e-2, 1e2, 9)
    assert np.allclose(G(t), t / math.e, rtol=1e-13)


def test_positive_only_guard():
    f = PiecewisePower([1.0], [1.0, 0.0], [0.0, 0.0])
    with pytest.raises(NotStrictlyPositive):
        lhs(inst("T1.vi", finite_mass_weight()), f)
    rec = evaluate(inst("T1.vi", finite_mass_weight()), f, positivize_eps=1e-3)
    assert rec.f.strictly_positive and np.isfinite(rec.ratio)


def test_constant_term_check_examples():
    assert constant_term_check(inst("T1.ii", finite_mass_weight())) == pytest.approx(1 / math.sqrt(2), rel=1e-14)
    assert constant_term_check(inst("T1.ii", lebesgue())) == 0.0
    assert constant_term_check(inst("T1.ii", finite_mass_weight(), Lq(2.0, lebesgue()))) == np.inf


def test_t3_weight_examples():
    u = Weight([0.5, 2.0], [1.0, 2.0, 0.5], [0.3, -0.2, -1.5])
    t = np.geomspace(1e-3, 1e3, 1000)
    assert np.array_equal(t3_derived_weight(u, u, 2.0)(t), np.ones_like(t))
    w = t3_derived_weight(lebesgue(), Weight([], [1.0], [1.0]), 1.0)
    assert np.allclose(w(t), math.e / t, rtol=1e-13)


def test_t3_weight_backends_agree():
    u = Weight([0.5, 2.0], [1.0, 2.0, 0.5], [0.3, -0.2, -1.5])
    v = Weight([1.0], [0.7, 1.3], [0.1, -0.9])
    t = np.geomspace(1e-2, 1e2, 15)
    a = t3_derived_weight(u, v, 1.7)(t)
    b = t3_derived_weight(u, v, 1.7, method="quadrature")(t)
    assert np.allclose(a, b, rtol=1e-9)


def test_t4_weight_examples():
    u = Weight([0.5, 2.0], [1.0, 2.0, 0.5], [0.3, -0.2, -1.5])
    ut, Ut = t4_derived_weight(u, u, 2.0)
    assert np.array_equal(ut.coef, u.coef) and np.array_equal(ut.gamma, u.gamma)
    ut, Ut = t4_derived_weight(lebesgue(), Weight([], [1.0], [1.0]), 1.0)
    t = np.geomspace(1e-2, 1e2, 9)
    assert np.allclose(ut(t), np.sqrt(t), rtol=1e-14)
    assert np.allclose(Ut(t), 2.0 / 3.0 * t ** 1.5, rtol=1e-13)


def test_t4_head_exponent_preserved():
    rng = np.random.default_rng(0)
    for _ in range(100):
        ut, _ = t4_derived_weight(random_weight(rng), random_weight(rng), float(rng.uniform(0.5, 4)))
        assert ut.gamma[0] > -1


def test_evaluator_sharing():
    assert EVALUATOR == {"T1.iii": "T1.ii", "T1.v": "T1.iv", "T1.viii": "T1.vii"}
    assert QUANTIFIER["T1.iii"] == "exists" and QUANTIFIER["T1.ii"] == "for-all"
    f = random_testfn(profile_for(lebesgue(), 2.0, seed=1, zero_tail_prob=1.0))
    a = evaluate(inst("T1.iv", r=1.0, alpha=0.0, beta=1.0), f)
    b = evaluate(inst("T1.v", r=1.0, alpha=0.0, beta=1.0), f)
    assert a.lhs == b.lhs and a.rhs == b.rhs


def _positive_f(seed, w):
    prof = profile_for(w, 2.0, seed=seed)
    return random_testfn(prof)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.05, 20.0))
def test_ratio_scale_invariance(seed, lam):
    w = finite_mass_weight()
    f = _positive_f(seed, w)
    for sid, extra in (("T1.i", {}), ("T1.vi", {}), ("T1.ix", {"phi": "log"}), ("T1.vii", {"r": 2.0})):
        I = inst(sid, w, **extra)
        assert ratio(I, f.scale(lam)) == pytest.approx(ratio(I, f), rel=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_geo_lhs_below_hardy_lhs(seed):
    w = finite_mass_weight()
    f = _positive_f(seed, w)
    assert lhs(inst("T1.vi", w), f) <= lhs(inst("T1.i", w), f) * (1 + 1e-9)


def test_means_of_constant_equal_rho_one():
    w = finite_mass_weight()
    rho1 = Lq(2.0, CHI01).apply(ONE)
    for sid, extra in (("T1.vi", {}), ("T1.vii", {"r": 1.0}), ("T1.ix", {"phi": "power:0.5"})):
        assert lhs(inst(sid, w, **extra), const_fn(1.0)) == rho1


@pytest.mark.parametrize("seed", range(8))
def test_intro_reduction(seed):
    rng = np.random.default_rng(seed)
    u = Weight([1.0], np.exp(rng.uniform(-1, 1, 2)), [rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3)])
    wo = PiecewisePower([1.0, 3.0], [1.0, 0.5, 0.0], [0.0, -1.0, 0.0])
    p, q = 2.0, 3.0
    I = hardy_reduction(u, wo, p, q)
    F = random_testfn(GeneratorProfile(seed=seed, head_min=-0.3, zero_tail_prob=1.0))
    f = F.times(I.v.reciprocal())
    left, right = two_weight_hardy(F, u, wo, p, q)
    assert lhs(I, f) == pytest.approx(left, rel=1e-8)
    assert rhs(I, f) == pytest.approx(right, rel=1e-12)


def test_instance_json_roundtrip():
    I = inst("T1.iv", finite_mass_weight(), r=1.0, alpha=0.0, beta=1.0)
    d = instance_to_dict(I)
    J = instance_from_dict(d)
    f = _positive_f(3, finite_mass_weight())
    assert evaluate(J, f).ratio == evaluate(I, f).ratio
    with pytest.raises(KeyError):
        instance_from_dict({k: v for k, v in d.items() if k != "weight"})
