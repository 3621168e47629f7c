import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from submonotone.funcspace import GeneratorProfile, const_fn, indicator_fn, random_testfn
from submonotone.functionals import (Iterated, Lq, SupForm, check_axioms, derived_t3, derived_t4,
                                     functional_from_dict, general_lambda_check)
from submonotone.measure import PiecewisePower, Weight, lebesgue
from submonotone.pointwise import ONE, Const, Fn
from submonotone.statements import t3_derived_weight, t4_derived_weight

CHI01 = PiecewisePower([1.0], [1.0, 0.0], [0.0, 0.0])
PROFILE = GeneratorProfile(seed=0, head_min=-0.4)


def test_apply_examples():
    assert Lq(2.0, CHI01).apply(ONE) == pytest.approx(1.0, rel=1e-15)
    assert Lq(1.0, lebesgue()).apply(Const(0.0)) == 0.0
    assert Lq(1.0, lebesgue()).apply(indicator_fn(5.0, 6.0).scale(0.0)) == 0.0
    it = Iterated(1.0, CHI01, np.inf, PiecewisePower.constant(1.0))
    assert it.apply(const_fn(3.0)) == pytest.approx(3.0, rel=1e-14)


def test_lq_generic_pointwise_matches_exact():
    f = random_testfn(PROFILE)
    exact = Lq(2.0, CHI01).apply(f)
    assert Lq(2.0, CHI01).apply(Fn(f, f.breakpoints)) == pytest.approx(exact, rel=1e-9)


def test_sup_form_inner_is_tail_sup():
    rho = SupForm(Lq(np.inf, PiecewisePower.constant(1.0)), PiecewisePower.constant(1.0))
    f = PiecewisePower([1.0, 2.0], [1.0, 3.0, 1.0], [0.0, 0.0, -1.0])
    S = rho.inner(f)
    assert np.allclose(S(np.array([0.5, 1.5, 3.0])), [3.0, 3.0, 1.0 / 3.0])
    assert rho.apply(f) == pytest.approx(3.0)


@pytest.mark.parametrize("q", [1.0, 2.0, np.inf])
def test_lq_axioms_norm_case(q):
    prof = GeneratorProfile(seed=1, head_min=0.0 if np.isinf(q) else -1.0 / q + 0.1)
    rep = check_axioms(Lq(q, CHI01), prof, 200)
    assert rep.lattice_violations == 0
    assert rep.K == pytest.approx(1.0, abs=1e-9)


def test_lq_weak_lattice_is_equality():
    rho = Lq(2.0, CHI01)
    rng = np.random.default_rng(2)
    for _ in range(50):
        f = random_testfn(PROFILE, rng)
        lam = 10 ** rng.uniform(-2, 2)
        assert rho.apply(f.scale(lam)) == pytest.approx(lam * rho.apply(f), rel=1e-12)
    assert rho.apply(const_fn(1.0).scale(0.0)) == 0.0


def test_quasinorm_constant_half():
    prof = GeneratorProfile(seed=3, head_min=-1.9)
    rep = check_axioms(Lq(0.5, CHI01), prof, 300)
    assert rep.lattice_violations == 0
    assert 1.0 <= rep.K_quasitriangle <= 2.0 + 1e-9


def test_quasitriangle_skipped_when_rho_one_infinite():
    rep = check_axioms(Lq(2.0, lebesgue()), GeneratorProfile(seed=0, head_min=-0.4, zero_tail_prob=1.0), 20)
    assert rep.quasitriangle_checked is False
    assert rep.K_quasitriangle == 1.0


def test_general_lambda_examples():
    rho = Lq(1.0, CHI01)
    assert general_lambda_check(rho, 1.0, const_fn(1.0), 1.0, 1.0) == pytest.approx(0.0, abs=1e-14)
    rho2 = Lq(2.0, CHI01)
    rng = np.random.default_rng(4)
    for _ in range(30):
        f = random_testfn(PROFILE, rng)
        assert general_lambda_check(rho2, 1.0, f, 2.0, 0.5) >= -1e-12
    # c -> 0 leaves K^2 lam rho(1) - rho(lam) >= 0
    assert general_lambda_check(rho2, 1.0, const_fn(1.0), 1e-12, 0.7) >= -1e-12


def test_derived_definitions():
    f = random_testfn(PROFILE)
    base = Lq(1.0, CHI01)
    d = derived_t3(base, 2.0, PiecewisePower.constant(1.0))
    assert d.apply(f) == pytest.approx(Lq(2.0, CHI01).apply(f), rel=1e-12)
    u = Weight([], [1.0], [0.5])
    U = u.primitive_fn
    assert derived_t4(base, 1.0, U, U).apply(f) == pytest.approx(base.apply(f), rel=1e-14)
    assert derived_t4(base, 2.0, U, U).apply(const_fn(1.0).scale(0.0)) == 0.0


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_derived_identity_matches_base(seed):
    f = random_testfn(PROFILE.with_seed(seed))
    base = Lq(2.0, CHI01)
    d = derived_t3(base, 1.0, PiecewisePower.constant(1.0))
    assert d.apply(f) == pytest.approx(base.apply(f), rel=1e-12)


def test_derived_axioms_two_weight():
    u, v = Weight([], [1.0], [0.5]), lebesgue()
    base = Lq(2.0, CHI01)
    d3 = derived_t3(base, 2.0, t3_derived_weight(u, v, 2.0))
    _, Ut = t4_derived_weight(u, v, 2.0)
    d4 = derived_t4(base, 2.0, u.primitive_fn, Ut)
    prof = GeneratorProfile(seed=5, head_min=-0.15)
    for rho in (d3, d4):
        rep = check_axioms(rho, prof, 100)
        assert rep.lattice_violations == 0
        assert np.isfinite(rep.K)


def test_derived_preserves_order_pointwise():
    u, v = Weight([], [1.0], [0.5]), lebesgue()
    d3 = derived_t3(Lq(2.0, CHI01), 2.0, t3_derived_weight(u, v, 2.0))
    rng = np.random.default_rng(6)
    t = np.geomspace(1e-3, 1.0, 40)
    for _ in range(20):
        f = random_testfn(PROFILE, rng)
        g = f + random_testfn(PROFILE, rng)
        assert np.all(d3.transform(f)(t) <= d3.transform(g)(t) * (1 + 1e-14))


def test_descriptor_roundtrip():
    rho = Iterated(2.0, CHI01, 3.0, PiecewisePower.constant(1.0))
    again = functional_from_dict(rho.to_dict())
    f = random_testfn(PROFILE)
    assert again.apply(f) == pytest.approx(rho.apply(f), rel=1e-14)
    d = {"kind": "Lq", "q": "inf", "outer_weight": CHI01.to_dict()}
    assert np.isinf(functional_from_dict(d).q)
