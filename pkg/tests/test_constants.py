import math

import numpy as np
import pytest

from submonotone import conventions as cv
from submonotone.constants import (EDGES, ORDER, chain_bound, chain_bounds, copson_const, d_gamma, hardy_const,
                                   iii_i_factor, kappa, muckenhoupt_upper, propagate)
from submonotone.errors import MissingInput, ParameterOutOfRange, UnsupportedFunctional
from submonotone.funcspace import indicator_fn
from submonotone.functionals import Lq, SupForm
from submonotone.measure import PiecewisePower, finite_mass_weight, lebesgue
from submonotone.operators import copson, running_integral
from submonotone.pointwise import Fn

CHI01 = PiecewisePower([1.0], [1.0, 0.0], [0.0, 0.0])
CHAIN = {"p": 2.0, "r": 1.0, "alpha": 0.0, "beta": 1.0}


def test_d_gamma():
    assert d_gamma(2.0) == 2.0
    assert d_gamma(1.0) == 1.0
    assert d_gamma(0.5) == 1.0
    with pytest.raises(ParameterOutOfRange):
        d_gamma(0.0)


def test_kappa():
    assert kappa(1.0, 2.0, 0.3, 1.0) == 1.0
    assert kappa(2.0, 2.0, 0.0, 1.0) == pytest.approx(3 ** -0.5, rel=1e-15)
    assert kappa(2.0, 2.0, 0.0, 1e12) < 1e-5


def test_weighted_constants():
    assert hardy_const(2.0, 0.0) == 2.0
    assert copson_const(2.0, 0.0) == 2.0
    assert copson_const(2.0, 1e9) < 1e-8
    with pytest.raises(ParameterOutOfRange):
        hardy_const(2.0, 1.0)
    with pytest.raises(ParameterOutOfRange):
        copson_const(2.0, -1.0)


def test_chain_bound_examples():
    assert chain_bound("i->vi", {"C1": 2.0}, CHAIN) == 2.0
    c4 = chain_bound("ii->iv", {"K": 1.0, "C21": 1.0, "C22": 1.0}, CHAIN)
    assert c4 == pytest.approx(math.sqrt(2.0) + 1.0, rel=1e-15)
    assert chain_bound("vi->ii", {"K": 1.0, "C6": 1.0}, CHAIN) == pytest.approx(1.0, rel=1e-15)
    with pytest.raises(MissingInput):
        chain_bound("ii->iv", {"K": 1.0, "C21": 1.0}, CHAIN)


def test_side_constant_labels():
    assert chain_bounds("ix->iii", {"C9": 3.0}, CHAIN) == {"C3": 6.0, "C22": 3.0}
    assert chain_bounds("v->iii", {"K": 1.0, "C5": 1.0}, CHAIN)["C22"] == pytest.approx(math.sqrt(2.0))


@pytest.mark.parametrize("eid", ORDER)
def test_chain_bound_monotone_in_inputs(eid):
    e = EDGES[eid]
    base = {n: 1.3 for n in e.inputs}
    base.setdefault("K", 1.1)
    params = {"p": 2.5, "r": 1.5, "alpha": 0.1, "beta": 0.8}
    ref = chain_bounds(e, base, params)
    for n in base:
        up = dict(base, **{n: base[n] * 1.01})
        bumped = chain_bounds(e, up, params)
        assert all(bumped[k] >= ref[k] for k in ref)


def test_propagate_chain_config():
    per = propagate(2.0, 1.0, CHAIN)
    assert set(per) == set(ORDER)
    assert per["i->vi"]["C1"] == 2.0
    assert per["iii->i"]["C3"] == per["ii->iv"]["C21"]


def test_iii_i_factor_keeps_literal_when_valid():
    # c = 2, r/p = 1/2 in the chain config: max(c, c^(r/p)) is the literal c
    assert iii_i_factor(2.0, 1.0, 0.0) == 2.0
    assert iii_i_factor(3.0, 2.5, -1 / 3 + 0.01) > (2 / 3 + 0.01) * 3 / 2.5


def _estimate_parts(p, r, a, t):
    """Both sides of the (iii) => (i) pointwise estimate with h = chi_(0,1), v = 1."""
    w, h = lebesgue(), indicator_fn(0.0, 1.0)
    g, c = r / p, (a + 1.0) * p / r
    G = running_integral(h, w)
    f = Fn(lambda s: cv.mul(cv.power(w.V(s), -c), cv.power(G(s), 1.0 / g)), h.breakpoints)
    small = float(G(t) / w.V(t))
    common = d_gamma(g) * float(w.V(t)) ** a * float(copson(f, w)(t)) ** g
    return small, c * common, c ** g * common


def test_iii_i_literal_factor_counterexample():
    small, literal, corrected = _estimate_parts(3.0, 2.5, -1.0 / 3.0 + 0.01, 2.0)
    assert small == pytest.approx(0.5, rel=1e-12)
    assert literal < small                         # the literal factor c is too small here
    assert corrected == pytest.approx(small, rel=1e-8)   # c^(r/p) is attained


def test_muckenhoupt_examples():
    up = muckenhoupt_upper(lebesgue(), Lq(2.0, CHI01), 2.0)
    assert np.isfinite(up)
    assert muckenhoupt_upper(finite_mass_weight(), Lq(2.0, CHI01), 2.0) == pytest.approx(2.0, rel=1e-9)
    assert muckenhoupt_upper(lebesgue(), Lq(2.0, PiecewisePower([], [1.0], [1.5])), 2.0) == np.inf
    with pytest.raises(UnsupportedFunctional):
        muckenhoupt_upper(lebesgue(), Lq(1.0, CHI01), 2.0)
    with pytest.raises(UnsupportedFunctional):
        muckenhoupt_upper(lebesgue(), SupForm(Lq(2.0, CHI01), CHI01), 2.0)


def test_muckenhoupt_dominates_extremal_ratio():
    from submonotone.funcspace import extremal_for
    from submonotone.pointwise import ONE
    from submonotone.statements import Params, StatementInstance, ratio
    w = finite_mass_weight()
    inst = StatementInstance("T1.i", Params(p=2.0), w, Lq(2.0, CHI01))
    lower = ratio(inst, extremal_for("T1.i", {"p": 2.0}, 0.05, w))
    assert muckenhoupt_upper(w, Lq(2.0, CHI01), 2.0) >= lower
    assert Lq(2.0, CHI01).apply(ONE) == 1.0
