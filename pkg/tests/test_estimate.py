import math

import numpy as np
import pytest

from submonotone import estimate as est
from submonotone.constants import copson_const, hardy_const
from submonotone.errors import AllRatiosDegenerate, MissingUpperBound, UnsupportedFunctional
from submonotone.funcspace import TestFunction
from submonotone.functionals import Lq, SupForm
from submonotone.measure import PiecewisePower, finite_mass_weight, lebesgue
from submonotone.pointwise import ONE
from submonotone.statements import EvalRecord, Params, StatementInstance, evaluate, ratio

CHI01 = PiecewisePower([1.0], [1.0, 0.0], [0.0, 0.0])


def classical(sid="T1.i", **params):
    params.setdefault("p", 2.0)
    return StatementInstance(sid, Params(**params), lebesgue(), Lq(2.0, PiecewisePower.constant(1.0)))


def chain_instance():
    return StatementInstance("T1.i", Params(p=2.0, r=1.0, alpha=0.0, beta=1.0), finite_mass_weight(),
                             Lq(2.0, CHI01))


# -- discrete oracle -----------------------------------------------------------------

def _two_cell_value(tmin, tmax):
    """Closed-form optimum of the n = 2 Hardy form for v = 1, rho = L^2(dt)."""
    mid = math.sqrt(tmin * tmax)
    m1, m2 = mid - tmin, tmax - mid
    V1, V2 = m1, m1 + m2
    om1, om2 = m1, m2
    tau = 1.0 / (tmax - tmin)                    # int_tmax^inf (t - tmin)^-2 dt
    k = om2 / V2 ** 2 + tau
    # Q = diag(om1 (m1/V1)^2, 0) + k [m1, m2]^T [m1, m2];  D = diag(m1, m2)
    a = (om1 * (m1 / V1) ** 2 + k * m1 * m1) / m1
    b = k * m1 * m2 / math.sqrt(m1 * m2)
    c = k * m2 * m2 / m2
    lam = 0.5 * (a + c) + math.sqrt(0.25 * (a - c) ** 2 + b * b)
    return math.sqrt(lam)


def test_oracle_two_cells_by_hand():
    got = est.discrete_oracle(classical(), n=2, window=(1e-8, 1e4))
    assert got == pytest.approx(_two_cell_value(1e-8, 1e4), rel=1e-12)


def test_oracle_refinement_monotone():
    a = est.discrete_oracle(classical(), n=512)
    b = est.discrete_oracle(classical(), n=2048)
    assert a <= b + 1e-6


def test_oracle_below_classical_constant():
    for n in (64, 256, 1024):
        assert est.discrete_oracle(classical(), n=n) <= hardy_const(2.0, 0.0) * (1 + 1e-3)


def test_ascent_agrees_with_eigen():
    F = est._build_form(classical(), 256, (1e-4, 1e4))
    exact = est._top_singular(F.matrix())
    x0 = F.Vr ** (-0.45)
    val, converged, _ = est._ascent(F, x0, 20000, 1e-13)
    assert val == pytest.approx(exact, rel=1e-8)


def test_oracle_log_ratio_gradient():
    inst = classical("T1.iv", r=1.5, alpha=0.1, beta=1.0)
    F = est._build_form(inst, 24, (1e-2, 1e2))
    rng = np.random.default_rng(0)
    x = np.exp(rng.normal(size=24))
    val, g = F.log_ratio(x)
    h = 1e-6
    for j in (0, 7, 23):
        z = np.log(x)
        z[j] += h
        up, _ = F.log_ratio(np.exp(z))
        z[j] -= 2 * h
        dn, _ = F.log_ratio(np.exp(z))
        assert (up - dn) / (2 * h) == pytest.approx(g[j], rel=1e-5, abs=1e-9)


def test_oracle_nonlinear_is_advisory():
    out = est.discrete_oracle(classical("T1.vi"), n=128, max_iter=500, detail=True)
    assert out["method"] == "ascent"
    assert isinstance(out["converged"], bool)
    assert 0 < out["value"] < math.e * (1 + 1e-3)


def test_oracle_unsupported():
    inst = StatementInstance("T1.i", Params(p=2.0), lebesgue(), SupForm(Lq(2.0, CHI01), CHI01))
    with pytest.raises(UnsupportedFunctional):
        est.discrete_oracle(inst, n=16)
    inst = StatementInstance("T1.i", Params(p=2.0), lebesgue(), Lq(np.inf, CHI01))
    with pytest.raises(UnsupportedFunctional):
        est.discrete_oracle(inst, n=16)


def test_weighted_form_oracles():
    h = est.weighted_form_oracle("hardy", 2.0, 0.0, lebesgue(), n=1024)
    c = est.weighted_form_oracle("copson", 2.0, 0.0, lebesgue(), n=1024)
    assert 1.9 < h <= hardy_const(2.0, 0.0) + 1e-3
    assert 1.9 < c <= copson_const(2.0, 0.0) + 1e-3


# -- lower bounds ----------------------------------------------------------------------

def test_lower_bound_small_budget_deterministic():
    a = est.lower_bound_search(classical(), budget=1, seed=3)
    b = est.lower_bound_search(classical(), budget=1, seed=3)
    assert a.lower_bound == b.lower_bound and a.evaluations == 1
    assert a.witness.to_dict() == b.witness.to_dict()


def test_lower_bound_witness_reevaluates():
    res = est.lower_bound_search(classical(), budget=400, seed=0)
    assert res.lower_bound == pytest.approx(ratio(classical(), res.witness), rel=1e-12)
    assert res.lower_bound >= 1.9
    d = res.to_dict({"id": "T1.i"})
    assert set(d) >= {"instance", "lower_bound", "witness", "search"}


def test_geo_lower_bound_below_hardy_on_same_witness():
    geo = est.lower_bound_search(classical("T1.vi"), budget=300, seed=0)
    assert geo.lower_bound <= ratio(classical("T1.i"), geo.witness) * (1 + 1e-9)


def test_lower_bound_within_oracle_margin():
    lb = est.lower_bound_search(classical(), budget=600, seed=1).lower_bound
    assert lb <= est.discrete_oracle(classical(), n=2048) * 1.05


def test_all_degenerate(monkeypatch):
    monkeypatch.setattr(est, "evaluate", lambda inst, f, positivize_eps=None: EvalRecord(f, np.inf, np.inf, 0.0))
    with pytest.raises(AllRatiosDegenerate):
        est.lower_bound_search(classical(), budget=30)


def test_invalid_instance_rejected():
    with pytest.raises(ValueError):
        est.lower_bound_search(classical("T1.ii", alpha=-0.6), budget=5)


# -- chain -----------------------------------------------------------------------------

def test_chain_single_edge():
    rep = est.chain_verify(chain_instance(), n_samples=30, edges=["i->vi"])
    assert rep["C1_source"] == "muckenhoupt_upper"
    assert [e["edge"] for e in rep["edges"]] == ["i->vi"]
    assert rep["violations"] == 0
    assert rep["edges"][0]["empirical_lower"] <= rep["edges"][0]["bounds"]["C6"]


def test_chain_self_test_reports_violations():
    rep = est.chain_verify(chain_instance(), n_samples=20, self_test=True, edges=["i->vi", "ii->iv"])
    assert rep["violations"] > 0
    w = rep["edges"][0]["witnesses"][0]
    f = TestFunction.from_dict(w["f"])
    rec = evaluate(chain_instance().with_id("T1.vi"), f)
    assert rec.ratio == pytest.approx(w["ratio"], rel=1e-12)


def test_chain_side_label():
    rep = est.chain_verify(chain_instance(), n_samples=5, edges=["ix->iii"])
    side = rep["edges"][0]["side"]
    assert side["passed"] and "C8" in side["label"]


def test_chain_missing_upper_bound():
    inst = StatementInstance("T1.i", Params(p=2.0), finite_mass_weight(), SupForm(Lq(2.0, CHI01), CHI01))
    with pytest.raises(MissingUpperBound):
        est.chain_verify(inst, n_samples=2)
    inst = StatementInstance("T1.i", Params(p=2.0), lebesgue(), Lq(2.0, PiecewisePower([], [1.0], [1.5])))
    with pytest.raises(MissingUpperBound):
        est.chain_verify(inst, n_samples=2)
    assert Lq(2.0, CHI01).apply(ONE) == 1.0
