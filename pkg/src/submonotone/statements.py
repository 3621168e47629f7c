"""Inequality statements: parameter validation, both sides, ratios."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import conventions as cv
from .constants import conjugate
from .errors import NotStrictlyPositive, UnsupportedStatement
from .funcspace import TestFunction, positivize
from .functionals import Derived, Functional, derived_t4
from .measure import PiecewisePower, Weight
from .operators import copson, geo_mean, hardy_avg, harm_mean, parse_phi, phi_mean
from .pointwise import ONE, Fn, Pointwise, merge_breakpoints
from .quadrature import integrate_log

T1 = ("T1.i", "T1.ii", "T1.iii", "T1.iv", "T1.v", "T1.vi", "T1.vii", "T1.viii", "T1.ix")
T3 = ("T3.i", "T3.ii", "T3.iii")
T4 = ("T4.i", "T4.ii", "T4.iii")
STATEMENT_IDS = T1 + T3 + T4

# statements whose inequality is stated for strictly positive f only
POSITIVE_ONLY = {"T1.vi", "T1.vii", "T1.viii", "T1.ix", "T3.i", "T4.i"}

# "for every parameter" and "there exist parameters" versions share one evaluator
EVALUATOR = {"T1.iii": "T1.ii", "T1.v": "T1.iv", "T1.viii": "T1.vii"}
QUANTIFIER = {"T1.ii": "for-all", "T1.iii": "exists", "T1.iv": "for-all", "T1.v": "exists",
              "T1.vii": "for-all", "T1.viii": "exists"}


@dataclass(frozen=True)
class Params:
    p: float
    r: float = 1.0
    alpha: float = 0.0
    beta: float = 0.0
    m: float = 1.0
    phi: str = "log"
    # the (vi) => (ii) step only needs alpha > -1/p
    relax_alpha: bool = False

    @property
    def pc(self) -> float:
        return conjugate(self.p)

    def as_dict(self) -> dict:
        return {"p": self.p, "r": self.r, "alpha": self.alpha, "beta": self.beta,
                "m": self.m, "phi": self.phi, "relax_alpha": self.relax_alpha}

    @classmethod
    def from_dict(cls, d: dict) -> "Params":
        keys = ("p", "r", "alpha", "beta", "m", "phi", "relax_alpha")
        unknown = set(d) - set(keys)
        if unknown:
            raise KeyError(f"unknown parameter(s): {sorted(unknown)}")
        kw = {k: d[k] for k in keys if k in d}
        for k in ("p", "r", "alpha", "beta", "m"):
            if k in kw:
                kw[k] = float(kw[k])
        return cls(**kw)


@dataclass
class StatementInstance:
    id: str
    params: Params
    v: Weight
    rho: Functional
    u: Weight | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.id not in STATEMENT_IDS:
            raise UnsupportedStatement(f"unknown statement {self.id!r}")
        if isinstance(self.params, dict):
            self.params = Params.from_dict(self.params)
        if self.id in T3 + T4 and self.u is None:
            raise UnsupportedStatement(f"{self.id} needs a second weight u")

    def with_id(self, sid: str, **changes) -> "StatementInstance":
        return StatementInstance(sid, replace(self.params, **changes), self.v, self.rho, self.u)

    # derived weights, computed once
    @property
    def w3(self) -> Pointwise:
        if "w3" not in self._cache:
            self._cache["w3"] = t3_derived_weight(self.u, self.v, self.params.p)
        return self._cache["w3"]

    @property
    def t4(self) -> tuple[Weight, Pointwise]:
        if "t4" not in self._cache:
            self._cache["t4"] = t4_derived_weight(self.u, self.v, self.params.p)
        return self._cache["t4"]


@dataclass
class EvalRecord:
    f: object
    lhs: float
    rhs: float
    ratio: float

    def to_dict(self) -> dict:
        d = {"lhs": self.lhs, "rhs": self.rhs, "ratio": self.ratio}
        if hasattr(self.f, "to_dict"):
            d["f"] = self.f.to_dict()
        return d


# -- validation -------------------------------------------------------------------

def _alpha_floor(p: float) -> float:
    return max(-1.0 / p, -(1.0 - 1.0 / p))


def validate(inst: StatementInstance) -> list[str]:
    """Every violated parameter constraint, as text."""
    P, sid = inst.params, inst.id
    out: list[str] = []
    p, r, a, b, m = P.p, P.r, P.alpha, P.beta, P.m
    if sid in T1:
        if not p > 1:
            out.append(f"p must lie in (1, inf); got p={p:g}")
            return out
        if sid in ("T1.ii", "T1.iii", "T1.iv", "T1.v"):
            if not r >= 1:
                out.append(f"r must lie in [1, inf); got r={r:g}")
            floor = -1.0 / p if P.relax_alpha else _alpha_floor(p)
            if not a > floor:
                what = "alpha > -1/p" if P.relax_alpha else "alpha > max{-1/p, -1/p'}"
                out.append(f"{what} violated: alpha={a:g} <= {floor:g}")
        if sid in ("T1.iv", "T1.v"):
            rc_inv = 0.0 if r == 1 else 1.0 - 1.0 / r
            if not b > -rc_inv:
                out.append(f"beta > -1/r' violated: beta={b:g} <= {-rc_inv:g}")
            if not a * p - b * r < r - 1:
                out.append(f"alpha p - beta r < r - 1 violated: {a * p - b * r:g} >= {r - 1:g}")
        if sid in ("T1.vii", "T1.viii") and not r > 0:
            out.append(f"r must lie in (0, inf); got r={r:g}")
        if sid == "T1.ix":
            try:
                parse_phi(P.phi)
            except Exception as exc:
                out.append(str(exc))
    elif sid in T3:
        if not p > 0:
            out.append(f"p must lie in (0, inf); got p={p:g}")
            return out
        if sid in ("T3.ii", "T3.iii"):
            if not r >= 1:
                out.append(f"r must lie in [1, inf); got r={r:g}")
            mp = m * p
            if sid == "T3.ii" and not m >= 1.0 / p:
                out.append(f"m >= 1/p violated: m={m:g} < {1.0 / p:g}")
            if sid == "T3.iii" and not m > 1.0 / p:
                out.append(f"m > 1/p violated: m={m:g} <= {1.0 / p:g}")
            if mp >= 1:
                floor = max(-1.0 / mp, -(1.0 - 1.0 / mp))
                if not a > floor:
                    out.append(f"alpha > max{{-1/(mp), -1/(mp)'}} violated: alpha={a:g} <= {floor:g}")
        if sid == "T3.iii":
            if not b > -1:
                out.append(f"beta > -1 violated: beta={b:g}")
            if not a * m * p - b * r < r - 1:
                out.append(f"alpha m p - beta r < r - 1 violated: {a * m * p - b * r:g} >= {r - 1:g}")
    else:
        if not (p > 0 and m > 0):
            out.append(f"p and m must be positive; got p={p:g}, m={m:g}")
            return out
        if not m * p > 1:
            out.append(f"m p > 1 violated: mp={m * p:g}")
        if not a > -1:
            out.append(f"alpha > -1 violated: alpha={a:g}")
        if not b > -1:
            out.append(f"beta > -1 violated: beta={b:g}")
    return out


# -- right-hand sides -------------------------------------------------------------

def rhs_form(sid: str, P: Params | dict) -> tuple[float, float]:
    """(s, a) with RHS = (int f^s W^a dW)^(1/p) against the statement's RHS weight."""
    if isinstance(P, dict):
        P = Params.from_dict(P)
    p, r, a, b, m = P.p, P.r, P.alpha, P.beta, P.m
    sid = EVALUATOR.get(sid, sid)
    table = {
        "T1.i": (p, 0.0), "T1.vi": (p, 0.0), "T1.ix": (p, 0.0),
        "T1.ii": (r, a * p), "T1.iv": (r, a * p - b * r), "T1.vii": (r * p, 0.0),
        "T3.i": (p, 0.0), "T3.ii": (r, a * m * p), "T3.iii": (r, a * p * m - b * r),
        "T4.i": (p, 0.0), "T4.ii": (m * p, a * m * p), "T4.iii": (m * p, -(b - a) * m * p),
    }
    return table[sid]


def rhs_weight(inst: StatementInstance) -> Weight:
    sid = inst.id
    if sid in ("T3.ii", "T3.iii"):
        return inst.u
    if sid in ("T4.ii", "T4.iii"):
        return inst.t4[0]
    return inst.v


def weighted_power_integral(f, w: Weight, s: float, a: float = 0.0,
                            tol: float = 1e-10) -> float:
    """int_0^inf f^s V^a v."""
    return weighted_moment(f, w, s, a, np.inf, tol)[0]


def weighted_moment(f, w: Weight, s: float, a: float = 0.0, b: float = np.inf,
                    tol: float = 1e-10) -> tuple[float, bool]:
    """(int_0^b f^s V^a v, exact).  Exact for a = 0 and on the first segment of
    w, where V is a pure power; quadrature on the rest."""
    if isinstance(f, PiecewisePower):
        fs = f.pow(s)
        if a == 0:
            return float(fs.times(w).integral(0.0, b)), True
        b1 = float(w.edges[0]) if len(w.edges) else np.inf
        c0, g0 = w.coef[0], w.gamma[0]
        Va = PiecewisePower([], [(c0 / (g0 + 1.0)) ** a], [(g0 + 1.0) * a])
        head = float(fs.times(w).times(Va).integral(0.0, min(b, b1)))
        live = fs.coef > 0
        hi = min(b, float(fs.highs[live].max()) if live.any() else 0.0)
        if not hi > b1:
            return head, True
        g = Fn(lambda t: cv.mul(cv.mul(fs(t), cv.power(w.V(t), a)), w(t)),
               merge_breakpoints(fs.breakpoints, w.breakpoints))
        return head + integrate_log(g, b1, hi, tol=tol).value, False
    g = f if isinstance(f, Pointwise) else Fn(f)
    h = Fn(lambda t: cv.mul(cv.mul(cv.power(g(t), s), cv.power(w.V(t), a)), w(t)),
           merge_breakpoints(g.breakpoints, w.breakpoints))
    return integrate_log(h, 0.0, b, tol=tol).value, False


def rhs(inst: StatementInstance, f) -> float:
    s, a = rhs_form(inst.id, inst.params)
    val = weighted_power_integral(f, rhs_weight(inst), s, a)
    return float(cv.power(val, 1.0 / inst.params.p))


# -- left-hand sides --------------------------------------------------------------

def _pw(fn, *parts, label="G"):
    return Fn(fn, merge_breakpoints(*(getattr(x, "breakpoints", ()) for x in parts)), label)


def lhs_expression(inst: StatementInstance, f) -> Pointwise:
    """The function of t to which rho is applied."""
    P, v = inst.params, inst.v
    p, r, a, b, m = P.p, P.r, P.alpha, P.beta, P.m
    sid = EVALUATOR.get(inst.id, inst.id)
    if sid == "T1.i":
        return hardy_avg(f, v)
    if sid == "T1.ii":
        C = copson(f, v)
        return _pw(lambda t: cv.mul(cv.power(v.V(t), a), cv.power(C(t), r / p)), C, v, label="V^a C^(r/p)")
    if sid == "T1.iv":
        H = hardy_avg(f, v)
        e = a - b * r / p
        return _pw(lambda t: cv.mul(cv.power(H(t), r / p), cv.power(v.V(t), e)), H, v, label="H^(r/p) V^e")
    if sid == "T1.vi":
        return geo_mean(f, v)
    if sid == "T1.vii":
        return harm_mean(f, v, r)
    if sid == "T1.ix":
        return phi_mean(f, v, P.phi)
    u = inst.u
    if sid == "T3.i":
        return geo_mean(f, u)
    if sid == "T3.ii":
        C, w = copson(f, u), inst.w3
        return _pw(lambda t: cv.mul(cv.mul(cv.power(C(t), r / p), cv.power(u.V(t), a * m)), w(t)),
                   C, u, w, label="T3.ii")
    if sid == "T3.iii":
        # the average is read against u: the T1 equivalence is applied with v = u
        H, w = hardy_avg(f, u), inst.w3
        e = a * m - b * r / p
        return _pw(lambda t: cv.mul(cv.mul(cv.power(H(t), r / p), cv.power(u.V(t), e)), w(t)),
                   H, u, w, label="T3.iii")
    ut, Ut = inst.t4
    if sid == "T4.i":
        return harm_mean(f, u, 1.0)
    if sid == "T4.ii":
        C = copson(f, ut)
        return _pw(lambda t: cv.mul(cv.mul(cv.power(C(t), m), u.V(t)), cv.power(ut.V(t), a * m - 1.0)),
                   C, u, ut, label="T4.ii")
    if sid == "T4.iii":
        H = hardy_avg(f, ut)
        e = -(b - a) * m - 1.0
        return _pw(lambda t: cv.mul(cv.mul(cv.power(H(t), m), u.V(t)), cv.power(ut.V(t), e)),
                   H, u, ut, label="T4.iii")
    raise UnsupportedStatement(sid)


def _require_positive(inst: StatementInstance, f):
    if inst.id in POSITIVE_ONLY and isinstance(f, PiecewisePower) and np.any(f.coef == 0):
        raise NotStrictlyPositive(f"{inst.id} is stated for strictly positive f; positivize first")


def lhs(inst: StatementInstance, f) -> float:
    _require_positive(inst, f)
    return float(inst.rho.apply(lhs_expression(inst, f)))


def evaluate(inst: StatementInstance, f, positivize_eps: float | None = None) -> EvalRecord:
    """LHS, RHS and their ratio (0/0 and inf/inf read as 0).

    With ``positivize_eps`` a test function vanishing on a tail is first made
    strictly positive at a relative RHS cost of at most that amount.
    """
    if positivize_eps is not None and inst.id in POSITIVE_ONLY and isinstance(f, PiecewisePower) \
            and np.any(f.coef == 0):
        s, _ = rhs_form(inst.id, inst.params)
        zero = f.coef == 0
        A = float(f.lows[zero].min())
        f = positivize(TestFunction.of(f), A, positivize_eps, rhs_weight(inst), s)
    L = lhs(inst, f)
    R = rhs(inst, f)
    return EvalRecord(f, L, R, cv.ratio(L, R))


def ratio(inst: StatementInstance, f) -> float:
    return evaluate(inst, f).ratio


def constant_term_check(inst: StatementInstance) -> float:
    """rho(1) / (int v)^(1/p), with x/inf = 0."""
    return cv.ratio(inst.rho.apply(ONE), cv.power(inst.v.V_inf, 1.0 / inst.params.p))


# -- derived weights --------------------------------------------------------------

def _log_ratio_parts(u: Weight, v: Weight):
    """ln(u/v) on the merged partition, as per-segment (a_i + b_i ln s)."""
    edges = merge_breakpoints(u.edges, v.edges)
    ur, vr = u.refine(edges), v.refine(edges)
    a = np.log(ur.coef) - np.log(vr.coef)
    b = ur.gamma - vr.gamma
    return ur, a, b


def t3_derived_weight(u: Weight, v: Weight, p: float, method: str = "closed-form") -> Fn:
    """w(t) = exp( (1/(p U(t))) int_0^t ln(u/v) u )."""
    if method == "closed-form":
        ur, a, b = _log_ratio_parts(u, v)

        def w(t):
            t = np.asarray(t, dtype=float)
            return cv.exp(ur.log_cumulative(t, a, b) / (p * u.V(t)))
        return Fn(w, ur.breakpoints, "w3")
    if method != "quadrature":
        raise ValueError(method)
    lr = Fn(lambda s: np.log(u(s)) - np.log(v(s)), merge_breakpoints(u.breakpoints, v.breakpoints))
    pos = Fn(lambda s: np.maximum(lr(s), 0.0) * u(s), lr.breakpoints)
    neg = Fn(lambda s: np.maximum(-lr(s), 0.0) * u(s), lr.breakpoints)

    def wq(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty(t.shape)
        for k, tk in enumerate(t.ravel()):
            I = integrate_log(pos, 0.0, tk, tol=1e-12).value - integrate_log(neg, 0.0, tk, tol=1e-12).value
            out.ravel()[k] = np.exp(I / (p * float(u.V(tk))))
        return out
    return Fn(wq, lr.breakpoints, "w3q")


def t4_derived_weight(u: Weight, v: Weight, p: float) -> tuple[Weight, Pointwise]:
    """(u~, U~) with u~ = u^(p/(p+1)) v^(1/(p+1)) and U~ its primitive.

    Written as u * (v/u)^(1/(p+1)) so that u = v returns u unchanged.
    """
    edges = merge_breakpoints(u.edges, v.edges)
    ur, vr = u.refine(edges), v.refine(edges)
    k = 1.0 / (p + 1.0)
    coef = ur.coef * (vr.coef / ur.coef) ** k
    gamma = ur.gamma + (vr.gamma - ur.gamma) * k
    ut = Weight(ur.edges, coef, gamma)
    return ut, ut.primitive_fn


def t4_functional(inst: StatementInstance) -> Derived:
    """rho_m(g) = rho(g^m U / U~)^(1/m) for a T4 instance."""
    ut, Ut = inst.t4
    return derived_t4(inst.rho, inst.params.m, inst.u.primitive_fn, Ut)


# -- two-weight Hardy form ----------------------------------------------------------

def two_weight_hardy(F, u: PiecewisePower, w: PiecewisePower, p: float, q: float) -> tuple[float, float]:
    """Both sides of (int (int_0^t F)^q w)^(1/q) <= C (int F^p u)^(1/p), evaluated
    directly (no reduction)."""
    run = F.cumulative if isinstance(F, PiecewisePower) else None
    if run is None:
        from .quadrature import Cumulative
        run = Cumulative(F, "head")
    g = Fn(lambda t: cv.mul(cv.power(run(t), q), w(t)), merge_breakpoints(F.breakpoints, w.breakpoints))
    left = integrate_log(g, 0.0, np.inf).value ** (1.0 / q)
    if isinstance(F, PiecewisePower):
        right = float(F.pow(p).times(u).total()) ** (1.0 / p)
    else:
        h = Fn(lambda t: cv.mul(cv.power(F(t), p), u(t)), merge_breakpoints(F.breakpoints, u.breakpoints))
        right = integrate_log(h, 0.0, np.inf).value ** (1.0 / p)
    return float(left), float(right)


def hardy_reduction(u: Weight, w: PiecewisePower, p: float, q: float):
    """v = u^(1-p') and rho(g) = (int g^q w V^q)^(1/q): the T1.i instance that
    the two-weight Hardy inequality with weights (u, w) becomes."""
    from .functionals import Lq
    v = Weight.from_piecewise(u.pow(1.0 - conjugate(p)))
    outer = Fn(lambda t: cv.mul(w(t), cv.power(v.V(t), q)), merge_breakpoints(w.breakpoints, v.breakpoints),
               "w V^q")
    return StatementInstance("T1.i", Params(p=p), v, Lq(q, outer))


# -- JSON -------------------------------------------------------------------------

def instance_from_dict(d: dict) -> StatementInstance:
    from .functionals import functional_from_dict
    from .measure import weight_from_json
    for key in ("id", "params", "weight", "functional"):
        if key not in d:
            raise KeyError(f"statement instance is missing {key!r}")
    u = weight_from_json(d["u"]) if d.get("u") is not None else None
    return StatementInstance(d["id"], Params.from_dict(d["params"]), weight_from_json(d["weight"]),
                             functional_from_dict(d["functional"]), u)


def instance_to_dict(inst: StatementInstance) -> dict:
    d = {"id": inst.id, "params": inst.params.as_dict(), "weight": inst.v.to_dict(),
         "functional": inst.rho.to_dict()}
    if inst.u is not None:
        d["u"] = inst.u.to_dict()
    return d
