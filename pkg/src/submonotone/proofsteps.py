"""Randomized checks of the pointwise inequalities used in the equivalence proofs.

Each step has a sampler drawing inputs that satisfy the step's hypotheses and
a checker that evaluates both sides.  A step is a list of ``small <= big``
pairs (``small == big`` for PS16); the record keeps the worst relative margin.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import brentq

from . import conventions as cv
from .constants import conjugate, copson_const, d_gamma, hardy_const, kappa
from .errors import HypothesisUnsatisfied
from .funcspace import GeneratorProfile, TestFunction, integrability_window, random_testfn
from .functionals import Lq
from .measure import PiecewisePower, Weight, log_moment, power_moment
from .operators import copson, geo_mean, hardy_avg, harm_mean, phi_mean, running_integral
from .pointwise import ONE, Fn, merge_breakpoints
from .quadrature import integrate_log
from .statements import weighted_moment

CLOSED_TOL = 1e-9
QUAD_TOL = 1e-6
STEP_IDS = tuple(f"PS{k}" for k in range(1, 17))
GATE_P = (1.0, 1.5, 2.0, 3.0)


def gate_alphas(p: float) -> tuple[float, ...]:
    """alpha_k = -1 + p k/4, k = 1..3: inside (-1, p-1) for every p >= 1."""
    return tuple(-1.0 + p * k / 4.0 for k in (1, 2, 3))


@dataclass
class StepCheckRecord:
    step: str
    digest: str
    margin: float          # big - small of the worst part (|small - big| for equalities)
    tol: float
    scale: float
    passed: bool
    path: str              # "closed-form" or "quadrature"
    part: str = ""

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def rel_margin(self) -> float:
        return self.margin / self.scale if self.scale > 0 else self.margin


# -- input encoding --------------------------------------------------------------

def _jsonable(x):
    if isinstance(x, PiecewisePower):
        return x.to_dict()
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (float, np.floating)):
        v = float(x)
        return v if np.isfinite(v) else str(v)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, Lq):
        return x.to_dict()
    return x


def digest(inputs: dict) -> str:
    blob = json.dumps(_jsonable(inputs), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


# -- samplers ---------------------------------------------------------------------

TAIL_GAP = 0.05


def _weight(rng, finite: bool | None = None) -> Weight:
    k = int(rng.integers(1, 4))
    edges = np.unique(np.sort(10.0 ** rng.uniform(-1.5, 1.5, size=k - 1)))
    k = len(edges) + 1
    gam = rng.uniform(-2.5, 1.5, size=k)
    gam[0] = rng.uniform(-0.7, 1.5)
    if finite is True:
        if k == 1:
            edges = np.array([10.0 ** rng.uniform(-1, 1)])
            gam = np.array([gam[0], 0.0])
            k = 2
        gam[-1] = rng.uniform(-2.5, -1.2)
    elif finite is False:
        gam[-1] = rng.uniform(-0.9, 1.5) if k > 1 else gam[0]
    # a tail exponent near -1 makes V grow like a power of log t, which no
    # log-axis tail model resolves
    if abs(gam[-1] + 1.0) < TAIL_GAP:
        gam[-1] = -1.0 + np.copysign(TAIL_GAP, gam[-1] + 1.0)
    coef = np.exp(rng.uniform(np.log(0.2), np.log(5.0), size=k))
    return Weight(edges, coef, gam)


def _head_min(w: Weight, windows) -> float:
    """Smallest admissible leading exponent: int h^s V^a v < inf near 0 for
    every (s, a) in windows, with a margin."""
    return max(integrability_window(w, s, a)[0] + 0.1 / s for s, a in windows)


def _tail_max(w: Weight, windows) -> float:
    return min(integrability_window(w, s, a)[1] - 0.1 / s for s, a in windows)


def _profile(w, windows, exponents, zero_tail) -> GeneratorProfile:
    head = _head_min(w, windows)
    tail = np.inf if zero_tail else _tail_max(w, windows)
    lo, hi = exponents
    if head >= hi:
        hi = head + 1.0
    if not zero_tail and not tail > max(lo, head):
        zero_tail = True
        tail = np.inf
    if tail <= lo:
        lo = tail - 1.0
    return GeneratorProfile(0, (1, 4), (lo, hi), (0.2, 5.0), head, tail, 1.0 if zero_tail else 0.0)


def _h(rng, w: Weight, windows=((1.0, 0.0),), zero_tail: bool = True,
       exponents=(-1.5, 1.5)) -> TestFunction:
    """Random piecewise power with int h^s V^a v < inf for every (s, a) in
    ``windows``; compactly supported when ``zero_tail``."""
    return random_testfn(_profile(w, windows, exponents, zero_tail), rng)


def _positive(rng, w: Weight, windows=((1.0, 0.0),), exponents=(-1.5, 1.5)) -> TestFunction:
    """Strictly positive random piecewise power, locally integrable per windows."""
    prof = _profile(w, windows, exponents, True)
    return random_testfn(GeneratorProfile(0, prof.segments, prof.exponents, prof.coefs,
                                          prof.head_min, np.inf, 0.0), rng)


def _support_end(h: PiecewisePower) -> float:
    live = h.coef > 0
    return float(h.highs[live].max()) if live.any() else 0.0


def _ts(rng, hi: float = np.inf, k: int = 3) -> np.ndarray:
    if np.isfinite(hi):
        return np.sort(hi * 10.0 ** rng.uniform(-2.5, -0.02, size=k))
    return np.sort(10.0 ** rng.uniform(-2.0, 2.0, size=k))


def _params_iv(rng, r_one: float = 0.3) -> dict:
    """(p, r, alpha, beta) with r >= 1, alpha > max(-1/p, -1/p'), beta > -1/r'
    and alpha p - beta r < r - 1."""
    p = float(rng.uniform(1.2, 4.0))
    r = 1.0 if rng.random() < r_one else float(rng.uniform(1.0, 4.0))
    alpha = max(-1.0 / p, -1.0 + 1.0 / p) + float(rng.uniform(0.02, 1.5))
    rc_inv = 0.0 if r == 1 else 1.0 - 1.0 / r
    bmin = max(-rc_inv, (alpha * p - r + 1.0) / r)
    beta = bmin + float(rng.uniform(0.02, 1.5))
    return {"p": p, "r": r, "alpha": alpha, "beta": beta}


def _need(cond: bool, msg: str):
    if not cond:
        raise HypothesisUnsatisfied(msg)


# -- evaluation helpers -------------------------------------------------------------

def _finish(step: str, inputs: dict, parts: list, path: str, tol: float | None,
            equality: bool = False) -> StepCheckRecord:
    """parts: (name, small, big) with small <= big expected elementwise, or
    (name, x, y, "eq") for an identity."""
    tol = (CLOSED_TOL if path == "closed-form" else QUAD_TOL) if tol is None else tol
    worst = None
    for part in parts:
        name, small, big = part[:3]
        eq = equality or (len(part) > 3 and part[3] == "eq")
        small = np.atleast_1d(np.asarray(small, dtype=float))
        big = np.atleast_1d(np.asarray(big, dtype=float))
        small, big = np.broadcast_arrays(small, big)
        for s, b in zip(small, big):
            if np.isnan(s) or np.isnan(b):
                margin, scale = -np.inf, 1.0
            elif np.isinf(b) and not eq:
                margin, scale = np.inf, 1.0
            elif np.isinf(s):
                margin, scale = -np.inf, 1.0
            else:
                scale = max(abs(s), abs(b), 1e-300)
                margin = -abs(b - s) if eq else b - s
            rel = margin / scale
            if worst is None or rel < worst[0]:
                worst = (rel, margin, scale, name)
    rel, margin, scale, name = worst
    passed = bool(rel >= -tol)
    return StepCheckRecord(step, digest(inputs), float(margin), float(tol), float(scale),
                           passed, path, name)


def _V(w: Weight, t):
    return np.asarray(w.V(t), dtype=float)


# -- the steps ------------------------------------------------------------------------

def sample_ps1(rng):
    w = _weight(rng)
    return {"f": _positive(rng, w), "v": w, "t": _ts(rng)}


def check_ps1(inp, tol=None):
    f, w, t = inp["f"], inp["v"], inp["t"]
    _need(bool(np.all(f.coef > 0)), "PS1 needs a strictly positive f")
    return _finish("PS1", inp, [("geo<=hardy", geo_mean(f, w)(t), hardy_avg(f, w)(t))],
                   "closed-form", tol)


def sample_ps2(rng):
    w = _weight(rng)
    p = float(rng.uniform(1.2, 4.0))
    P = {"p": p, "r": float(rng.uniform(1.0, 4.0)),
         "alpha": -1.0 / p + float(rng.uniform(0.02, 2.0))}
    h = _h(rng, w)
    return {"h": h, "v": w, "params": P, "t": _ts(rng, _support_end(h))}


def _capped(g, cap: float, bps) -> Fn:
    """g on (0, cap], frozen at g(cap) beyond; averages up to cap only see g."""
    gcap = float(g(np.array([cap]))[0])

    def val(s):
        s = np.asarray(s, dtype=float)
        return np.where(s <= cap, g(np.minimum(s, cap)), gcap)
    return Fn(val, merge_breakpoints(bps, (cap,)))


def check_ps2(inp, tol=None):
    h, w, P, t = inp["h"], inp["v"], inp["params"], inp["t"]
    p, r, a = P["p"], P["r"], P["alpha"]
    _need(a > -1.0 / p and r >= 1, "PS2 needs r >= 1 and alpha > -1/p")
    _need(bool(np.all(t < _support_end(h))), "PS2 needs copson h > 0 on (0, t)")
    C = copson(h, w)
    F = _capped(lambda s: cv.mul(cv.power(C(s), r / p), cv.power(w.V(s), a)), float(np.max(t)),
                merge_breakpoints(h.breakpoints, w.breakpoints))
    big = geo_mean(F, w)(t)
    small = np.exp(-a) * cv.power(C(t), r / p) * _V(w, t) ** a
    # the log-moment identity used on the way, int_0^t ln V v = V (ln V - 1)
    lm_exact = np.array([log_moment(w, x) for x in t])
    lm_quad = np.array([_log_V_quad(w, x) for x in t])
    return _finish("PS2", inp, [("log-moment", lm_quad, lm_exact, "eq"), ("vi-ii", small, big)],
                   "quadrature", tol)


def _level_point(w: Weight, level: float) -> tuple[float, ...]:
    """The t with V(t) = level (V is increasing), or () if there is none."""
    if not 0.0 < level < w.V_inf:
        return ()
    lo, hi = 1.0, 1.0
    while w.V(lo) > level:
        lo *= 0.5
    while w.V(hi) < level:
        hi *= 2.0
    return (float(brentq(lambda s: float(w.V(s)) - level, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps)),)


def _log_V_quad(w: Weight, t: float) -> float:
    bps = merge_breakpoints(w.breakpoints, _level_point(w, 1.0))
    pos = Fn(lambda s: np.maximum(np.log(w.V(s)), 0.0) * w(s), bps)
    neg = Fn(lambda s: np.maximum(-np.log(w.V(s)), 0.0) * w(s), bps)
    return integrate_log(pos, 0.0, t, tol=1e-11).value - integrate_log(neg, 0.0, t, tol=1e-11).value


def sample_ps3(rng):
    n = 16
    a = np.where(rng.random(n) < 0.1, 0.0, 10.0 ** rng.uniform(-6, 6, n))
    b = np.where(rng.random(n) < 0.1, 0.0, 10.0 ** rng.uniform(-6, 6, n))
    same = rng.random(n) < 0.2
    b = np.where(same, a, b)
    return {"a": a, "b": b, "gamma": float(10.0 ** rng.uniform(-1.3, 0.7))}


def check_ps3(inp, tol=None):
    a, b, g = np.asarray(inp["a"]), np.asarray(inp["b"]), inp["gamma"]
    _need(g > 0 and bool(np.all(a >= 0)) and bool(np.all(b >= 0)), "PS3 needs gamma > 0 and a, b >= 0")
    return _finish("PS3", inp, [("dgamma-inequality", (a + b) ** g, d_gamma(g) * (a ** g + b ** g))],
                   "closed-form", tol)


def _iv_inputs(rng, extra_windows=True):
    w = _weight(rng, finite=bool(rng.random() < 0.5))
    P = _params_iv(rng)
    e = -P["beta"] * P["r"] + P["alpha"] * P["p"]
    win = ((1.0, 0.0), (P["r"], e)) if extra_windows else ((1.0, 0.0),)
    h = _h(rng, w, win)
    return {"h": h, "v": w, "params": P, "t": _ts(rng, _support_end(h) * 3.0)}


def _f_iv(h, w, beta):
    G = running_integral(h, w)
    return Fn(lambda s: cv.mul(cv.power(w.V(s), -beta - 1.0), G(s)),
              merge_breakpoints(h.breakpoints, w.breakpoints), "f_iv"), G


def sample_ps4(rng):
    return _iv_inputs(rng, extra_windows=False)


def check_ps4(inp, tol=None):
    h, w, P, t = inp["h"], inp["v"], inp["params"], inp["t"]
    p, r, b = P["p"], P["r"], P["beta"]
    _need(b > -1, "PS4 needs beta > -1")
    f, G = _f_iv(h, w, b)
    g = r / p
    Cf = copson(f, w)(t)
    Vt, Vi = _V(w, t), w.V_inf
    small = (1.0 / (b + 1.0)) ** g * (Vt ** (-b - 1.0) - Vi ** (-b - 1.0)) ** g * G(t) ** g
    # the elementary integration is checked against the closed-form V-moment
    direct = np.array([power_moment(w, -b - 2.0, x).value for x in t])
    closed = (Vt ** (-b - 1.0) - Vi ** (-b - 1.0)) / (b + 1.0)
    return _finish("PS4", inp, [("lower-bound-iv", small, Cf ** g),
                                ("integration", direct, closed, "eq")], "quadrature", tol)


def sample_ps5(rng):
    return _iv_inputs(rng, extra_windows=False)


def check_ps5(inp, tol=None):
    h, w, P, t = inp["h"], inp["v"], inp["params"], inp["t"]
    p, r, b = P["p"], P["r"], P["beta"]
    _need(b > -1, "PS5 needs beta > -1")
    f, G = _f_iv(h, w, b)
    g = r / p
    D = d_gamma(g)
    Vt, Vi = _V(w, t), w.V_inf
    x = Vt ** (-b - 1.0) - Vi ** (-b - 1.0)
    EC_small = Vt ** ((-b - 1.0) * g)
    EC_big = D * x ** g + D * Vi ** ((-b - 1.0) * g)
    Gt = G(t) ** g
    ED_small = EC_small * Gt
    ED_mid = D * x ** g * Gt + D * Vi ** ((-b - 1.0) * g) * Gt
    ED_big = (b + 1.0) ** g * D * copson(f, w)(t) ** g + D * Vi ** ((-b - 1.0) * g) * Gt
    return _finish("PS5", inp, [("C", EC_small, EC_big), ("D", ED_small, ED_mid),
                                ("D", ED_mid, ED_big)], "quadrature", tol)


def sample_ps6(rng):
    d = _iv_inputs(rng)
    w = d["v"]
    # half the points inside the first weight segment, where V is a pure power
    b1 = float(w.edges[0]) if len(w.edges) else np.inf
    if rng.random() < 0.5 and np.isfinite(b1):
        d["t"] = np.sort(b1 * 10.0 ** rng.uniform(-2, -0.01, size=3))
    return d


def check_ps6(inp, tol=None):
    h, w, P, t = inp["h"], inp["v"], inp["params"], inp["t"]
    p, r, a, b = P["p"], P["r"], P["alpha"], P["beta"]
    _need(r >= 1 and a * p - b * r < r - 1, "PS6 needs r >= 1 and alpha p - beta r < r - 1")
    G = running_integral(h, w)(t)
    e = -b * r + a * p
    mom = [weighted_moment(h, w, r, e, x) for x in t]
    M = np.array([m[0] for m in mom])
    exact = all(m[1] for m in mom)
    Vt = _V(w, t)
    parts = []
    if r > 1:
        rc = conjugate(r)
        k = (b - a * p / r) * rc
        # int_0^t V^k v = V(t)^(k+1)/(k+1); kept in logs since r' can be huge
        log_second = (k + 1.0) * np.log(Vt) - np.log(k + 1.0)
        with np.errstate(divide="ignore"):
            big = np.exp(np.log(M) / r + log_second / rc)
        parts.append(("E", G, big))
        second = np.array([power_moment(w, k, 0.0, x).value for x in t])
        ok = (second > 0) & np.isfinite(second)
        if ok.any():
            parts.append(("E integration", np.log(second[ok]), log_second[ok], "eq"))
    else:
        parts.append(("monotone r=1", G, Vt ** (b - a * p) * M))
    g = r / p
    parts.append(("G", G ** g, kappa(r, p, a, b) * Vt ** (b * g - a + (r - 1.0) / p) * M ** (1.0 / p)))
    return _finish("PS6", inp, parts, "closed-form" if exact else "quadrature", tol)


def sample_ps7(rng):
    return _iv_inputs(rng)


def check_ps7(inp, tol=None):
    h, w, P, t = inp["h"], inp["v"], inp["params"], inp["t"]
    p, r, a, b = P["p"], P["r"], P["alpha"], P["beta"]
    _need(r >= 1 and b > -1 and a * p - b * r < r - 1, "PS7 needs condition-iv")
    f, G = _f_iv(h, w, b)
    g = r / p
    D = d_gamma(g)
    Vt, Vi = _V(w, t), w.V_inf
    M = weighted_moment(h, w, r, -b * r + a * p)[0]
    small = Vt ** (a - b * g) * (G(t) / Vt) ** g
    big = (b + 1.0) ** g * D * Vt ** a * copson(f, w)(t) ** g \
        + kappa(r, p, a, b) * D * cv.power(Vi, -1.0 / p) * M ** (1.0 / p)
    return _finish("PS7", inp, [("J", small, big)], "quadrature", tol)


def sample_ps8(rng):
    q = float(rng.choice([0.5, 1.0, 2.0, 3.0, np.inf]))
    T = 10.0 ** rng.uniform(-0.5, 1.0)
    go = float(rng.uniform(-0.5, 1.0))
    outer = PiecewisePower([T], [float(np.exp(rng.uniform(-1, 1))), 0.0], [go, 0.0])
    head = 0.0 if np.isinf(q) else -(go + 1.0) / q + 0.1
    f = random_testfn(GeneratorProfile(0, (1, 3), (max(-1.5, head), 1.5), (0.2, 5.0), head,
                                       np.inf, 0.0), rng)
    return {"q": q, "outer": outer, "f": f,
            "c": float(10.0 ** rng.uniform(-2, 2)), "lam": float(10.0 ** rng.uniform(-2, 2))}


def check_ps8(inp, tol=None):
    q, outer, f, c, lam = inp["q"], inp["outer"], inp["f"], inp["c"], inp["lam"]
    _need(c > 0 and lam > 0, "PS8 needs c, lambda > 0")
    rho = Lq(q, outer)
    K = rho.K
    bps = f.breakpoints
    e0 = rho.apply(Fn(lambda t: c * f(t) + lam, bps))
    e1 = K * lam * rho.apply(Fn(lambda t: c / lam * f(t) + 1.0, bps))
    one = rho.apply(ONE)
    e2 = K ** 2 * lam * rho.apply(f.scale(c / lam)) + K ** 2 * lam * one
    e3 = K ** 3 * c * rho.apply(f) + K ** 2 * lam * one
    return _finish("PS8", inp, [("general-lambda 1", e0, e1), ("general-lambda 2", e1, e2),
                                ("general-lambda 3", e2, e3)], "quadrature", tol)


def sample_ps9(rng):
    w = _weight(rng)
    P = _params_iv(rng)
    h = _h(rng, w)
    return {"h": h, "v": w, "params": P, "t": _ts(rng, _support_end(h) * 3.0)}


def check_ps9(inp, tol=None):
    h, w, P, t = inp["h"], inp["v"], inp["params"], inp["t"]
    p, r, b = P["p"], P["r"], P["beta"]
    _need(b > -1, "PS9 needs beta > -1")
    C = copson(h, w)
    f = Fn(lambda s: cv.mul(cv.power(w.V(s), b), C(s)), merge_breakpoints(h.breakpoints, w.breakpoints))
    g = r / p
    Vt = _V(w, t)
    Hf = hardy_avg(f, w)(t) ** g
    mid = Vt ** (-g) * C(t) ** g * np.array([power_moment(w, b, 0.0, x).value for x in t]) ** g
    low = (b + 1.0) ** (-g) * Vt ** (b * g) * C(t) ** g
    return _finish("PS9", inp, [("v-iii-2", mid, Hf), ("v-iii-2 integration", low, mid, "eq")],
                   "quadrature", tol)


def sample_ps10(rng):
    w = _weight(rng)
    # both f and 1/f locally integrable at 0
    f = _positive(rng, w, exponents=(-0.3, 0.3))
    return {"f": f, "v": w, "r": float(10.0 ** rng.uniform(-1, 0.6)), "t": _ts(rng)}


def check_ps10(inp, tol=None):
    f, w, r, t = inp["f"], inp["v"], inp["r"], inp["t"]
    _need(r > 0 and bool(np.all(f.coef > 0)), "PS10 needs r > 0 and f > 0")
    g = f.reciprocal()
    # first inequality written for g, then the second for f = 1/g
    one_small = cv.power(cv.div(_V(w, t), running_integral(g, w)(t)), r)
    one_big = 1.0 / geo_mean(g.pow(r), w)(t)
    two_small = harm_mean(f, w, r)(t)
    two_big = geo_mean(f.pow(r), w)(t)
    return _finish("PS10", inp, [("vi-vii-1", one_small, one_big), ("vi-vii-2", two_small, two_big)],
                   "closed-form", tol)


def sample_ps11(rng):
    w = _weight(rng)
    p = float(rng.uniform(1.2, 4.0))
    h = _h(rng, w)
    return {"h": h, "v": w, "p": p, "r": float(10.0 ** rng.uniform(-1, 0.6)),
            "t": _ts(rng, _support_end(h))}


def check_ps11(inp, tol=None):
    h, w, p, r, t = inp["h"], inp["v"], inp["p"], inp["r"], inp["t"]
    _need(bool(np.all(t < _support_end(h))), "PS11 needs copson h > 0 on (0, t)")
    C = copson(h, w)
    # Only f on (0, max t] enters the checked values; freezing f beyond keeps the
    # reciprocal integrals away from the zero set of C.
    f = _capped(lambda s: cv.power(C(s), 1.0 / (p * r)), float(np.max(t)),
                merge_breakpoints(h.breakpoints, w.breakpoints))
    Vt = _V(w, t)
    big = harm_mean(f, w, r)(t)
    small = C(t) ** (1.0 / p)
    mid = f(t) ** r * Vt ** (-r)
    inv = running_integral(f.__rtruediv__(1.0), w)(t) ** (-r)
    return _finish("PS11", inp, [("nonincreasing", mid, inv), ("nonincreasing", small, big)],
                   "quadrature", tol)


def _nonincreasing(rng, w: Weight) -> TestFunction:
    k = int(rng.integers(1, 5))
    edges = np.unique(np.sort(10.0 ** rng.uniform(-2, 2, size=k - 1)))
    k = len(edges) + 1
    lo = _head_min(w, ((1.0, 0.0),))
    gam = -rng.uniform(0.0, 1.5, size=k)
    gam[0] = -rng.uniform(0.0, min(1.5, max(-lo, 0.0) * 0.99)) if lo < 0 else 0.0
    coef = np.empty(k)
    coef[0] = np.exp(rng.uniform(-1.5, 1.5))
    for i, e in enumerate(edges):
        left = coef[i] * e ** gam[i]
        right = left * rng.uniform(0.05, 1.0)
        coef[i + 1] = right / e ** gam[i + 1]
    return TestFunction(edges, coef, gam)


def _phi(rng):
    u = rng.random()
    if u < 1 / 3:
        return "log"
    if u < 2 / 3:
        return "reciprocal"
    return f"power:{float(rng.uniform(0.05, 0.95)):.6f}"


def sample_ps12(rng):
    w = _weight(rng)
    return {"f": _nonincreasing(rng, w), "v": w, "phi": _phi(rng), "t": _ts(rng)}


def check_ps12(inp, tol=None):
    f, w, phi, t = inp["f"], inp["v"], inp["phi"], inp["t"]
    _need(bool(np.all(f.gamma <= 0)) and bool(np.all(f.coef > 0)), "PS12 needs a positive nonincreasing f")
    ts = np.asarray(t, dtype=float)
    for e in f.edges:
        _need(f(np.array([e * (1 - 1e-9)]))[0] >= f(np.array([e * (1 + 1e-9)]))[0], "PS12 needs f nonincreasing")
    return _finish("PS12", inp, [("phi-mean>=f", f(ts), phi_mean(f, w, phi)(ts))], "closed-form", tol)


def sample_ps13(rng):
    w = _weight(rng, finite=bool(rng.random() < 0.5))
    P = _params_iv(rng)
    h = _h(rng, w, ((1.0, 0.0), (P["p"], 0.0)))
    return {"h": h, "v": w, "params": P, "t": _ts(rng, _support_end(h) * 3.0)}


def check_ps13(inp, tol=None):
    h, w, P, t = inp["h"], inp["v"], inp["params"], inp["t"]
    p, r, a = P["p"], P["r"], P["alpha"]
    _need(r >= 1 and a > max(-1.0 / p, -1.0 + 1.0 / p), "PS13 needs r >= 1 and alpha > max(-1/p, -1/p')")
    g = r / p
    D = d_gamma(g)
    c = (a + 1.0) * p / r
    Vt, Vi = _V(w, t), w.V_inf
    x = Vt ** (-c) - cv.power(Vi, -c)
    fv_small = 1.0 / Vt
    fv_big = D * Vt ** a * (x ** g + cv.power(Vi, -a - 1.0))
    G = running_integral(h, w)
    f = Fn(lambda s: cv.mul(cv.power(w.V(s), -c), cv.power(G(s), 1.0 / g)),
           merge_breakpoints(h.breakpoints, w.breakpoints))
    norm = weighted_moment(h, w, p, 0.0)[0] ** (1.0 / p)
    small = G(t) / Vt
    # c^(r/p): the power produced by integrating V^(-c-1) v and raising to r/p
    big = c ** g * D * Vt ** a * copson(f, w)(t) ** g + D * cv.power(Vi, -1.0 / p) * norm
    return _finish("PS13", inp, [("formula-for-V", fv_small, fv_big), ("estimate-I+II", small, big)],
                   "quadrature", tol)


def sample_ps14(rng):
    w = _weight(rng)
    return {"f": _positive(rng, w, exponents=(-0.3, 1.0)), "v": w, "phi": _phi(rng), "t": _ts(rng)}


def check_ps14(inp, tol=None):
    f, w, phi, t = inp["f"], inp["v"], inp["phi"], inp["t"]
    _need(bool(np.all(f.coef > 0)), "PS14 needs f > 0")
    return _finish("PS14", inp, [("phi-mean<=hardy", phi_mean(f, w, phi)(t), hardy_avg(f, w)(t))],
                   "closed-form", tol)


def gate_case(k: int) -> tuple[float, float, str]:
    """Trial index -> (p, alpha, side), cycling over the full grid."""
    grid = [(p, a, side) for p in GATE_P for a in gate_alphas(p) for side in ("hardy", "copson")]
    return grid[k % len(grid)]


def sample_ps15(rng, case: tuple | None = None):
    p, a, side = case if case is not None else gate_case(int(rng.integers(0, 24)))
    w = _weight(rng)
    h = _h(rng, w, ((p, a), (1.0, 0.0)), zero_tail=bool(rng.random() < 0.8))
    return {"h": h, "v": w, "p": p, "alpha": a, "side": side}


def check_ps15(inp, tol=None):
    h, w, p, a, side = inp["h"], inp["v"], inp["p"], inp["alpha"], inp["side"]
    if side == "hardy":
        _need(p >= 1 and a < p - 1, "Hardy side needs alpha < p - 1")
        T = hardy_avg(h, w)
        const = hardy_const(p, a)
    else:
        _need(p >= 1 and a > -1, "Copson side needs alpha > -1")
        T = copson(h, w)
        const = copson_const(p, a)
    right = weighted_moment(h, w, p, a)[0] ** (1.0 / p)
    g = Fn(lambda t: cv.mul(cv.mul(cv.power(T(t), p), cv.power(w.V(t), a)), w(t)),
           merge_breakpoints(h.breakpoints, w.breakpoints))
    left = _outer(g, h, w) ** (1.0 / p)
    return _finish("PS15", inp, [(f"{side}-weighted", left, const * right)], "quadrature", tol)


def _outer(g, h, w) -> float:
    return integrate_log(g, 0.0, np.inf, tol=1e-9).value


def sample_ps16(rng):
    w = _weight(rng, finite=True)
    return {"h": _h(rng, w, zero_tail=bool(rng.random() < 0.7)), "v": w}


def check_ps16(inp, tol=None):
    h, w = inp["h"], inp["v"]
    right = float(h.times(w).total())
    _need(np.isfinite(right), "PS16 needs int h v < inf")
    C = copson(h, w)
    g = Fn(lambda t: cv.mul(w(t), C(t)), merge_breakpoints(h.breakpoints, w.breakpoints))
    left = integrate_log(g, 0.0, np.inf, tol=1e-12).value
    return _finish("PS16", inp, [("Fubini", left, right)], "quadrature", tol, equality=True)


STEPS = {
    "PS1": (sample_ps1, check_ps1), "PS2": (sample_ps2, check_ps2), "PS3": (sample_ps3, check_ps3),
    "PS4": (sample_ps4, check_ps4), "PS5": (sample_ps5, check_ps5), "PS6": (sample_ps6, check_ps6),
    "PS7": (sample_ps7, check_ps7), "PS8": (sample_ps8, check_ps8), "PS9": (sample_ps9, check_ps9),
    "PS10": (sample_ps10, check_ps10), "PS11": (sample_ps11, check_ps11), "PS12": (sample_ps12, check_ps12),
    "PS13": (sample_ps13, check_ps13), "PS14": (sample_ps14, check_ps14), "PS15": (sample_ps15, check_ps15),
    "PS16": (sample_ps16, check_ps16),
}


def proof_step_check(step: str, inputs: dict, tol: float | None = None) -> StepCheckRecord:
    if step not in STEPS:
        raise KeyError(f"unknown proof step {step!r}")
    return STEPS[step][1](inputs, tol)


def step_rng(seed: int, step: str) -> np.random.Generator:
    return np.random.default_rng([int(seed), STEP_IDS.index(step)])


def run_step(step: str, trials: int, seed: int = 0, tol: float | None = None) -> dict:
    """Summary of ``trials`` seeded checks: counts, worst record, violations."""
    rng = step_rng(seed, step)
    sampler, checker = STEPS[step]
    worst, bad, paths = None, [], {"closed-form": 0, "quadrature": 0}
    for k in range(trials):
        inp = sampler(rng, gate_case(k)) if step == "PS15" else sampler(rng)
        rec = checker(inp, tol)
        paths[rec.path] += 1
        if not rec.passed:
            bad.append(rec)
        if worst is None or rec.rel_margin < worst.rel_margin:
            worst = rec
    return {"step": step, "trials": trials, "violations": len(bad), "paths": paths,
            "min_rel_margin": worst.rel_margin, "worst": worst.to_dict(),
            "violating": [r.to_dict() for r in bad[:20]]}


def run_suite(trials: int = 1000, seed: int = 0, steps=STEP_IDS, tol: float | None = None) -> list[dict]:
    return [run_step(s, trials, seed, tol) for s in steps]


def power_weight_gate(trials_per_case: int = 1000, seed: int = 0) -> list[dict]:
    """PS15 over every (p, alpha, side) of the grid, ``trials_per_case`` each."""
    out = []
    for j in range(24):
        case = gate_case(j)
        rng = np.random.default_rng([int(seed), 15, j])
        bad, worst = 0, np.inf
        for _ in range(trials_per_case):
            rec = check_ps15(sample_ps15(rng, case))
            bad += not rec.passed
            worst = min(worst, rec.rel_margin)
        out.append({"p": case[0], "alpha": case[1], "side": case[2], "trials": trials_per_case,
                    "violations": bad, "min_rel_margin": worst})
    return out
