"""Piecewise power-law weights with exact primitives, and the integration backends."""

from __future__ import annotations

import json
from typing import Sequence

import numpy as np

from . import conventions as cv
from .pointwise import Fn, Pointwise, merge_breakpoints
from .quadrature import IntegralResult, integrate_log

DEFAULT_TOL = 1e-10


def _seg_integral(c, g, lo, hi):
    """int_lo^hi c s^g ds, elementwise, for 0 <= lo <= hi <= inf."""
    c, g, lo, hi = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (c, g, lo, hi)))
    out = np.zeros(c.shape)
    active = (hi > lo) & (c > 0)
    if not active.any():
        return out
    with np.errstate(all="ignore"):
        e = g + 1.0
        # lo > 0, both ends finite: b^e * expm1(e ln(hi/lo)) / e is stable as e -> 0
        r = np.log(hi / lo)
        stable = np.where(np.abs(e) > 0, np.expm1(e * r) / np.where(e == 0, 1.0, e), r)
        stable = np.where(e == 0, r, stable)
        val = c * np.power(lo, e) * stable
        # lo == 0
        from_zero = np.where(e > 0, c * np.power(hi, e) / np.where(e > 0, e, 1.0), np.inf)
        val = np.where(lo == 0, from_zero, val)
        # hi == inf
        to_inf = np.where(e < 0, -c * np.power(lo, e) / np.where(e < 0, e, -1.0), np.inf)
        val = np.where(np.isinf(hi) & (lo > 0), to_inf, val)
        val = np.where(np.isinf(hi) & (lo == 0), np.inf, val)
    val = np.where(np.isinf(c), np.inf, val)
    return np.where(active, val, 0.0)


def _seg_log_integral(c, g, lo, hi):
    """int_lo^hi ln(s) c s^g ds, elementwise (finite cases only; may be +-inf)."""
    c, g, lo, hi = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (c, g, lo, hi)))

    def anti(s):
        with np.errstate(all="ignore"):
            e = g + 1.0
            ls = np.log(s)
            gen = np.power(s, e) * (ls / np.where(e == 0, 1.0, e) - 1.0 / np.where(e == 0, 1.0, e) ** 2)
            out = np.where(e == 0, 0.5 * ls ** 2, gen)
            # limits at 0 for e > 0 vanish
            out = np.where((s == 0) & (e > 0), 0.0, out)
        return out

    with np.errstate(all="ignore"):
        val = c * (anti(hi) - anti(lo))
    return np.where((hi > lo) & (c > 0), val, 0.0)


class PiecewisePower(Pointwise):
    """f(t) = c_i t^{gamma_i} on (b_i, b_{i+1}), b_0 = 0, b_k = inf, c_i in [0, inf]."""

    def __init__(self, edges: Sequence[float], coef: Sequence[float], gamma: Sequence[float]):
        edges = np.asarray(edges, dtype=float).reshape(-1)
        coef = np.asarray(coef, dtype=float).reshape(-1)
        gamma = np.asarray(gamma, dtype=float).reshape(-1)
        if coef.shape != gamma.shape or len(coef) != len(edges) + 1:
            raise ValueError("need len(coef) == len(gamma) == len(edges) + 1")
        if len(edges) and (np.any(edges <= 0) or np.any(~np.isfinite(edges))
                           or np.any(np.diff(edges) <= 0)):
            raise ValueError("interior breakpoints must be finite, positive, increasing")
        if np.any(coef < 0) or np.any(np.isnan(coef)):
            raise ValueError("coefficients must lie in [0, inf]")
        if np.any(~np.isfinite(gamma)):
            raise ValueError("exponents must be finite")
        self.edges = edges
        self.coef = coef
        self.gamma = gamma
        self.edges.setflags(write=False)
        self.coef.setflags(write=False)
        self.gamma.setflags(write=False)
        self.breakpoints = tuple(float(b) for b in edges)
        self.label = "pp"

    # -- structure -------------------------------------------------------
    @property
    def lows(self) -> np.ndarray:
        return np.concatenate([[0.0], self.edges])

    @property
    def highs(self) -> np.ndarray:
        return np.concatenate([self.edges, [np.inf]])

    @property
    def n_segments(self) -> int:
        return len(self.coef)

    @classmethod
    def constant(cls, c: float):
        return cls([], [c], [0.0])

    @classmethod
    def power(cls, c: float, gamma: float):
        return cls([], [c], [gamma])

    def segment_index(self, t) -> np.ndarray:
        return np.searchsorted(self.edges, np.asarray(t, dtype=float), side="left")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        i = self.segment_index(t)
        c = self.coef[i]
        with np.errstate(all="ignore"):
            tg = np.power(t, self.gamma[i])
        return cv.mul(c, tg)

    def refine(self, edges: Sequence[float]) -> "PiecewisePower":
        """Same function on a finer partition."""
        new = np.asarray(merge_breakpoints(self.edges, edges), dtype=float)
        mids = _midpoints(new)
        i = self.segment_index(mids)
        return self._new(new, self.coef[i], self.gamma[i])

    # -- closed algebra --------------------------------------------------
    def _new(self, edges, coef, gamma) -> "PiecewisePower":
        return PiecewisePower(edges, coef, gamma)

    def pow(self, theta: float) -> "PiecewisePower":
        with np.errstate(divide="ignore"):
            c = cv.power(self.coef, theta)
        return self._new(self.edges, c, self.gamma * theta)

    def scale(self, lam: float) -> "PiecewisePower":
        return self._new(self.edges, cv.mul(lam, self.coef), self.gamma)

    def reciprocal(self) -> "PiecewisePower":
        return self.pow(-1.0)

    def truncate(self, A: float) -> "PiecewisePower":
        """f * chi_(0, A)."""
        if not np.isfinite(A):
            return self
        r = self.refine([A])
        c = np.where(r.lows >= A, 0.0, r.coef)
        return self._new(r.edges, c, r.gamma)

    def times(self, other: "PiecewisePower") -> "PiecewisePower":
        edges = merge_breakpoints(self.edges, other.edges)
        a, b = self.refine(edges), other.refine(edges)
        return self._new(a.edges, cv.mul(a.coef, b.coef), a.gamma + b.gamma)

    def __mul__(self, other):
        if isinstance(other, PiecewisePower):
            return self.times(other)
        if np.isscalar(other):
            return self.scale(float(other))
        return Pointwise.__mul__(self, other)

    __rmul__ = __mul__

    def __pow__(self, e):
        return self.pow(float(e))

    def same_as(self, other: "PiecewisePower") -> bool:
        return (np.array_equal(self.edges, other.edges) and np.array_equal(self.coef, other.coef)
                and np.array_equal(self.gamma, other.gamma))

    # -- exact integrals -------------------------------------------------
    def cumulative(self, t) -> np.ndarray:
        """int_0^t f(s) ds, elementwise in t."""
        t = np.asarray(t, dtype=float)
        lows, highs = self.lows, self.highs
        full = _seg_integral(self.coef, self.gamma, lows, highs)
        before = np.concatenate([[0.0], np.cumsum(full[:-1])])
        i = self.segment_index(t)
        part = _seg_integral(self.coef[i], self.gamma[i], lows[i], np.maximum(t, lows[i]))
        with np.errstate(invalid="ignore"):
            out = before[i] + part
        return np.where(t <= 0, 0.0, out)

    def integral(self, a: float = 0.0, b: float = np.inf) -> float:
        """int_a^b f exactly (may be inf)."""
        if not b > a:
            return 0.0
        lows = np.maximum(self.lows, a)
        highs = np.minimum(self.highs, b)
        return float(np.sum(_seg_integral(self.coef, self.gamma, lows, highs)))

    def total(self) -> float:
        return self.integral(0.0, np.inf)

    def log_cumulative(self, t, a, b) -> np.ndarray:
        """int_0^t (a_i + b_i ln s) f(s) ds with per-segment a, b (exact)."""
        t = np.asarray(t, dtype=float)
        a = np.broadcast_to(np.asarray(a, dtype=float), self.coef.shape)
        b = np.broadcast_to(np.asarray(b, dtype=float), self.coef.shape)
        lows, highs = self.lows, self.highs
        with np.errstate(invalid="ignore"):
            full = (_scaled(a, _seg_integral(self.coef, self.gamma, lows, highs))
                    + _scaled(b, _seg_log_integral(self.coef, self.gamma, lows, highs)))
            before = np.concatenate([[0.0], np.cumsum(full[:-1])])
            i = self.segment_index(t)
            hi = np.maximum(t, lows[i])
            part = (_scaled(a[i], _seg_integral(self.coef[i], self.gamma[i], lows[i], hi))
                    + _scaled(b[i], _seg_log_integral(self.coef[i], self.gamma[i], lows[i], hi)))
            out = before[i] + part
        return np.where(t <= 0, 0.0, out)

    def strictly_positive(self) -> bool:
        return bool(np.all(self.coef > 0))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.coef)))

    # -- serialization ---------------------------------------------------
    def to_dict(self) -> dict:
        segs = []
        for hi, c, g in zip(self.highs, self.coef, self.gamma):
            segs.append({"upto": "inf" if np.isinf(hi) else float(hi),
                         "c": "inf" if np.isinf(c) else float(c), "gamma": float(g)})
        return {"segments": segs}

    @classmethod
    def from_dict(cls, d: dict):
        segs = d["segments"]
        if not segs or segs[-1]["upto"] not in ("inf", float("inf")):
            raise ValueError("last segment must extend to 'inf'")
        edges = [float(s["upto"]) for s in segs[:-1]]
        coef = [float(s["c"]) for s in segs]
        gamma = [float(s["gamma"]) for s in segs]
        return cls(edges, coef, gamma)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def __repr__(self):
        parts = [f"{c:.4g}*t^{g:.4g} on ({lo:.4g},{hi:.4g})"
                 for lo, hi, c, g in zip(self.lows, self.highs, self.coef, self.gamma)]
        return f"{type(self).__name__}[{'; '.join(parts)}]"


def _scaled(k, x):
    """k * x with 0 * anything = 0."""
    with np.errstate(invalid="ignore"):
        return np.where(k == 0, 0.0, k * x)


def _midpoints(edges) -> np.ndarray:
    edges = np.asarray(edges, dtype=float)
    if len(edges) == 0:
        return np.array([1.0])
    lows = np.concatenate([[edges[0] / 2.0], edges])
    highs = np.concatenate([edges, [edges[-1] * 2.0]])
    return np.sqrt(lows * highs)


class Weight(PiecewisePower):
    """A strictly positive piecewise power weight v with primitive V(t) = int_0^t v."""

    def __init__(self, edges, coef, gamma):
        super().__init__(edges, coef, gamma)
        if np.any(self.coef <= 0) or np.any(~np.isfinite(self.coef)):
            raise ValueError("weight coefficients must be finite and > 0")
        if self.gamma[0] <= -1:
            raise ValueError("first exponent must exceed -1 so that V(t) < inf")
        full = _seg_integral(self.coef, self.gamma, self.lows, self.highs)
        self._V_edges = np.concatenate([[0.0], np.cumsum(full)])   # V(b_0..b_k)
        self._V_edges.setflags(write=False)
        self.label = "v"

    @classmethod
    def from_piecewise(cls, f: PiecewisePower) -> "Weight":
        return cls(f.edges, f.coef, f.gamma)

    @property
    def V_inf(self) -> float:
        return float(self._V_edges[-1])

    def V(self, t) -> np.ndarray:
        # same formulas as cumulative(), specialised to finite positive
        # coefficients and evaluating only the branch each point needs
        t = np.asarray(t, dtype=float)
        flat = t.ravel()
        out = np.zeros(flat.shape)
        i = np.searchsorted(self.edges, flat, side="left")
        c, e = self.coef[i], self.gamma[i] + 1.0
        first = (i == 0) & (flat > 0)
        out[first] = c[first] * np.power(flat[first], e[first]) / e[first]
        rest = (i > 0) & np.isfinite(flat)
        if rest.any():
            ir, er = i[rest], e[rest]
            lo = self.edges[ir - 1]
            r = np.log(flat[rest] / lo)
            with np.errstate(all="ignore"):
                gen = np.power(lo, er) * np.expm1(er * r) / np.where(er == 0, 1.0, er)
            out[rest] = self._V_edges[ir] + c[rest] * np.where(er == 0, r, gen)
        out[flat == np.inf] = self._V_edges[-1]
        return out.reshape(t.shape)

    @property
    def primitive_fn(self) -> Fn:
        return Fn(self.V, self.breakpoints, "V")

    def V_power(self, a: float) -> Pointwise:
        """t -> V(t)^a."""
        if a == 0:
            return Fn(lambda t: np.ones_like(np.asarray(t, dtype=float)), (), "1")
        return Fn(lambda t, a=a: cv.power(self.V(t), a), self.breakpoints, f"V^{a:g}")


def primitive(w: Weight, t) -> np.ndarray | float:
    """V(t) for t in [0, inf]."""
    out = w.V(t)
    return float(out) if np.ndim(out) == 0 else out


def power_moment(w: Weight, alpha: float, a: float = 0.0, b: float = np.inf) -> IntegralResult:
    """int_a^b V(s)^alpha v(s) ds in closed form via dV = v ds."""
    if not b > a:
        return IntegralResult(0.0, "closed-form", 0.0)
    Va, Vb = float(w.V(a)), float(w.V(b))
    return IntegralResult(_v_moment(alpha, Va, Vb), "closed-form", 0.0)


def _v_moment(alpha: float, Va: float, Vb: float) -> float:
    """int_{Va}^{Vb} u^alpha du."""
    if Vb <= Va:
        return 0.0
    if alpha == -1.0:
        if Va == 0 or np.isinf(Vb):
            return np.inf
        return float(np.log(Vb) - np.log(Va))
    e = alpha + 1.0
    if Va == 0 and e <= 0:
        return np.inf
    if np.isinf(Vb) and e >= 0:
        return np.inf
    Va, Vb = np.float64(Va), np.float64(Vb)
    with np.errstate(over="ignore"):
        if Va > 0 and np.isfinite(Vb):
            return float(np.power(Va, e) * np.expm1(e * np.log(Vb / Va)) / e)
        hi = 0.0 if np.isinf(Vb) else np.power(Vb, e)
        lo = 0.0 if Va == 0 else np.power(Va, e)
        return float((hi - lo) / e)


def v_moment(alpha: float, Va, Vb) -> np.ndarray:
    """Vectorized int_{Va}^{Vb} u^alpha du."""
    Va, Vb = np.broadcast_arrays(np.asarray(Va, float), np.asarray(Vb, float))
    return np.array([_v_moment(alpha, x, y) for x, y in zip(Va.ravel(), Vb.ravel())]).reshape(Va.shape)


def log_moment(w: Weight, t: float) -> float:
    """int_0^t ln(V(s)) v(s) ds = V(t)(ln V(t) - 1)."""
    Vt = float(w.V(t))
    if Vt == 0:
        return 0.0
    return Vt * (np.log(Vt) - 1.0)


def integrate(g, a: float = 0.0, b: float = np.inf, tol: float = DEFAULT_TOL,
              breakpoints=None) -> IntegralResult:
    """Numerical integral of a nonnegative pointwise function over (a, b).

    Raises NonConvergence when the error estimate cannot reach ``tol`` relative.
    """
    return integrate_log(g, a, b, tol=tol, breakpoints=breakpoints)


def integrate_dV(h, w: Weight, a: float = 0.0, b: float = np.inf,
                 tol: float = DEFAULT_TOL) -> IntegralResult:
    """int_a^b h(V(s)) v(s) ds computed as int_{V(a)}^{V(b)} h(u) du."""
    Va, Vb = float(w.V(a)), float(w.V(b))
    return integrate_log(h, Va, Vb, tol=tol, breakpoints=getattr(h, "breakpoints", ()))


def weight_from_json(s: str | dict) -> Weight:
    d = json.loads(s) if isinstance(s, str) else s
    return Weight.from_piecewise(PiecewisePower.from_dict(d))


# -- frequently used weights ------------------------------------------------

def lebesgue() -> Weight:
    """v = 1 on (0, inf)."""
    return Weight([], [1.0], [0.0])


def finite_mass_weight() -> Weight:
    """v = 1 on (0, 1], s^-2 on (1, inf); V(inf) = 2."""
    return Weight([1.0], [1.0, 1.0], [0.0, -2.0])
