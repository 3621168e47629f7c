"""Test functions in M_+(0, inf): piecewise powers with zero segments allowed."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import conventions as cv
from .errors import NotPositiveOnPrefix, UnsupportedStatement
from .measure import PiecewisePower, Weight
from .pointwise import Fn, Pointwise

_LOG_BREAK_RANGE = (-2.0, 2.0)   # breakpoints drawn log10-uniform in [1e-2, 1e2]


class TestFunction(PiecewisePower):
    """Nonnegative piecewise power function; coefficients may be 0 or inf."""

    __test__ = False   # not a pytest class

    def __init__(self, edges, coef, gamma):
        super().__init__(edges, coef, gamma)
        self.label = "f"

    def _new(self, edges, coef, gamma):
        return TestFunction(edges, coef, gamma)

    @classmethod
    def of(cls, f: PiecewisePower) -> "TestFunction":
        return cls(f.edges, f.coef, f.gamma)

    @property
    def strictly_positive(self) -> bool:
        return bool(np.all(self.coef > 0))

    def to_dict(self) -> dict:
        d = super().to_dict()
        d["strictly_positive"] = self.strictly_positive
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TestFunction":
        return cls.of(PiecewisePower.from_dict(d))

    @classmethod
    def from_json(cls, s: str) -> "TestFunction":
        return cls.from_dict(json.loads(s))


def eval_fn(f: Pointwise, t):
    out = f(np.asarray(t, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def power_fn(c: float, gamma: float) -> TestFunction:
    return TestFunction([], [c], [gamma])


def const_fn(c: float) -> TestFunction:
    return TestFunction([], [c], [0.0])


def indicator_fn(a: float, b: float = np.inf) -> TestFunction:
    """chi_(a, b) with 0 <= a < b <= inf."""
    edges = [x for x in (a, b) if 0 < x < np.inf]
    f = TestFunction(edges, [0.0] * (len(edges) + 1), [0.0] * (len(edges) + 1))
    mids = _segment_midpoints(f)
    inside = (mids > a) & (mids < b)
    return TestFunction(f.edges, inside.astype(float), f.gamma)


def _segment_midpoints(f: PiecewisePower) -> np.ndarray:
    lows, highs = f.lows, f.highs
    out = np.empty(len(lows))
    for i, (lo, hi) in enumerate(zip(lows, highs)):
        if lo == 0 and np.isinf(hi):
            out[i] = 1.0
        elif lo == 0:
            out[i] = hi / 2.0
        elif np.isinf(hi):
            out[i] = lo * 2.0
        else:
            out[i] = np.sqrt(lo * hi)
    return out


# -- algebra -----------------------------------------------------------------

def pow_fn(f: TestFunction, theta: float) -> TestFunction:
    return TestFunction.of(f).pow(theta)


def scale(f: TestFunction, lam: float) -> TestFunction:
    return TestFunction.of(f).scale(lam)


def reciprocal(f: TestFunction) -> TestFunction:
    """1/f; zero segments become inf-valued."""
    return TestFunction.of(f).reciprocal()


def truncate(f: TestFunction, A: float) -> TestFunction:
    return TestFunction.of(f).truncate(A)


def add_const(f: Pointwise, lam: float) -> Pointwise:
    """f + lam.  A sum of powers is not a piecewise power, so the result is a
    generic pointwise function."""
    if lam < 0:
        raise ValueError("add_const needs lam >= 0")
    if lam == 0:
        return f
    return Fn(lambda t, f=f, lam=lam: f(t) + lam, f.breakpoints, f"{f.label}+{lam:g}")


# -- random generation -------------------------------------------------------

@dataclass(frozen=True)
class GeneratorProfile:
    seed: int = 0
    segments: tuple[int, int] = (1, 4)
    exponents: tuple[float, float] = (-1.5, 1.5)
    coefs: tuple[float, float] = (0.2, 5.0)
    # exponent window the first / last segment must respect so that the
    # target integral converges at 0 / at infinity
    head_min: float = -np.inf
    tail_max: float = np.inf
    zero_tail_prob: float = 0.0

    def __post_init__(self):
        if not (1 <= self.segments[0] <= self.segments[1]):
            raise ValueError("segment range must be nonempty and >= 1")
        if not self.exponents[0] < self.exponents[1]:
            raise ValueError("exponent range must be nonempty")
        if not (0 < self.coefs[0] <= self.coefs[1]):
            raise ValueError("coefficient range must be nonempty and positive")
        if not self.head_min < self.tail_max or not self.head_min < self.exponents[1] \
                or not self.tail_max > self.exponents[0]:
            raise ValueError("decay guard leaves no admissible exponent")

    def with_seed(self, seed: int) -> "GeneratorProfile":
        return GeneratorProfile(seed, self.segments, self.exponents, self.coefs,
                                self.head_min, self.tail_max, self.zero_tail_prob)


def integrability_window(w: Weight, s: float, a: float = 0.0) -> tuple[float, float]:
    """Open interval (lo, hi) such that f ~ t^g near 0 with g > lo and near
    infinity with g < hi makes int f^s V^a w finite."""
    g0, gk = w.gamma[0], w.gamma[-1]
    lo = -(1.0 + a) * (g0 + 1.0) / s
    if len(w.gamma) == 1:
        # pure power weight: V ~ t^{g0+1} everywhere
        hi = lo
    elif gk > -1:
        hi = -(1.0 + a) * (gk + 1.0) / s
    elif gk < -1:
        hi = -(1.0 + gk) / s
    else:
        hi = 0.0   # V ~ ln t
    return lo, hi


def profile_for(w: Weight, s: float, a: float = 0.0, seed: int = 0,
                segments=(1, 4), exponents=(-1.5, 1.5), coefs=(0.2, 5.0),
                zero_tail_prob: float = 0.0, margin: float | None = None) -> GeneratorProfile:
    """Profile whose draws have int f^s V^a w < inf (tails forced to decay
    when the window at 0 and infinity coincide)."""
    lo, hi = integrability_window(w, s, a)
    m = 0.1 / s if margin is None else margin
    head_min, tail_max = lo + m, hi - m
    if tail_max <= head_min:
        # a single power window: finite only with a zero tail
        zero_tail_prob = 1.0
        tail_max = np.inf
    return GeneratorProfile(seed, tuple(segments), tuple(exponents), tuple(coefs),
                            head_min, tail_max, zero_tail_prob)


def random_testfn(profile: GeneratorProfile, rng: np.random.Generator | None = None) -> TestFunction:
    """Seeded random piecewise power; deterministic in the profile seed."""
    rng = np.random.default_rng(profile.seed) if rng is None else rng
    k = int(rng.integers(profile.segments[0], profile.segments[1] + 1))
    edges = np.sort(10.0 ** rng.uniform(*_LOG_BREAK_RANGE, size=k - 1))
    edges = np.unique(edges)
    k = len(edges) + 1
    gam = rng.uniform(*profile.exponents, size=k)
    elo = max(profile.exponents[0], profile.head_min)
    ehi = min(profile.exponents[1], profile.tail_max)
    gam[0] = rng.uniform(elo, profile.exponents[1]) if elo < profile.exponents[1] else elo
    coef = np.exp(rng.uniform(np.log(profile.coefs[0]), np.log(profile.coefs[1]), size=k))
    zero_tail = rng.random() < profile.zero_tail_prob
    if zero_tail:
        if k == 1:
            A = 10.0 ** rng.uniform(*_LOG_BREAK_RANGE)
            edges = np.array([A])
            gam = np.array([gam[0], 0.0])
            coef = np.array([coef[0], 0.0])
        else:
            coef[-1] = 0.0
            gam[-1] = 0.0
    elif k == 1:
        lo_, hi_ = elo, ehi
        if lo_ >= hi_:
            raise ValueError("profile admits no single-segment function")
        gam[0] = rng.uniform(lo_, hi_)
    elif ehi < gam[-1]:
        gam[-1] = rng.uniform(min(profile.exponents[0], ehi - 0.5), ehi)
    return TestFunction(edges, coef, gam)


def random_weight(rng: np.random.Generator, segments=(1, 3), head=(-0.7, 1.5),
                  exponents=(-2.5, 1.5), coefs=(0.2, 5.0)) -> Weight:
    k = int(rng.integers(segments[0], segments[1] + 1))
    edges = np.unique(np.sort(10.0 ** rng.uniform(-1.5, 1.5, size=k - 1)))
    k = len(edges) + 1
    gam = rng.uniform(*exponents, size=k)
    gam[0] = rng.uniform(*head)
    coef = np.exp(rng.uniform(np.log(coefs[0]), np.log(coefs[1]), size=k))
    return Weight(edges, coef, gam)


# -- near-extremal family ----------------------------------------------------

def critical_exponent(s: float, a: float = 0.0) -> float:
    """sigma with int_0 (V^sigma)^s V^a dV marginally divergent."""
    return -(1.0 + a) / s


def extremal_family(sigma: float, eps: float, w: Weight, level: float = 1.0) -> TestFunction:
    """f_eps = V^{sigma + eps} chi_{V <= L}, L = min(level, V(b_1)).

    The support lies inside the first segment of w, where V is a pure power,
    so f_eps is again a piecewise power.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    c0, g0 = w.coef[0], w.gamma[0]
    L = level if len(w.edges) == 0 else min(level, float(w.V(w.edges[0])))
    e = g0 + 1.0
    tL = (L * e / c0) ** (1.0 / e)
    k = sigma + eps
    if len(w.edges) and np.isclose(tL, w.edges[0], rtol=1e-14):
        tL = float(w.edges[0])
    return TestFunction([tL], [(c0 / e) ** k, 0.0], [e * k, 0.0])


def extremal_for(statement_id: str, params: dict, eps: float, w: Weight) -> TestFunction:
    """Near-extremizer for a T1 statement, from its right-hand side form."""
    from .statements import rhs_form  # local import: statements depends on funcspace
    s, a = rhs_form(statement_id, params)
    if statement_id.endswith(".ix") and params.get("phi", "log") not in ("log", "reciprocal") \
            and not str(params.get("phi", "")).startswith("power"):
        raise UnsupportedStatement(f"no near-extremal family for phi={params.get('phi')}")
    return extremal_family(critical_exponent(s, a), eps, w)


# -- strict positivization ----------------------------------------------------

def positivize(f: TestFunction, A: float, eps: float, w: Weight, p: float,
               slack: float = 0.5) -> TestFunction:
    """Strictly positive f_{A,eps} >= f with ||f_{A,eps}||_{p,w} <= (1+eps)||f||_{p,w}.

    Zero segments (which must lie in [A, inf)) are filled with delta*min(1, t^-d),
    d large enough for the filler to be p-integrable against w.  Supports are
    disjoint, so delta solves ||f||^p + delta^p J = ((1 + slack*eps)||f||)^p
    in closed form.
    """
    f = TestFunction.of(f)
    if f.strictly_positive:
        return f
    zero = f.coef == 0
    if np.any(zero & (f.lows < A)):
        raise NotPositiveOnPrefix(f"f vanishes on a subset of (0, {A:g})")
    base = float((f.pow(p) * w).total()) ** (1.0 / p)
    if not np.isfinite(base) or base == 0:
        raise ValueError("positivize needs 0 < int f^p w < inf")
    d = max(0.0, (w.gamma[-1] + 1.0) / p) + 1.0
    r = f.refine([1.0])
    filler_g = np.where(r.lows >= 1.0, -d, 0.0)
    zr = r.coef == 0
    filler = PiecewisePower(r.edges, zr.astype(float), filler_g)
    J = float((filler.pow(p) * w).total())
    target = (1.0 + slack * eps) ** p - 1.0
    delta = (target * base ** p / J) ** (1.0 / p)
    coef = np.where(zr, delta, r.coef)
    gam = np.where(zr, filler_g, r.gamma)
    return TestFunction(r.edges, coef, gam)


def lp_norm(f: PiecewisePower, w: Weight, p: float) -> float:
    return float(cv.power(np.array((f.pow(p) * w).total()), 1.0 / p))
