"""Sub-monotone functionals: concrete families, axiom checks, derived transforms."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import conventions as cv
from .constants import d_gamma
from .errors import UnsupportedFunctional
from .funcspace import GeneratorProfile, random_testfn
from .measure import PiecewisePower
from .pointwise import ONE, Const, Fn, Pointwise, merge_breakpoints
from .quadrature import Cumulative, integrate_log

DEFAULT_TOL = 1e-10
SUP_GRID = 4001          # log-grid points for generic suprema
SUP_WINDOW = (-30.0, 30.0)


def lq_constant(q: float) -> float:
    return 1.0 if q >= 1 else 2.0 ** (1.0 / q - 1.0)


def _support_hull(w) -> tuple[float, float]:
    if not isinstance(w, PiecewisePower):
        return 0.0, np.inf
    pos = w.coef > 0
    if not pos.any():
        return 0.0, 0.0
    return float(w.lows[pos].min()), float(w.highs[pos].max())


def _pp_sup(f: PiecewisePower, mask=None) -> float:
    """Exact sup of a piecewise power over the segments selected by mask."""
    best = 0.0
    for i, (lo, hi, c, g) in enumerate(zip(f.lows, f.highs, f.coef, f.gamma)):
        if mask is not None and not mask[i]:
            continue
        if c == 0:
            continue
        if np.isinf(c):
            return np.inf
        if g > 0:
            val = np.inf if np.isinf(hi) else c * hi ** g
        elif g < 0:
            val = np.inf if lo == 0 else c * lo ** g
        else:
            val = c
        best = max(best, val)
    return float(best)


def _grid_for(*bps, window=SUP_WINDOW, n=SUP_GRID) -> np.ndarray:
    x = np.linspace(window[0], window[1], n)
    pts = [np.exp(x)]
    b = np.array(merge_breakpoints(*bps))
    if b.size:
        pts += [b * (1 - 1e-12), b * (1 + 1e-12)]
    return np.unique(np.concatenate(pts))


class Functional:
    """Base class; ``K`` is the declared sub-monotonicity constant."""

    kind = "abstract"
    K: float = 1.0

    def __call__(self, g) -> float:
        return self.apply(g)

    def apply(self, g) -> float:
        raise NotImplementedError

    def rho_one(self) -> float:
        return self.apply(ONE)

    def to_dict(self) -> dict:
        raise NotImplementedError


class Lq(Functional):
    """rho(g) = (int g^q w)^(1/q), or ess sup over {w > 0} for q = inf."""

    kind = "weighted-Lq"

    def __init__(self, q: float, outer: Pointwise, tol: float = DEFAULT_TOL):
        if not q > 0:
            raise ValueError("q must be positive")
        self.q = float(q)
        self.outer = outer
        self.tol = tol
        self.K = lq_constant(self.q)
        self._hull = _support_hull(outer)

    def apply(self, g) -> float:
        if not isinstance(g, Pointwise):
            g = Fn(g)
        lo, hi = self._hull
        if not hi > lo:
            return 0.0
        if np.isinf(self.q):
            return self._sup(g)
        exact = isinstance(self.outer, PiecewisePower)
        if isinstance(g, Const) and exact:
            m = float(self.outer.total())
            return float(cv.mul(g.value ** self.q, m) ** (1.0 / self.q))
        if isinstance(g, PiecewisePower) and exact:
            val = float((g.pow(self.q) * self.outer).total())
        else:
            q, w = self.q, self.outer
            integrand = Fn(lambda t: cv.mul(cv.power(g(t), q), w(t)),
                           merge_breakpoints(g.breakpoints, w.breakpoints))
            val = integrate_log(integrand, lo, hi, tol=self.tol).value
        return float(cv.power(val, 1.0 / self.q))

    def _sup(self, g) -> float:
        w = self.outer
        if isinstance(g, PiecewisePower) and isinstance(w, PiecewisePower):
            edges = merge_breakpoints(g.edges, w.edges)
            gr, wr = g.refine(edges), w.refine(edges)
            return _pp_sup(gr, wr.coef > 0)
        if isinstance(g, Const):
            return g.value
        t = _grid_for(g.breakpoints, w.breakpoints)
        vals = np.where(w(t) > 0, g(t), 0.0)
        return float(np.max(vals))

    def to_dict(self) -> dict:
        if not hasattr(self.outer, "to_dict"):
            raise UnsupportedFunctional("Lq with a generic outer weight is not serializable")
        return {"kind": "Lq", "q": "inf" if np.isinf(self.q) else self.q,
                "outer_weight": self.outer.to_dict()}

    def __repr__(self):
        return f"Lq(q={self.q:g})"


class SupForm(Functional):
    """rho(f) = || t -> sup_{s > t} f(s) m(s) || for an outer functional."""

    kind = "sup-form"

    def __init__(self, outer: Functional, multiplier: PiecewisePower):
        self.outer = outer
        self.multiplier = multiplier
        self.K = outer.K

    def inner(self, f) -> Pointwise:
        m = self.multiplier
        if isinstance(f, PiecewisePower):
            fm = f.times(m)
            segsup = np.array([_pp_sup(fm, np.arange(fm.n_segments) == i)
                               for i in range(fm.n_segments)])
            after = np.concatenate([np.maximum.accumulate(segsup[::-1])[::-1][1:], [0.0]])

            def S(t):
                t = np.asarray(t, dtype=float)
                i = fm.segment_index(t)
                c, g, hi = fm.coef[i], fm.gamma[i], fm.highs[i]
                with np.errstate(all="ignore"):
                    here = np.where(g > 0, np.where(np.isinf(hi), np.inf, c * hi ** g),
                                    np.where(g < 0, c * t ** g, c))
                here = np.where(c == 0, 0.0, here)
                return np.maximum(here, after[i])
            return Fn(S, fm.breakpoints, "sup")
        g = f if isinstance(f, Pointwise) else Fn(f)
        fm = g * m
        grid = _grid_for(fm.breakpoints)
        vals = fm(grid)
        suffix = np.maximum.accumulate(vals[::-1])[::-1]

        def S(t):
            t = np.asarray(t, dtype=float)
            return _take(suffix, np.searchsorted(grid, t, side="right"))
        return Fn(S, fm.breakpoints, "sup")

    def apply(self, f) -> float:
        return self.outer.apply(self.inner(f))

    def to_dict(self) -> dict:
        return {"kind": "sup-form", "outer": self.outer.to_dict(),
                "multiplier": self.multiplier.to_dict()}


def _take(arr, j):
    j = np.asarray(j)
    safe = np.minimum(j, len(arr) - 1)
    return np.where(j < len(arr), arr[safe], 0.0)


class Iterated(Functional):
    """rho(f) = || t -> (int_0^t f^r w)^(1/r) ||_{L^q(outer)}."""

    kind = "iterated"

    def __init__(self, r: float, inner_weight: PiecewisePower, q: float, outer: PiecewisePower):
        if not r > 0:
            raise ValueError("r must be positive")
        self.r = float(r)
        self.inner_weight = inner_weight
        self.outer_norm = Lq(q, outer)
        self.K = max(1.0, 2.0 ** (1.0 / self.r - 1.0)) * self.outer_norm.K

    def inner(self, f) -> Pointwise:
        r, w = self.r, self.inner_weight
        if isinstance(f, PiecewisePower):
            run = f.pow(r).times(w).cumulative
        elif isinstance(f, Const):
            run = (PiecewisePower.constant(f.value ** r) * w).cumulative
        else:
            g = f if isinstance(f, Pointwise) else Fn(f)
            run = Cumulative(Fn(lambda t: cv.mul(cv.power(g(t), r), w(t)),
                                merge_breakpoints(g.breakpoints, w.breakpoints)), "head")
        return Fn(lambda t: cv.power(run(t), 1.0 / r),
                  merge_breakpoints(getattr(f, "breakpoints", ()), w.breakpoints), "iter")

    def apply(self, f) -> float:
        return self.outer_norm.apply(self.inner(f))

    def to_dict(self) -> dict:
        d = self.outer_norm.to_dict()
        return {"kind": "iterated", "r": self.r, "inner_weight": self.inner_weight.to_dict(),
                "q": d["q"], "outer_weight": d["outer_weight"]}


class Derived(Functional):
    """rho_m(f) = rho(f^m * w)^(1/m) for a base functional rho and multiplier w."""

    kind = "derived"

    def __init__(self, base: Functional, m: float, w: Pointwise, tag: str = "derived-T3"):
        if not m > 0:
            raise ValueError("m must be positive")
        self.base = base
        self.m = float(m)
        self.w = w
        self.kind = tag
        K = base.K
        self.K = max(1.0, (d_gamma(self.m) * K) ** (1.0 / self.m) * d_gamma(1.0 / self.m),
                     K ** (1.0 / self.m))

    def transform(self, f) -> Pointwise:
        m, w = self.m, self.w
        if isinstance(f, Const):
            f = PiecewisePower.constant(f.value)
        if isinstance(f, PiecewisePower) and isinstance(w, PiecewisePower):
            return f.pow(m).times(w)
        g = f if isinstance(f, Pointwise) else Fn(f)
        if m == 1:
            return g * w
        return Fn(lambda t: cv.mul(cv.power(g(t), m), w(t)),
                  merge_breakpoints(g.breakpoints, w.breakpoints), f"{g.label}^{m:g}*w")

    def apply(self, f) -> float:
        return float(cv.power(self.base.apply(self.transform(f)), 1.0 / self.m))

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "m": self.m, "base": self.base.to_dict()}
        if isinstance(self.w, PiecewisePower):
            d["weight"] = self.w.to_dict()
        else:
            d["weight"] = self.w.label
        return d


def derived_t3(rho: Functional, m: float, w: Pointwise) -> Derived:
    """rho_{m,w}(f) = rho(f^m w)^(1/m)."""
    return Derived(rho, m, w, "derived-T3")


def derived_t4(rho: Functional, m: float, U: Pointwise, Ut: Pointwise) -> Derived:
    """rho_m(g) = rho(g^m U / Ut)^(1/m)."""
    if U is Ut:
        w = ONE
    else:
        w = Fn(lambda t: cv.div(U(t), Ut(t)),
               merge_breakpoints(U.breakpoints, Ut.breakpoints), "U/Ut")
    return Derived(rho, m, w, "derived-T4")


# -- axiom checking -----------------------------------------------------------

@dataclass
class AxiomReport:
    lattice_violations: int
    K_quasitriangle: float
    K_weak_lattice: float
    samples: int
    seed: int
    skipped: int = 0
    quasitriangle_checked: bool = True
    worst: dict = field(default_factory=dict)

    @property
    def K(self) -> float:
        return max(self.K_quasitriangle, self.K_weak_lattice)

    def to_dict(self) -> dict:
        return {"lattice_violations": self.lattice_violations,
                "K_quasitriangle": self.K_quasitriangle, "K_weak_lattice": self.K_weak_lattice,
                "samples": self.samples, "seed": self.seed, "skipped": self.skipped,
                "quasitriangle_checked": self.quasitriangle_checked}


def _sum(f, h) -> Pointwise:
    return Fn(lambda t: f(t) + h(t), merge_breakpoints(f.breakpoints, h.breakpoints), "f+h")


def check_axioms(rho: Functional, profile: GeneratorProfile, n: int,
                 rel_tol: float = 1e-9) -> AxiomReport:
    """Seeded sampling of the three sub-monotonicity axioms.

    Per trial: f, h random, lambda log-uniform.  Lattice is tested on the
    dominated pair (f, f + h); the quasitriangle ratio rho(f+1)/(rho(f)+rho(1))
    only when rho(1) < inf; the weak-lattice ratio rho(lambda f)/(lambda rho(f))
    only when 0 < rho(f) < inf.  Reported K values are max(1, worst ratio).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(profile.seed)
    rho1 = rho.apply(ONE)
    kq = kw = 1.0
    violations = skipped = 0
    for _ in range(n):
        f = random_testfn(profile, rng)
        h = random_testfn(profile, rng)
        lam = float(10.0 ** rng.uniform(-2, 2))
        rf = rho.apply(f)
        rg = rho.apply(_sum(f, h))
        if rf > rg * (1.0 + rel_tol) + 1e-300:
            violations += 1
        if not np.isfinite(rf):
            skipped += 1
            continue
        if np.isfinite(rho1):
            num = rho.apply(_sum(f, ONE))
            den = rf + rho1
            if den > 0:
                kq = max(kq, num / den)
        if rf > 0:
            kw = max(kw, rho.apply(f.scale(lam)) / (lam * rf))
    return AxiomReport(violations, kq, kw, n, profile.seed, skipped, bool(np.isfinite(rho1)))


def general_lambda_check(rho: Functional, K: float, f, c: float, lam: float) -> float:
    """K^3 c rho(f) + K^2 lam rho(1) - rho(c f + lam); nonnegative for sub-monotone rho."""
    if not (c > 0 and lam > 0):
        raise ValueError("c and lambda must be positive")
    g = f if isinstance(f, Pointwise) else Fn(f)
    cf = g.scale(c) if isinstance(g, PiecewisePower) else Fn(lambda t: c * g(t), g.breakpoints)
    lhs = rho.apply(Fn(lambda t: cf(t) + lam, cf.breakpoints, "cf+lam"))
    return K ** 3 * c * rho.apply(g) + K ** 2 * lam * rho.apply(ONE) - lhs


# -- descriptors --------------------------------------------------------------

def functional_from_dict(d: dict) -> Functional:
    kind = d.get("kind")
    if kind in ("Lq", "weighted-Lq"):
        q = d["q"]
        q = np.inf if q in ("inf", float("inf")) else float(q)
        return Lq(q, PiecewisePower.from_dict(d["outer_weight"]))
    if kind == "sup-form":
        return SupForm(functional_from_dict(d["outer"]), PiecewisePower.from_dict(d["multiplier"]))
    if kind == "iterated":
        q = d["q"]
        q = np.inf if q in ("inf", float("inf")) else float(q)
        return Iterated(float(d["r"]), PiecewisePower.from_dict(d["inner_weight"]), q,
                        PiecewisePower.from_dict(d["outer_weight"]))
    if kind in ("derived-T3", "derived-T4") and isinstance(d.get("weight"), dict):
        return Derived(functional_from_dict(d["base"]), float(d["m"]),
                       PiecewisePower.from_dict(d["weight"]), kind)
    raise UnsupportedFunctional(f"unknown functional kind {kind!r}")

