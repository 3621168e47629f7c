"""Hardy average, Copson, geometric, harmonic and phi-mean operators.

Each operator returns a lazy ``Fn`` on (0, inf).  Piecewise power inputs use
exact running integrals; anything else goes through ``Cumulative`` tables.
"""

from __future__ import annotations

from typing import Union

import numpy as np

from . import conventions as cv
from .errors import NotStrictlyPositive, UnsupportedPhi
from .measure import PiecewisePower, Weight
from .pointwise import Fn, Pointwise, merge_breakpoints
from .quadrature import Cumulative

Phi = Union[str, tuple]

PHI_CATALOGUE = ("log", "reciprocal", "power")


def _bps(f, w):
    return merge_breakpoints(getattr(f, "breakpoints", ()), w.breakpoints)


def _check_positive(f, allow_zero: bool, name: str):
    if allow_zero or not isinstance(f, PiecewisePower):
        return
    if np.any(f.coef == 0):
        raise NotStrictlyPositive(f"{name} needs a strictly positive f (zero segment found)")


def _head_integral(g: Pointwise):
    """t -> int_0^t g for a generic nonnegative g."""
    return Cumulative(g, "head")


def hardy_avg(f, w: Weight) -> Fn:
    """t -> (1/V(t)) int_0^t f v."""
    if isinstance(f, PiecewisePower):
        fv = f.times(w)
        num = fv.cumulative
    else:
        num = _head_integral(f * w)
    return Fn(lambda t: cv.div(num(t), w.V(t)), _bps(f, w), f"H[{getattr(f, 'label', 'f')}]")


def running_integral(f, w: Weight):
    """t -> int_0^t f v (exact for piecewise powers)."""
    if isinstance(f, PiecewisePower):
        return f.times(w).cumulative
    return _head_integral(f * w)


def copson(f, w: Weight) -> Fn:
    """t -> int_t^inf f v / V."""
    g = as_fn(f) * w / w.primitive_fn
    tail = Cumulative(g, "tail")
    return Fn(lambda t: tail(t), _bps(f, w), f"C[{getattr(f, 'label', 'f')}]")


def as_fn(f) -> Pointwise:
    return f if isinstance(f, Pointwise) else Fn(f)


def _log_integral(f, w: Weight):
    """t -> int_0^t ln(f) v, signed; -inf if f vanishes on a set of positive
    v-measure in (0, t)."""
    if isinstance(f, PiecewisePower):
        fw = f.refine(w.edges)
        ww = w.refine(fw.edges)
        zero = fw.coef == 0
        inf = np.isinf(fw.coef)
        with np.errstate(divide="ignore"):
            a = np.where(zero | inf, 0.0, np.log(np.where(zero | inf, 1.0, fw.coef)))
        b = np.where(zero | inf, 0.0, fw.gamma)
        first_zero = fw.lows[zero].min() if zero.any() else np.inf
        first_inf = fw.lows[inf].min() if inf.any() else np.inf

        def L(t):
            t = np.asarray(t, dtype=float)
            out = ww.log_cumulative(t, a, b)
            out = np.where(t > first_inf, np.inf, out)
            # exp(log 0) is 0, also against an infinite part
            return np.where(t > first_zero, -np.inf, out)
        return L
    lf = as_fn(f).log()
    pos = Cumulative(Fn(lambda t: np.maximum(lf(t), 0.0), lf.breakpoints) * w, "head")
    neg = Cumulative(Fn(lambda t: np.maximum(-lf(t), 0.0), lf.breakpoints) * w, "head")

    def L(t):
        P, N = pos(t), neg(t)
        with np.errstate(invalid="ignore"):
            out = P - N
        return np.where(np.isinf(N), -np.inf, out)
    return L


def geo_mean(f, w: Weight, allow_zero: bool = False) -> Fn:
    """t -> exp((1/V(t)) int_0^t ln(f) v)."""
    _check_positive(f, allow_zero, "geo_mean")
    L = _log_integral(f, w)

    def G(t):
        t = np.asarray(t, dtype=float)
        with np.errstate(invalid="ignore", divide="ignore"):
            x = L(t) / w.V(t)
        return cv.exp(x)
    return Fn(G, _bps(f, w), f"G[{getattr(f, 'label', 'f')}]")


def _reciprocal_integral(f, w: Weight):
    """t -> int_0^t f^-1 v."""
    if isinstance(f, PiecewisePower):
        return f.reciprocal().times(w).cumulative
    return _head_integral(as_fn(f).__rtruediv__(1.0) * w)


def harm_mean(f, w: Weight, r: float = 1.0, allow_zero: bool = False) -> Fn:
    """t -> (V(t) / int_0^t f^-1 v)^r; V/inf is 0."""
    if not r > 0:
        raise ValueError("harm_mean needs r > 0")
    _check_positive(f, allow_zero, "harm_mean")
    I = _reciprocal_integral(f, w)

    def Hm(t):
        return cv.power(cv.div(w.V(t), I(t)), r)
    return Fn(Hm, _bps(f, w), f"Hm{r:g}[{getattr(f, 'label', 'f')}]")


def parse_phi(phi: Phi) -> tuple[str, float]:
    """Normalize a catalogue entry: 'log', 'reciprocal', ('power', theta) or 'power:theta'."""
    if isinstance(phi, str):
        if phi in ("log", "ln"):
            return "log", 0.0
        if phi in ("reciprocal", "inv"):
            return "reciprocal", -1.0
        if phi.startswith("power"):
            try:
                theta = float(phi.split(":", 1)[1])
            except (IndexError, ValueError):
                raise UnsupportedPhi(f"malformed power phi {phi!r}; use 'power:<theta>'")
            return _check_theta(theta)
        raise UnsupportedPhi(f"phi {phi!r} is not in the catalogue {PHI_CATALOGUE}")
    if isinstance(phi, (tuple, list)) and len(phi) == 2 and phi[0] == "power":
        return _check_theta(float(phi[1]))
    raise UnsupportedPhi(f"phi {phi!r} is not in the catalogue {PHI_CATALOGUE}")


def _check_theta(theta: float):
    if not 0 < theta < 1:
        raise UnsupportedPhi(f"power phi needs theta in (0, 1), got {theta}")
    return "power", theta


def phi_name(phi: Phi) -> str:
    kind, theta = parse_phi(phi)
    return f"power:{theta:g}" if kind == "power" else kind


def phi_mean(f, w: Weight, phi: Phi, allow_zero: bool = False) -> Fn:
    """t -> phi^{-1}((1/V(t)) int_0^t phi(f) v) for catalogue phi."""
    kind, theta = parse_phi(phi)
    if kind == "log":
        return geo_mean(f, w, allow_zero)
    if kind == "reciprocal":
        return harm_mean(f, w, 1.0, allow_zero)
    _check_positive(f, allow_zero, "phi_mean")
    if isinstance(f, PiecewisePower):
        num = f.pow(theta).times(w).cumulative
    else:
        num = _head_integral(as_fn(f) ** theta * w)

    def P(t):
        return cv.power(cv.div(num(t), w.V(t)), 1.0 / theta)
    return Fn(P, _bps(f, w), f"A{phi_name(phi)}[{getattr(f, 'label', 'f')}]")
