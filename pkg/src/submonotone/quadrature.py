"""Quadrature on (0, inf) in the logarithmic variable x = ln t.

Power-law behaviour at 0 and infinity turns into exponential behaviour in x,
so integrands are smooth on each panel between breakpoints.  The x-axis is
truncated to [-LOG_WINDOW, LOG_WINDOW]; what lies beyond is added analytically
from the local exponent (log-slope) of the integrand at the cut, which is exact
for pure powers.  A non-decaying integrand at an infinite end means divergence.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonConvergence

LOG_WINDOW = 60.0
MIN_DECAY = 1e-4  # log-slope below which a tail is declared divergent

# Gauss-Kronrod 7-15 (QUADPACK qk15)
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327])

_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])           # 15 nodes, ascending
_WK = np.concatenate([_WGK[:-1], _WGK[::-1]])
_WG15 = np.zeros(15)
_WG15[[1, 3, 5]] = _WG[:3]
_WG15[[13, 11, 9]] = _WG[:3]
_WG15[7] = _WG[3]

_GL_N = 10
_GL_X, _GL_W = np.polynomial.legendre.leggauss(_GL_N)


@dataclass(frozen=True)
class IntegralResult:
    value: float
    method: str = "quadrature"
    error: float = 0.0

    def __float__(self):
        return float(self.value)


def _xfun(g):
    """Integrand in the log variable: G(x) = g(e^x) e^x."""
    def G(x):
        t = np.exp(x)
        with np.errstate(invalid="ignore", over="ignore"):
            v = np.asarray(g(t), dtype=float)
            out = v * t
        out = np.where((v == 0) | (t == 0), 0.0, out)
        if np.isnan(out).any():
            raise NonConvergence("integrand evaluated to NaN")
        return out
    return G


def _log_breaks(breakpoints, lo, hi):
    xs = [np.log(b) for b in breakpoints if b > 0 and np.isfinite(b)]
    return sorted(x for x in xs if lo < x < hi)


def tail_estimate(G, x0: float, direction: int) -> tuple[float, float]:
    """Integral of G beyond x0 (direction -1: to -inf, +1: to +inf) assuming a
    local exponential profile.  Returns (value, error estimate)."""
    pts = x0 - direction * np.array([0.0, 0.5, 1.0])
    vals = G(pts)
    g0 = vals[0]
    if g0 == 0.0:
        return 0.0, 0.0
    if np.isinf(g0):
        return np.inf, 0.0
    if vals[1] <= 0 or vals[2] <= 0:
        return 0.0, g0
    # decay rate toward the end: G ~ g0 exp(-k |x - x0|)
    k1 = 2.0 * np.log(vals[1] / g0)
    k2 = np.log(vals[2] / vals[1]) * 2.0
    if k1 < MIN_DECAY:
        return np.inf, 0.0
    val = g0 / k1
    err = abs(val - g0 / k2) if k2 > MIN_DECAY else val
    return val, err


def gk_adaptive(G, edges, tol: float = 1e-10, abs_tol: float = 1e-300,
                max_panels: int = 20000):
    """Adaptive GK15 of G over the union of [edges[i], edges[i+1]].

    All active panels are evaluated in one vectorized call per sweep.
    Returns (value, error estimate).
    """
    edges = np.asarray(edges, dtype=float)
    a = edges[:-1].copy()
    b = edges[1:].copy()
    keep = b > a
    a, b = a[keep], b[keep]
    if a.size == 0:
        return 0.0, 0.0
    # cap initial panel width so the first sweep resolves exponential profiles
    pieces_a, pieces_b = [], []
    for lo, hi in zip(a, b):
        k = max(1, int(np.ceil((hi - lo) / 4.0)))
        cuts = np.linspace(lo, hi, k + 1)
        pieces_a.append(cuts[:-1])
        pieces_b.append(cuts[1:])
    a = np.concatenate(pieces_a)
    b = np.concatenate(pieces_b)
    done_val = 0.0
    done_err = 0.0
    span = float(np.sum(b - a))
    while True:
        c = 0.5 * (a + b)
        h = 0.5 * (b - a)
        x = c[:, None] + h[:, None] * _NODES[None, :]
        fx = G(x.ravel()).reshape(x.shape)
        if np.isinf(fx).any():
            return np.inf, 0.0
        kron = h * (fx @ _WK)
        gauss = h * (fx @ _WG15)
        err = np.abs(kron - gauss)
        total = done_val + kron.sum()
        total_err = done_err + err.sum()
        target = max(tol * abs(total), abs_tol)
        if total_err <= target:
            return float(total), float(total_err)
        # panels already within their share of the budget are frozen
        share = target * (b - a) / span
        fine = err <= 0.5 * share
        done_val += kron[fine].sum()
        done_err += err[fine].sum()
        a, b = a[~fine], b[~fine]
        if a.size == 0:
            return float(done_val), float(done_err)
        if 2 * a.size > max_panels or np.min(b - a) < 1e-13 * max(1.0, np.max(np.abs(b))):
            raise NonConvergence(
                f"quadrature stalled: error {total_err:.3e} > target {target:.3e}")
        mid = 0.5 * (a + b)
        a, b = np.concatenate([a, mid]), np.concatenate([mid, b])


MAX_LOG = 700.0  # e^700 is near the top of the double range


def _open_end(G, x0: float, direction: int, inner: float, tol: float):
    """Tail beyond x0 as (tail, tail error, extra, extra error).

    When the local-exponent tail is infinite or not accurate to ``tol``, the window is pushed
    out (doubling, up to MAX_LOG) and the extension integrated directly; slowly
    varying profiles (e.g. a power of a + b t^c) settle into a pure power further out.
    """
    extra, extra_err = 0.0, 0.0
    tv, te = tail_estimate(G, x0, direction)
    # a profile that still grows at x0 may turn over further out, so an infinite
    # local estimate is only final at MAX_LOG
    while abs(x0) < MAX_LOG and (not np.isfinite(tv) or te > tol * abs(inner + extra + tv)):
        x1 = direction * min(2.0 * abs(x0), MAX_LOG)
        try:
            v, e = gk_adaptive(G, sorted([x0, x1]), tol=tol)
        except NonConvergence:
            # overflow far out on a profile that was not yet decaying
            if np.isfinite(tv):
                raise
            return 0.0, 0.0, np.inf, 0.0
        extra, extra_err = extra + v, extra_err + e
        if np.isinf(extra):
            return 0.0, 0.0, np.inf, 0.0
        x0 = x1
        tv, te = tail_estimate(G, x0, direction)
    return tv, te, extra, extra_err


def integrate_log(g, a: float = 0.0, b: float = np.inf, tol: float = 1e-10,
                  breakpoints=None, window: float = LOG_WINDOW) -> IntegralResult:
    """Integral of g over (a, b) with 0 <= a < b <= inf."""
    if not b > a:
        return IntegralResult(0.0)
    if breakpoints is None:
        breakpoints = getattr(g, "breakpoints", ())
    G = _xfun(g)
    xa = np.log(a) if a > 0 else -np.inf
    xb = np.log(b) if np.isfinite(b) else np.inf
    if np.isfinite(xa):
        lo = xa
    else:
        lo = -window if not np.isfinite(xb) else min(-window, xb - 1.0)
    if np.isfinite(xb):
        hi = xb
    else:
        hi = max(window, lo + 1.0)
    value, err = 0.0, 0.0
    if hi > lo:
        edges = [lo] + _log_breaks(breakpoints, lo, hi) + [hi]
        value, err = gk_adaptive(G, edges, tol=tol)
    if np.isinf(value):
        return IntegralResult(np.inf, "quadrature", 0.0)
    if not np.isfinite(xa):
        tv, te, v2, e2 = _open_end(G, lo, -1, value, tol)
        value, err = value + v2 + tv, err + e2 + te
    if not np.isfinite(xb) and np.isfinite(value):
        tv, te, v2, e2 = _open_end(G, hi, +1, value, tol)
        value, err = value + v2 + tv, err + e2 + te
    if np.isinf(value):
        return IntegralResult(np.inf, "quadrature", 0.0)
    return IntegralResult(float(value), "quadrature", float(err))


def panel_integrals(G, lo, hi, atol=0.0, rtol: float = 1e-12, max_depth: int = 40,
                    max_active: int = 4096, pieces: bool = False):
    """Integral of G over each [lo_i, hi_i], bisected until the GK15 error is
    below rtol*|panel| + atol_i.  Vectorized over panels.

    With ``pieces=True`` also returns the accepted sub-panels (left, right, value).
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    out = np.zeros(lo.shape)
    atol = np.broadcast_to(np.asarray(atol, dtype=float), lo.shape)
    a, b, owner = lo.copy(), hi.copy(), np.arange(lo.size)
    max_active = max(max_active, 8 * lo.size)
    acc = []
    for depth in range(max_depth + 1):
        if a.size == 0:
            break
        c, h = 0.5 * (a + b), 0.5 * (b - a)
        x = c[:, None] + h[:, None] * _NODES[None, :]
        fx = G(x.ravel()).reshape(x.shape)
        with np.errstate(invalid="ignore"):
            kron = h * (fx @ _WK)
            err = np.abs(kron - h * (fx @ _WG15))
            noise = 50.0 * np.finfo(float).eps * h * (np.abs(fx) @ _WK)
        # each half of a split panel gets half of the absolute budget
        budget = atol[owner] * (b - a) / np.maximum(hi[owner] - lo[owner], 1e-300)
        ok = (err <= rtol * np.abs(kron) + budget + noise) | ~np.isfinite(kron)
        if depth == max_depth or 2 * np.count_nonzero(~ok) > max_active:
            ok[:] = True
        np.add.at(out, owner[ok], kron[ok])
        if pieces:
            acc.append((a[ok], b[ok], kron[ok]))
        a, b, owner = a[~ok], b[~ok], owner[~ok]
        mid = 0.5 * (a + b)
        a, b, owner = np.concatenate([a, mid]), np.concatenate([mid, b]), np.concatenate([owner, owner])
    if pieces:
        left, right, val = (np.concatenate(z) for z in zip(*acc)) if acc else (np.zeros(0),) * 3
        order = np.argsort(left, kind="stable")
        return out, (left[order], right[order], val[order])
    return out


class Cumulative:
    """Running integral of a fixed integrand, evaluated at arbitrary times.

    ``direction='head'`` gives t -> int_0^t g, ``'tail'`` gives t -> int_t^inf g.
    A table over a uniform log grid (plus breakpoints) is built once on first
    use; each query then costs one short Gauss-Legendre panel.
    """

    def __init__(self, g, direction: str = "head", step: float = 1.0,
                 window: float = LOG_WINDOW, breakpoints=None):
        if direction not in ("head", "tail"):
            raise ValueError(direction)
        self.g = g
        self.direction = direction
        self.step = step
        self.window = window
        bps = getattr(g, "breakpoints", ()) if breakpoints is None else breakpoints
        self.breakpoints = tuple(bps)
        self._table = None

    def _build(self):
        G = _xfun(self.g)
        W = self.window
        grid = np.union1d(np.arange(-W, W + 0.5 * self.step, self.step),
                          _log_breaks(self.breakpoints, -W, W))
        grid = grid[(grid >= -W) & (grid <= W)]
        lo, hi = grid[:-1], grid[1:]
        # first pass on a fixed rule sets the scale of the running integral,
        # the second resolves every panel relative to that scale
        c, h = 0.5 * (lo + hi), 0.5 * (hi - lo)
        x = c[:, None] + h[:, None] * _GL_X[None, :]
        rough = np.abs(h * (G(x.ravel()).reshape(x.shape) @ _GL_W))
        run = np.cumsum(rough) if self.direction == "head" else np.cumsum(rough[::-1])[::-1]
        # the accepted sub-panels become table nodes, so a query never has to
        # re-resolve structure the build already bisected
        _, (left, right, panels) = panel_integrals(G, lo, hi, atol=1e-13 * run, pieces=True)
        grid = np.concatenate([left, right[-1:]])
        if self.direction == "head":
            tv, _, extra, _ = _open_end(G, grid[0], -1, float(run.max(initial=0.0)), 1e-12)
            start = tv + extra
            cum = np.concatenate([[start], start + np.cumsum(panels)])
        else:
            tv, _, extra, _ = _open_end(G, grid[-1], +1, float(run.max(initial=0.0)), 1e-12)
            start = tv + extra
            cum = np.concatenate([start + np.cumsum(panels[::-1])[::-1], [start]])
        self._table = (G, grid, cum)

    def __call__(self, t) -> np.ndarray:
        if self._table is None:
            self._build()
        G, grid, cum = self._table
        t = np.asarray(t, dtype=float)
        flat = t.ravel()
        out = np.empty(flat.shape, dtype=float)
        with np.errstate(divide="ignore"):
            x = np.log(flat)
        head = self.direction == "head"
        inside = (x >= grid[0]) & (x <= grid[-1])
        if inside.any():
            xi = x[inside]
            j = np.clip(np.searchsorted(grid, xi, side="right") - 1, 0, len(grid) - 2)
            # add the partial panel between the query and the table node behind it
            left = grid[j] if head else xi
            right = xi if head else grid[j + 1]
            base = cum[j] if head else cum[j + 1]
            part = panel_integrals(G, left, right, atol=1e-13 * np.abs(base))
            out[inside] = base + part
        outside = ~inside
        if outside.any():
            for k in np.flatnonzero(outside):
                xk = x[k]
                if head:
                    if xk == -np.inf:
                        out[k] = 0.0
                    elif xk < grid[0]:
                        out[k] = tail_estimate(G, xk, -1)[0]
                    else:
                        out[k] = cum[-1] + (np.inf if xk == np.inf else
                                            gk_adaptive(G, [grid[-1], xk])[0])
                else:
                    if xk == np.inf:
                        out[k] = 0.0
                    elif xk > grid[-1]:
                        out[k] = tail_estimate(G, xk, +1)[0]
                    else:
                        out[k] = cum[0] + (np.inf if xk == -np.inf else
                                           gk_adaptive(G, [xk, grid[0]])[0])
        # cancellation guard: running integrals are nonnegative
        out = np.maximum(out, 0.0)
        return out.reshape(t.shape)
