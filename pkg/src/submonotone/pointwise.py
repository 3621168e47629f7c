"""Lazy pointwise-evaluable functions on (0, inf).

A ``Pointwise`` maps an array of times to an array of values in [0, inf] and
carries the locations where it may fail to be smooth (``breakpoints``).
Quadrature routines split their panels there, so every composite built from
``Pointwise`` pieces propagates the union of its parts' breakpoints.
"""

from __future__ import annotations

from typing import Callable, Iterable

import numpy as np

from . import conventions as cv


def merge_breakpoints(*groups: Iterable[float]) -> tuple[float, ...]:
    pts = set()
    for g in groups:
        for b in g:
            b = float(b)
            if 0.0 < b < np.inf:
                pts.add(b)
    return tuple(sorted(pts))


class Pointwise:
    breakpoints: tuple[float, ...] = ()
    label: str = ""

    def __call__(self, t) -> np.ndarray:
        raise NotImplementedError

    def scalar(self, t: float) -> float:
        return float(self(np.array([t], dtype=float))[0])

    # algebra with the zero conventions; subclasses override for closed forms
    def __mul__(self, other):
        other = as_pointwise(other)
        return Fn(lambda t, a=self, b=other: cv.mul(a(t), b(t)),
                  merge_breakpoints(self.breakpoints, other.breakpoints),
                  f"({self.label})*({other.label})")

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = as_pointwise(other)
        return Fn(lambda t, a=self, b=other: cv.div(a(t), b(t)),
                  merge_breakpoints(self.breakpoints, other.breakpoints),
                  f"({self.label})/({other.label})")

    def __rtruediv__(self, other):
        return as_pointwise(other) / self

    def __add__(self, other):
        other = as_pointwise(other)
        return Fn(lambda t, a=self, b=other: a(t) + b(t),
                  merge_breakpoints(self.breakpoints, other.breakpoints),
                  f"({self.label})+({other.label})")

    __radd__ = __add__

    def __pow__(self, e: float):
        return Fn(lambda t, a=self: cv.power(a(t), e), self.breakpoints,
                  f"({self.label})^{e:g}")

    def log(self) -> "Pointwise":
        return Fn(lambda t, a=self: cv.log(a(t)), self.breakpoints,
                  f"log({self.label})")

    def exp(self) -> "Pointwise":
        return Fn(lambda t, a=self: cv.exp(a(t)), self.breakpoints,
                  f"exp({self.label})")

    def __repr__(self):
        return f"<{type(self).__name__} {self.label}>"


class Fn(Pointwise):
    """Wrap a vectorized callable."""

    def __init__(self, func: Callable[[np.ndarray], np.ndarray],
                 breakpoints: Iterable[float] = (), label: str = "fn"):
        self._func = func
        self.breakpoints = merge_breakpoints(breakpoints)
        self.label = label

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.asarray(self._func(t), dtype=float)
        return np.broadcast_to(out, t.shape).copy() if out.shape != t.shape else out


class Const(Pointwise):
    def __init__(self, value: float):
        self.value = float(value)
        self.label = f"{self.value:g}"

    def __call__(self, t):
        return np.full(np.shape(t), self.value, dtype=float)


ONE = Const(1.0)


def as_pointwise(x) -> Pointwise:
    if isinstance(x, Pointwise):
        return x
    if callable(x):
        return Fn(x, getattr(x, "breakpoints", ()), getattr(x, "label", "fn"))
    return Const(float(x))


def indicator(a: float, b: float) -> Fn:
    """chi_(a, b) as a generic pointwise function."""
    return Fn(lambda t: ((t > a) & (t < b)).astype(float), (a, b), f"chi({a:g},{b:g})")
