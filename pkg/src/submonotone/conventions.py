"""Arithmetic on extended nonnegative reals.

Expressions of the form 0*inf, 0/0, inf/inf and exp(log 0) evaluate to 0.
Everything here is elementwise over numpy arrays.
"""

import numpy as np


def mul(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    with np.errstate(invalid="ignore", over="ignore"):
        out = a * b
    zero = ((a == 0) & np.isinf(b)) | (np.isinf(a) & (b == 0))
    return np.where(zero, 0.0, out)


def div(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = a / b
    zero = ((a == 0) & (b == 0)) | (np.isinf(a) & np.isinf(b))
    out = np.where(zero, 0.0, out)
    # x/0 for x > 0 is +inf
    return np.where((b == 0) & (a > 0), np.inf, out)


def power(a, e):
    """a**e for a in [0, inf]; 0**e is inf for e < 0, inf**e is 0 for e < 0."""
    a = np.asarray(a, dtype=float)
    e = np.asarray(e, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = np.power(a, e)
    return out


def exp(x):
    with np.errstate(over="ignore"):
        return np.exp(np.asarray(x, dtype=float))


def log(x):
    with np.errstate(divide="ignore"):
        return np.log(np.asarray(x, dtype=float))


def ratio(lhs: float, rhs: float) -> float:
    """Scalar ratio lhs/rhs with the package conventions (0/0 and inf/inf give 0)."""
    return float(div(lhs, rhs))
