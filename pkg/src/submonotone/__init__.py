"""Weighted Hardy-type inequalities with sub-monotone functionals, numerically."""

__version__ = "0.1.0"
