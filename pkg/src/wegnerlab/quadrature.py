"""Gauss-Legendre rules for array-valued integrands."""
from __future__ import annotations

from functools import lru_cache

import numpy as np

DEFAULT_ORDER = 10


@lru_cache(maxsize=None)
def _rule(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def panel_nodes(a: float, b: float, panels: int, order: int = DEFAULT_ORDER):
    """Nodes and weights of the composite rule on ``[a, b]``."""
    x, w = _rule(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def composite(fun, a: float, b: float, panels: int = 1, order: int = DEFAULT_ORDER):
    """``sum_i w_i fun(x_i)`` over a composite rule; ``fun`` returns arrays."""
    nodes, weights = panel_nodes(a, b, panels, order)
    total = None
    for x, w in zip(nodes, weights):
        term = w * np.asarray(fun(x))
        total = term if total is None else total + term
    return total


def composite_with_error(fun, a, b, panels=1, order=DEFAULT_ORDER):
    """Composite rule with the difference to the doubled rule as error estimate."""
    coarse = composite(fun, a, b, panels, order)
    fine = composite(fun, a, b, 2 * panels, order)
    return fine, _norm(fine - coarse)


def _norm(x):
    x = np.asarray(x)
    if x.ndim == 2:
        return float(np.linalg.norm(x, 2))
    return float(np.max(np.abs(x))) if x.size else 0.0


def adaptive(fun, a: float, b: float, tol: float = 1e-8, order: int = DEFAULT_ORDER,
             max_depth: int = 40, min_depth: int = 2):
    """Globally adaptive bisection of Gauss-Legendre panels.

    Each panel is accepted when the single-panel rule and the sum over its two
    halves differ by at most its share ``tol * width / (b - a)`` of the
    tolerance.  Returns ``(value, error_estimate)``.
    """
    length = b - a
    if length == 0:
        zero = np.zeros_like(np.asarray(fun(a)), dtype=complex)
        return zero, 0.0

    def rule(lo, hi):
        return composite(fun, lo, hi, 1, order)

    stack = [(a, b, rule(a, b), 0)]
    total, err = None, 0.0
    while stack:
        lo, hi, whole, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        left, right = rule(lo, mid), rule(mid, hi)
        halves = left + right
        diff = _norm(halves - whole)
        share = tol * (hi - lo) / length
        if depth >= min_depth and (diff <= share or depth >= max_depth):
            total = halves if total is None else total + halves
            err += diff
        else:
            stack.append((mid, hi, right, depth + 1))
            stack.append((lo, mid, left, depth + 1))
    return total, err
