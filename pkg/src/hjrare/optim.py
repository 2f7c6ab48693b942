"""Derivative-free 1-D search helpers (golden section, grid + refine)."""
from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .tolerances import GOLDEN_TOL

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_max(f: Callable[[float], float], lo: float, hi: float,
               tol: float = GOLDEN_TOL, max_iter: int = 500) -> tuple[float, float]:
    """Maximize a unimodal ``f`` on ``[lo, hi]``.

    Returns ``(argmax, max)``. The endpoints are also evaluated so that a
    maximum attained at the boundary of the bracket is returned exactly.
    """
    a, b = float(lo), float(hi)
    x1 = b - INV_PHI * (b - a)
    x2 = a + INV_PHI * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + INV_PHI * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - INV_PHI * (b - a)
            f1 = f(x1)
    best_x, best_f = (x1, f1) if f1 >= f2 else (x2, f2)
    for x in (float(lo), float(hi)):
        if b - a <= tol and abs(x - best_x) <= 2 * tol:
            continue
        fx = f(x)
        if fx > best_f:
            best_x, best_f = x, fx
    return best_x, best_f


def golden_min(f: Callable[[float], float], lo: float, hi: float,
               tol: float = GOLDEN_TOL) -> tuple[float, float]:
    x, v = golden_max(lambda z: -f(z), lo, hi, tol)
    return x, -v


def grid_refine_min(f: Callable[[float], float], lo: float, hi: float, n: int,
                    vec: Callable[[np.ndarray], np.ndarray] | None = None,
                    tol: float = GOLDEN_TOL) -> tuple[float, float]:
    """Global-ish minimum of ``f`` on ``[lo, hi]``: uniform scan of ``n``
    points, then golden section on the two cells around the best node."""
    xs = np.linspace(lo, hi, n)
    vals = vec(xs) if vec is not None else np.array([f(float(x)) for x in xs])
    i = int(np.argmin(vals))
    left = xs[max(i - 1, 0)]
    right = xs[min(i + 1, n - 1)]
    x, v = golden_min(f, float(left), float(right), tol)
    if vals[i] < v:
        return float(xs[i]), float(vals[i])
    return x, v
