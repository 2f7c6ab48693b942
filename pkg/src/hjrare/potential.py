"""Mañé potential ``S^c(x, y)`` of the one-dimensional model families.

In one dimension ``y -> S^c(x, y)`` is a primitive of the root ``p^c`` of
``H(z, p) = c`` whose branch is fixed by the direction of travel,
``sign(z - x)``. The potential is therefore the integral of a closed-form
integrand, evaluated here by adaptive Simpson quadrature.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.optimize import brentq

from .errors import BelowCritical, QuadratureFailure, WrongModel
from .model import Kind, ProcessModel
from .tolerances import CRITICAL_MARGIN, DISC_CLAMP, QUAD_MAX_DEPTH, QUAD_TOL

_EPS = np.finfo(float).eps


def sign_tie_plus(v: float) -> float:
    """``sign`` with the tie rule ``sign(0) = +1``."""
    return -1.0 if v < 0 else 1.0


def _clamp(disc: float) -> float:
    if disc < 0.0:
        if disc < -DISC_CLAMP:
            raise BelowCritical(f"negative discriminant {disc:.3e}: energy level below local critical value")
        return 0.0
    return disc


def _horner(coefs: tuple[float, ...]) -> Callable[[float], float]:
    if len(coefs) == 1:
        k = coefs[0]
        return lambda x: k
    rev = coefs[::-1]

    def f(x):
        acc = 0.0
        for a in rev:
            acc = acc * x + a
        return acc
    return f


def scalar_coefficients(model: ProcessModel):
    """Fast scalar evaluators of the model coefficients."""
    cache = model.__dict__.get("_scalar")
    if cache is not None:
        return cache
    if model.kind is Kind.DIFFUSION:
        cache = (_horner(tuple(model.dphi.coef)), _horner(tuple(model.sigma.coef)))
    elif model.kind is Kind.BIRTH_DEATH:
        cache = (_horner(tuple(model.lam.coef)), _horner(tuple(model.mu.coef)))
    else:
        cache = ()
    object.__setattr__(model, "_scalar", cache)
    return cache


def _si_root(model: ProcessModel, c: float, branch: float) -> float:
    if model.quadratic is not None:
        d, s = model.quadratic
        disc = _clamp(d * d + 2.0 * s * c)
        return (-d + branch * math.sqrt(disc)) / s
    h = model.h
    # minimiser of H, then expand outward until H crosses c
    from .optim import golden_min
    r = 1.0
    while True:
        pmin, hmin = golden_min(h, -r, r, tol=1e-13)
        if abs(pmin) < r * (1 - 1e-6) or r >= 256:
            break
        r *= 2.0
    if hmin > c + DISC_CLAMP:
        raise BelowCritical(f"c={c} below inf H={hmin}")
    step = 1.0
    for _ in range(60):
        q = pmin + branch * step
        try:
            hq = h(q)
        except OverflowError:
            hq = math.inf
        if hq >= c:
            lo, hi = sorted((pmin, q))
            return brentq(lambda p: h(p) - c, lo, hi, xtol=1e-14, rtol=4 * _EPS)
        step *= 2.0
    # H stays below c in this direction: no finite root, the potential is infinite
    return branch * math.inf


def branch_gradient(model: ProcessModel, z: float, c: float, branch: float) -> float:
    """Root of ``H(z, p) = c`` on the branch selected by ``branch = +-1``."""
    k = model.kind
    if k is Kind.DIFFUSION:
        dphi, sig = scalar_coefficients(model)
        s = sig(z)
        d = dphi(z) / s
        return (d + branch * math.sqrt(_clamp(d * d + 2.0 * c))) / s
    if k is Kind.BIRTH_DEATH:
        lamf, muf = scalar_coefficients(model)
        lam, mu = lamf(z), muf(z)
        if lam <= 0.0:
            raise BelowCritical(f"birth rate vanishes at z={z}")
        bb = (c + lam + mu) / (2.0 * lam)
        root = math.sqrt(_clamp(bb * bb - mu / lam))
        if branch > 0:
            return math.log(bb + root)
        # bb - root without cancellation
        return math.log((mu / lam) / (bb + root)) if bb + root > 0 else -math.inf
    if k is Kind.STATE_INDEPENDENT:
        return _si_root(model, c, branch)
    raise WrongModel("the Mañé potential is implemented for one-dimensional models only")


def branch_gradient_array(model: ProcessModel, z, c: float, branch):
    """Vectorised :func:`branch_gradient` (diffusion and birth-death)."""
    z = np.asarray(z, dtype=float)
    branch = np.broadcast_to(np.asarray(branch, dtype=float), z.shape)
    k = model.kind
    if k is Kind.DIFFUSION:
        s = model.sig(z)
        d = model.grad_phi(z) / s
        disc = d * d + 2.0 * c
        if np.any(disc < -DISC_CLAMP):
            raise BelowCritical("negative discriminant on grid")
        return (d + branch * np.sqrt(np.maximum(disc, 0.0))) / s
    if k is Kind.BIRTH_DEATH:
        lam, mu = model.lam(z), model.mu(z)
        if np.any(lam <= 0):
            raise BelowCritical("birth rate vanishes on grid")
        bb = (c + lam + mu) / (2.0 * lam)
        disc = bb * bb - mu / lam
        if np.any(disc < -DISC_CLAMP):
            raise BelowCritical("negative discriminant on grid")
        root = np.sqrt(np.maximum(disc, 0.0))
        up = np.log(bb + root)
        with np.errstate(divide="ignore"):
            down = np.log((mu / lam) / (bb + root))
        return np.where(branch > 0, up, down)
    return np.array([branch_gradient(model, float(zz), c, float(bb)) for zz, bb in zip(z.ravel(), branch.ravel())]).reshape(z.shape)


def gradient_pc(model: ProcessModel, anchor: float, z: float, c: float) -> float:
    """Gradient ``p^c(z)`` of ``S^c(anchor, .)``; the branch is ``sign(z - anchor)``
    with ``sign(0) = +1``."""
    return branch_gradient(model, z, c, sign_tie_plus(z - anchor))


# -- quadrature --------------------------------------------------------------------

def adaptive_simpson(f: Callable[[float], float], a: float, b: float,
                     tol: float = QUAD_TOL, max_depth: int = QUAD_MAX_DEPTH) -> float:
    """Adaptive Simpson quadrature of ``f`` over ``[a, b]`` (``b < a`` allowed).

    Raises :class:`QuadratureFailure` if an interval still misses its share of
    the tolerance at ``max_depth`` bisections.
    """
    if a == b:
        return 0.0
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    if not math.isfinite(whole):
        return whole
    parts = []
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    while stack:
        lo, hi, flo, fmid, fhi, est, t, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = f(lm), f(rm)
        left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid)
        right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi)
        delta = left + right - est
        if (abs(delta) <= 15.0 * t
                or abs(delta) <= 64.0 * _EPS * (abs(left) + abs(right))
                or abs(hi - lo) <= 8.0 * _EPS * max(abs(lo), abs(hi), 1.0)):
            parts.append(left + right + delta / 15.0)
            continue
        if depth >= max_depth:
            raise QuadratureFailure(
                f"adaptive Simpson hit depth {max_depth} on [{lo}, {hi}] (error estimate {abs(delta):.3e})")
        stack.append((mid, hi, fmid, frm, fhi, right, 0.5 * t, depth + 1))
        stack.append((lo, mid, flo, flm, fmid, left, 0.5 * t, depth + 1))
    return math.fsum(parts)


def fixed_simpson(f_vec: Callable[[np.ndarray], np.ndarray], a: float, b: float,
                  panels: int) -> float:
    """Composite Simpson rule with ``panels`` (even) subintervals; vectorised."""
    if panels % 2:
        panels += 1
    z = np.linspace(a, b, panels + 1)
    y = f_vec(z)
    h = (b - a) / panels
    return float(h / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum()))


@dataclass(frozen=True)
class PotentialQuery:
    """Evaluation request for ``S^c(x, y)``.

    ``c_critical``, when known, is used to reject ``c <= c_H`` up front;
    otherwise only the local discriminant checks apply.
    """

    model: ProcessModel
    c: float
    x: float
    y: float
    quad_tol: float = QUAD_TOL
    max_depth: int = QUAD_MAX_DEPTH
    c_critical: Optional[float] = None


def mane_potential(q: PotentialQuery) -> float:
    if q.c_critical is not None and not q.c > q.c_critical + CRITICAL_MARGIN:
        raise BelowCritical(f"c={q.c} must exceed the critical value {q.c_critical}")
    if q.y == q.x:
        return 0.0
    branch = 1.0 if q.y > q.x else -1.0
    model, c = q.model, q.c
    if model.kind is Kind.STATE_INDEPENDENT:
        # constant integrand
        return (q.y - q.x) * branch_gradient(model, q.x, c, branch)
    return adaptive_simpson(lambda z: branch_gradient(model, z, c, branch),
                            q.x, q.y, q.quad_tol, q.max_depth)


def mane(model: ProcessModel, c: float, x: float, y: float, **kw) -> float:
    """Shorthand for ``mane_potential(PotentialQuery(model, c, x, y, ...))``."""
    return mane_potential(PotentialQuery(model, c, x, y, **kw))


def potential_profile(model: ProcessModel, c: float, x: float, y: float, n: int = 201):
    """Integrand ``p^c`` on ``n`` nodes from ``x`` to ``y`` (anchor ``x``)."""
    zs = np.linspace(x, y, n)
    branch = 1.0 if y >= x else -1.0
    return zs, np.array([branch_gradient(model, float(z), c, branch) for z in zs])


class PrimitiveTable:
    """Primitives ``P_+(z) = int_a^z p_+`` and ``P_-(z) = int_a^z p_-`` on a grid.

    With them ``S^c(x, y) = P_s(y) - P_s(x)``, ``s = sign(y - x)``, for any
    grid points, which is how the sampler evaluates ``S^c(x, a) - S^c(x, b)``
    for all ``x`` at once.
    """

    def __init__(self, model: ProcessModel, c: float, lo: float, hi: float, n: int):
        self.z = np.linspace(lo, hi, n)
        pp = branch_gradient_array(model, self.z, c, 1.0)
        pm = branch_gradient_array(model, self.z, c, -1.0)
        self.plus = cumulative_simpson(pp, x=self.z, initial=0.0)
        self.minus = cumulative_simpson(pm, x=self.z, initial=0.0)

    def to_lower(self):
        """``S^c(z, lo)`` for every grid point ``z``."""
        return -self.minus

    def to_upper(self):
        """``S^c(z, hi)`` for every grid point ``z``."""
        return self.plus[-1] - self.plus
