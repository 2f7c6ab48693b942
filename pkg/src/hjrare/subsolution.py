"""Min-max optimisation over energy levels and the two subsolution families.

For an exit/terminal problem on ``(a, b)`` with boundary cost ``g`` the value
at the initial point is

    V(0, x0) = min_{y in {a, b}} sup_{c > c_H} { g(y) + S^c(x0, y) - c T }.

The optimal pair ``(c*, y*)`` defines

* ``Uc(t, x)   = min_y { g(y) + S^c(x, y) } - c (T - t)``
* ``UcyK(t, x) = g(y) + S^c(x0, y) - S^c(x0, x) - c (T - t) - K``

whose gradients give the importance-sampling controls.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .errors import Unbounded, WrongModel
from .model import (Kind, ProcessModel, WorkingDomain, critical_value,
                    critical_value_interval, lagrangian, lagrangian_array)
from .optim import golden_max, grid_refine_min
from .potential import (PrimitiveTable, branch_gradient, branch_gradient_array,
                        mane, sign_tie_plus)
from .tolerances import (C_CAP, GOLDEN_TOL, HOPF_LAX_RADIUS, OPTIM_TOL, TIE_TOL,
                         UC_SIGN_GRID)


def _left_end(c_crit: float) -> float:
    return c_crit + 1e-9 * max(1.0, abs(c_crit))


def optimize_c(model: ProcessModel, x0: float, y: float, T: float, g_y: float = 0.0,
               bracket_hi: float = 1.0, c_crit: Optional[float] = None,
               tol: float = GOLDEN_TOL) -> tuple[float, float]:
    """Maximise the concave map ``c -> g_y + S^c(x0, y) - c T`` over ``c > c_H``.

    ``c_crit`` defaults to the critical value over the segment between
    ``x0`` and ``y``. The upper end of the bracket is doubled until a
    backward difference of the objective turns negative.

    Returns
    -------
    (c_opt, objective)
    """
    if not T > 0:
        raise ValueError("T must be positive")
    if c_crit is None:
        c_crit = critical_value_interval(model, min(x0, y), max(x0, y))
    lo = _left_end(c_crit)

    def f(c):
        return g_y + mane(model, c, x0, y) - c * T

    hi = max(bracket_hi, lo + 1.0)
    while True:
        h = 1e-6 * max(1.0, hi - lo)
        if f(hi) - f(hi - h) < 0.0:
            break
        hi *= 2.0
        if hi > C_CAP:
            raise Unbounded(f"objective still increasing at c={hi:g}")
    return golden_max(f, lo, hi, tol)


@dataclass
class MinMaxResult:
    """Outcome of the min-max problem at ``(0, x0)``.

    ``per_boundary`` maps each boundary point to ``(c_opt, objective)``.
    """

    value: float
    c_star: float
    y_star: float
    per_boundary: dict
    maxmin_value: float
    gap: float
    K: float
    c_critical: float = 0.0
    maxmin_c: float = float("nan")

    def as_dict(self) -> dict:
        d = asdict(self)
        d["per_boundary"] = {repr(k): list(v) for k, v in self.per_boundary.items()}
        return d


def minmax(model: ProcessModel, domain: WorkingDomain, T: Optional[float] = None,
           c_crit: Optional[float] = None) -> MinMaxResult:
    """Solve the two-point min-max problem and its max-min counterpart."""
    T = domain.T if T is None else T
    if c_crit is None:
        c_crit = critical_value(model, domain)
    x0 = domain.x0
    per = {}
    for y in domain.boundary:
        per[y] = optimize_c(model, x0, y, T, domain.g(y), c_crit=c_crit)
    a, b = domain.boundary
    # ties go to b
    y_star = a if per[a][1] < per[b][1] - TIE_TOL else b
    c_star, value = per[y_star]

    def inner_min(c):
        return min(domain.g(y) + mane(model, c, x0, y) - c * T for y in domain.boundary)

    c_lo, c_hi = sorted((per[a][0], per[b][0]))
    if c_hi - c_lo <= GOLDEN_TOL:
        mm_c, mm = c_lo, inner_min(c_lo)
    else:
        mm_c, mm = golden_max(inner_min, c_lo, c_hi)
    # max-min <= min-max always; anything above is quadrature/search roundoff
    if value < mm <= value + OPTIM_TOL * max(1.0, abs(value)):
        mm = value

    at_star = {y: domain.g(y) + mane(model, c_star, x0, y) for y in domain.boundary}
    K = at_star[y_star] - min(at_star.values())
    return MinMaxResult(value=value, c_star=c_star, y_star=y_star, per_boundary=per,
                        maxmin_value=mm, gap=value - mm, K=K, c_critical=c_crit,
                        maxmin_c=mm_c)


def objective_curve(model: ProcessModel, domain: WorkingDomain, cs, T: Optional[float] = None):
    """``g(y) + S^c(x0, y) - c T`` for each boundary point over the levels ``cs``."""
    T = domain.T if T is None else T
    return {y: np.array([domain.g(y) + mane(model, float(c), domain.x0, y) - c * T for c in cs])
            for y in domain.boundary}


class Variant(str, Enum):
    UC = "Uc"
    UCYK = "UcyK"


@dataclass(eq=False)
class Subsolution:
    """One member of either subsolution family (immutable once built)."""

    variant: Variant
    model: ProcessModel
    domain: WorkingDomain
    c: float
    y: float = float("nan")
    K: float = 0.0
    T: Optional[float] = None
    _s_x0_y: float = field(default=float("nan"), repr=False)

    def __post_init__(self):
        self.variant = Variant(self.variant)
        if self.T is None:
            self.T = self.domain.T
        if self.variant is Variant.UCYK:
            self._s_x0_y = mane(self.model, self.c, self.domain.x0, self.y)

    @property
    def x0(self) -> float:
        return self.domain.x0

    @classmethod
    def from_minmax(cls, variant, model: ProcessModel, domain: WorkingDomain,
                    res: MinMaxResult, T: Optional[float] = None) -> "Subsolution":
        return cls(Variant(variant), model, domain, res.c_star, res.y_star, res.K, T)

    # -- branch selection -----------------------------------------------------
    def boundary_difference(self, x: float) -> float:
        """``g(a) + S^c(x, a) - g(b) - S^c(x, b)`` (the ``Uc`` switching function)."""
        d = self.domain
        return (d.g_a + mane(self.model, self.c, x, d.a)) - (d.g_b + mane(self.model, self.c, x, d.b))

    def branch(self, x: float) -> float:
        """Sign selecting the root of ``H(x, p) = c`` that equals ``-DU``."""
        if self.variant is Variant.UCYK:
            return sign_tie_plus(x - self.x0)
        return sign_tie_plus(self.boundary_difference(x))


def eval_subsolution(s: Subsolution, t: float, x: float) -> float:
    d = s.domain
    if s.variant is Variant.UC:
        best = min(d.g_a + mane(s.model, s.c, x, d.a), d.g_b + mane(s.model, s.c, x, d.b))
        return best - s.c * (s.T - t)
    return d.g(s.y) + s._s_x0_y - mane(s.model, s.c, s.x0, x) - s.c * (s.T - t) - s.K


def gradient_subsolution(s: Subsolution, t: float, x: float) -> float:
    """Spatial derivative ``D_x U(t, x)``.

    Both families have ``D_x U = -p`` with ``p`` the root of ``H(x, p) = c``
    on the branch returned by :meth:`Subsolution.branch`.
    """
    return -branch_gradient(s.model, x, s.c, s.branch(x))


def control_theta(s: Subsolution, t: float, x: float) -> float:
    """Girsanov drift shift ``theta = -sigma(x) D_x U(t, x)`` (diffusions)."""
    if s.model.kind is not Kind.DIFFUSION:
        raise WrongModel("control_theta requires a diffusion model")
    sig = float(s.model.sig(x))
    d = float(s.model.grad_phi(x)) / sig
    return d + s.branch(x) * math.sqrt(max(d * d + 2.0 * s.c, 0.0))


def tilted_rates(s: Subsolution, x: float) -> tuple[float, float]:
    """Exponentially tilted birth and death rates at ``x``."""
    if s.model.kind is not Kind.BIRTH_DEATH:
        raise WrongModel("tilted_rates requires a birth-death model")
    lam, mu = float(s.model.lam(x)), float(s.model.mu(x))
    if lam <= 0.0 or mu <= 0.0:
        return lam, mu
    p = branch_gradient(s.model, x, s.c, s.branch(x))
    return lam * math.exp(p), mu * math.exp(-p)


class BranchLookup:
    """Vectorised branch selection for the simulation engines.

    ``UcyK`` needs only ``sign(x - x0)``. For ``Uc`` the switching function
    is tabulated once on a grid over ``[a, b]`` and its zeros located by
    linear interpolation; outside ``[a, b]`` the end values are extended.
    """

    def __init__(self, s: Subsolution, n: int = UC_SIGN_GRID):
        self.variant = s.variant
        self.x0 = s.x0
        self.switches = np.empty(0)
        self.left_sign = 1.0
        if s.variant is Variant.UC:
            d = s.domain
            tab = PrimitiveTable(s.model, s.c, d.a, d.b, n)
            diff = (d.g_a + tab.to_lower()) - (d.g_b + tab.to_upper())
            sg = np.where(diff >= 0.0, 1.0, -1.0)
            idx = np.nonzero(sg[1:] != sg[:-1])[0]
            z = tab.z
            self.switches = z[idx] - diff[idx] * (z[idx + 1] - z[idx]) / (diff[idx + 1] - diff[idx])
            self.left_sign = float(sg[0])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.variant is Variant.UCYK:
            return np.where(x >= self.x0, 1.0, -1.0)
        flips = np.searchsorted(self.switches, x, side="right")
        return self.left_sign * np.where(flips % 2 == 0, 1.0, -1.0)


def control_theta_array(s: Subsolution, x, lookup: Optional[BranchLookup] = None):
    lookup = lookup or BranchLookup(s)
    sig = s.model.sig(x)
    d = s.model.grad_phi(x) / sig
    return d + lookup(x) * np.sqrt(np.maximum(d * d + 2.0 * s.c, 0.0))


def tilt_exponent_array(s: Subsolution, x, lookup: Optional[BranchLookup] = None):
    """``log(lam_q / lam)`` at each ``x``; zero where a rate vanishes."""
    lookup = lookup or BranchLookup(s)
    x = np.asarray(x, dtype=float)
    lam, mu = s.model.lam(x), s.model.mu(x)
    ok = (lam > 0) & (mu > 0)
    out = np.zeros_like(x)
    if np.any(ok):
        out[ok] = branch_gradient_array(s.model, x[ok], s.c, lookup(x[ok]))
    return out


# -- Hopf-Lax ---------------------------------------------------------------------

def hopf_lax(model: ProcessModel, g: Callable[[float], float], t: float, y: float,
             x_grid: int = 2001, radius: float = HOPF_LAX_RADIUS) -> float:
    """``inf_x { g(x) + t L((y - x) / t) }`` for a state-independent model."""
    if model.kind is not Kind.STATE_INDEPENDENT:
        raise WrongModel("Hopf-Lax needs a state-independent Hamiltonian")
    if not t > 0 or x_grid < 3:
        raise ValueError("need t > 0 and x_grid >= 3")

    def f(x):
        return g(x) + t * lagrangian(model, 0.0, (y - x) / t)

    def fv(xs):
        return np.array([g(float(x)) for x in xs]) + t * lagrangian_array(model, 0.0 * xs, (y - xs) / t)

    return grid_refine_min(f, y - radius, y + radius, x_grid, vec=fv)[1]


def minmax_initial(model: ProcessModel, g: Callable[[float], float], t: float, y: float,
                   x_grid: int = 2001, radius: float = HOPF_LAX_RADIUS) -> float:
    """``inf_x sup_{c > c_H} { g(x) + S^c(x, y) - c t }`` (initial-value problem)."""
    c_crit = critical_value_interval(model, y - radius, y + radius)

    def f(x):
        return optimize_c(model, x, y, t, g(x), c_crit=c_crit)[1]

    return grid_refine_min(f, y - radius, y + radius, x_grid)[1]
