"""Model families, their Hamiltonians/Lagrangians and Mañé critical values.

Four families are supported:

* ``diffusion``: ``dX = -Phi'(X) dt + sqrt(eps) sigma(X) dB`` with
  ``H(x, p) = -Phi'(x) p + (sigma(x) p)**2 / 2``;
* ``birth_death``: jump rates ``n lam(x)`` up and ``n mu(x)`` down, with
  ``H(x, p) = lam(x) (e^p - 1) + mu(x) (e^-p - 1)``;
* ``pure_birth``: ``n``-dimensional, ``H(x, p) = sum_j lam_j(x) (e^{p_j} - 1)``
  with affine rates;
* ``state_independent``: ``H(x, p) = H(p)``.

Coefficient functions are polynomials (ascending coefficient lists), which
keeps configuration files declarative. Named built-ins expand to
polynomials.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Optional

import numpy as np
from numpy.polynomial import Polynomial

from .errors import ConfigError, NonConvex, WrongModel
from .optim import golden_max, golden_min, grid_refine_min
from .tolerances import (CRITICAL_GRID_N, GOLDEN_TOL, LAGRANGIAN_MAX_RADIUS,
                         LAGRANGIAN_SEARCH_RADIUS)


class Kind(str, Enum):
    DIFFUSION = "diffusion"
    BIRTH_DEATH = "birth_death"
    PURE_BIRTH = "pure_birth"
    STATE_INDEPENDENT = "state_independent"


def _poly(coeffs) -> Polynomial:
    return Polynomial(np.asarray(coeffs, dtype=float))


@dataclass(frozen=True, eq=False)
class ProcessModel:
    """A model family together with its coefficient data.

    Only the fields relevant to ``kind`` are populated. ``spec`` holds the
    declarative description the model was built from (used for config
    round-trips and reports).
    """

    kind: Kind
    spec: dict = field(default_factory=dict)
    # diffusion
    phi: Optional[Polynomial] = None
    sigma: Optional[Polynomial] = None
    # birth-death
    lam: Optional[Polynomial] = None
    mu: Optional[Polynomial] = None
    # pure birth: lam_j(x) = base_j + (slope @ x)_j
    base: Optional[np.ndarray] = None
    slope: Optional[np.ndarray] = None
    # state independent
    h: Optional[Callable[[float], float]] = None
    quadratic: Optional[tuple[float, float]] = None  # (drift, scale): H = drift p + scale p^2 / 2

    def __post_init__(self):
        if self.kind is Kind.DIFFUSION:
            object.__setattr__(self, "dphi", self.phi.deriv())

    # vectorised coefficient access ------------------------------------------
    def grad_phi(self, x):
        return self.dphi(x)

    def drift(self, x):
        return -self.dphi(x)

    def sig(self, x):
        return self.sigma(x)

    def rates(self, x):
        """Pure-birth rate vector ``lam(x)`` for ``x`` of shape ``(n,)``."""
        return self.base + self.slope @ np.asarray(x, dtype=float)

    def __repr__(self):
        return f"ProcessModel({self.kind.value}, {self.spec})"


# -- constructors ---------------------------------------------------------------

def _named(model: ProcessModel, builtin: str, **params) -> ProcessModel:
    spec = {"kind": model.kind.value, "builtin": builtin}
    spec.update({k: float(v) for k, v in params.items()})
    return replace(model, spec=spec)


def diffusion(phi_coeffs, sigma_coeffs=(1.0,)) -> ProcessModel:
    """Diffusion with polynomial potential ``Phi`` and dispersion ``sigma``."""
    spec = {"kind": "diffusion", "phi": [float(c) for c in phi_coeffs],
            "sigma": [float(c) for c in sigma_coeffs]}
    return ProcessModel(Kind.DIFFUSION, spec, phi=_poly(phi_coeffs), sigma=_poly(sigma_coeffs))


def double_well(sigma: float = 1.0) -> ProcessModel:
    """``Phi(x) = (x^2 - 1)^2 / 2`` with constant ``sigma``."""
    return _named(diffusion([0.5, 0.0, -1.0, 0.0, 0.5], [sigma]), "double_well", sigma=sigma)


def drifted_brownian(drift: float = 1.0, sigma: float = 1.0) -> ProcessModel:
    """Constant drift: ``Phi(x) = -drift * x``."""
    return _named(diffusion([0.0, -drift], [sigma]), "drifted_brownian", drift=drift, sigma=sigma)


def ornstein_uhlenbeck(k: float = 1.0, sigma: float = 1.0) -> ProcessModel:
    return _named(diffusion([0.0, 0.0, 0.5 * k], [sigma]), "ornstein_uhlenbeck", k=k, sigma=sigma)


def birth_death(lam_coeffs, mu_coeffs) -> ProcessModel:
    spec = {"kind": "birth_death", "lam": [float(c) for c in lam_coeffs],
            "mu": [float(c) for c in mu_coeffs]}
    return ProcessModel(Kind.BIRTH_DEATH, spec, lam=_poly(lam_coeffs), mu=_poly(mu_coeffs))


def sis(rho: float = 3.0) -> ProcessModel:
    """SIS epidemic: ``lam(x) = rho x (1 - x)``, ``mu(x) = x``."""
    return _named(birth_death([0.0, rho, -rho], [0.0, 1.0]), "sis", rho=rho)


def constant_rates(lam: float = 1.0, mu: float = 1.0) -> ProcessModel:
    return _named(birth_death([lam], [mu]), "constant", lam=lam, mu=mu)


def pure_birth(base, slope=None) -> ProcessModel:
    base = np.atleast_1d(np.asarray(base, dtype=float))
    n = base.size
    slope = np.zeros((n, n)) if slope is None else np.asarray(slope, dtype=float).reshape(n, n)
    spec = {"kind": "pure_birth", "base": base.tolist(), "slope": slope.tolist()}
    return ProcessModel(Kind.PURE_BIRTH, spec, base=base, slope=slope)


def quadratic_hamiltonian(drift: float = 0.0, scale: float = 1.0) -> ProcessModel:
    """``H(p) = drift * p + scale * p^2 / 2`` (state independent)."""
    if scale <= 0:
        raise ConfigError("quadratic Hamiltonian needs scale > 0")
    m = ProcessModel(Kind.STATE_INDEPENDENT, h=lambda p: drift * p + 0.5 * scale * p * p,
                     quadratic=(float(drift), float(scale)))
    return _named(m, "quadratic", drift=drift, scale=scale)


def exponential_hamiltonian(rate: float = 1.0) -> ProcessModel:
    """Poisson-type ``H(p) = rate (e^p - 1)``."""
    m = ProcessModel(Kind.STATE_INDEPENDENT, h=lambda p: rate * math.expm1(p))
    return _named(m, "exponential", rate=rate)


def state_independent(h: Callable[[float], float]) -> ProcessModel:
    """Arbitrary convex ``H(p)``; not representable in config files."""
    return ProcessModel(Kind.STATE_INDEPENDENT, {"kind": "state_independent", "builtin": "callable"}, h=h)


BUILTINS = {
    "double_well": double_well,
    "drifted_brownian": drifted_brownian,
    "ornstein_uhlenbeck": ornstein_uhlenbeck,
    "sis": sis,
    "constant": constant_rates,
    "quadratic": quadratic_hamiltonian,
    "exponential": exponential_hamiltonian,
}


def model_from_spec(spec: dict) -> ProcessModel:
    """Build a model from its declarative block (see the run configuration)."""
    params = dict(spec)
    kind = params.pop("kind", None)
    builtin = params.pop("builtin", None)
    try:
        if builtin is not None:
            if builtin not in BUILTINS:
                raise ConfigError(f"unknown built-in model {builtin!r}")
            m = BUILTINS[builtin](**params)
        elif kind == "diffusion":
            m = diffusion(params.pop("phi"), params.pop("sigma", [1.0]))
        elif kind == "birth_death":
            m = birth_death(params.pop("lam"), params.pop("mu"))
        elif kind == "pure_birth":
            m = pure_birth(params.pop("base"), params.pop("slope", None))
        else:
            raise ConfigError(f"unknown model kind {kind!r}")
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad model block: {exc}") from exc
    if builtin is None and params:
        raise ConfigError(f"unknown model keys: {sorted(params)}")
    if kind is not None and m.kind.value != kind:
        raise ConfigError(f"built-in {builtin!r} is not of kind {kind!r}")
    return m


@dataclass(frozen=True)
class WorkingDomain:
    """Open interval ``(a, b)``, initial point, horizon and boundary costs."""

    a: float
    b: float
    x0: float
    T: float = 1.0
    g_a: float = 0.0
    g_b: float = 0.0

    def __post_init__(self):
        if not (self.a < self.x0 < self.b):
            raise ConfigError(f"need a < x0 < b, got a={self.a}, x0={self.x0}, b={self.b}")
        if not self.T > 0:
            raise ConfigError("horizon T must be positive")
        if not (math.isfinite(self.g_a) and math.isfinite(self.g_b)):
            raise ConfigError("boundary costs must be finite")

    @property
    def boundary(self) -> tuple[float, float]:
        return (self.a, self.b)

    def g(self, y: float) -> float:
        if y == self.a:
            return self.g_a
        if y == self.b:
            return self.g_b
        raise ValueError(f"{y} is not a boundary point")


def validate(model: ProcessModel, domain: WorkingDomain, n: int = 257) -> None:
    """Positivity checks needed for the potential to be finite on the domain."""
    xs = np.linspace(domain.a, domain.b, n)
    if model.kind is Kind.DIFFUSION:
        if np.any(model.sig(xs) <= 0):
            raise ConfigError("sigma must be strictly positive on the working interval")
    elif model.kind is Kind.BIRTH_DEATH:
        inner = xs[1:-1]
        if np.any(model.lam(inner) <= 0) or np.any(model.mu(inner) <= 0):
            raise ConfigError("lam and mu must be strictly positive inside the working interval")


# -- Hamiltonian / Lagrangian -----------------------------------------------------

def hamiltonian(model: ProcessModel, x, p):
    """Closed-form ``H(x, p)``; broadcasts over numpy arrays."""
    k = model.kind
    if k is Kind.DIFFUSION:
        s = model.sig(x)
        return -model.grad_phi(x) * p + 0.5 * (s * p) ** 2
    if k is Kind.BIRTH_DEATH:
        return model.lam(x) * np.expm1(p) + model.mu(x) * np.expm1(-p)
    if k is Kind.PURE_BIRTH:
        p = np.broadcast_to(np.asarray(p, dtype=float), model.base.shape)
        return float(np.sum(model.rates(x) * np.expm1(p)))
    if model.quadratic is not None:
        d, s = model.quadratic
        return d * p + 0.5 * s * p * p
    if np.ndim(p):
        return np.array([model.h(float(q)) for q in np.ravel(p)]).reshape(np.shape(p))
    return model.h(p)


def _numeric_lagrangian(hx: Callable[[float], float], v: float, radius: float) -> float:
    r = radius
    while r <= LAGRANGIAN_MAX_RADIUS:
        p, val = golden_max(lambda q: q * v - hx(q), -r, r, tol=1e-12 * max(1.0, r))
        if abs(p) < r * (1 - 1e-6):
            return val
        r *= 2.0
    raise NonConvex(f"Legendre maximiser not bracketed within |p| <= {LAGRANGIAN_MAX_RADIUS}")


def lagrangian(model: ProcessModel, x: float, v: float,
               search_radius: float = LAGRANGIAN_SEARCH_RADIUS) -> float:
    """``L(x, v) = sup_p {p v - H(x, p)}``.

    Closed forms are used for diffusions and quadratic Hamiltonians, the
    supremum is computed numerically otherwise.
    """
    if search_radius <= 0:
        raise ValueError("search_radius must be positive")
    k = model.kind
    if k is Kind.DIFFUSION:
        s = float(model.sig(x))
        return (v - float(model.drift(x))) ** 2 / (2.0 * s * s)
    if k is Kind.STATE_INDEPENDENT and model.quadratic is not None:
        d, s = model.quadratic
        return (v - d) ** 2 / (2.0 * s)
    if k is Kind.PURE_BIRTH:
        raise WrongModel("pure-birth models only support hamiltonian/critical_value")
    return _numeric_lagrangian(lambda q: float(hamiltonian(model, x, q)), v, search_radius)


def lagrangian_numeric(model: ProcessModel, x: float, v: float,
                       search_radius: float = LAGRANGIAN_SEARCH_RADIUS) -> float:
    """Always the numerical Legendre transform (used to check closed forms)."""
    return _numeric_lagrangian(lambda q: float(hamiltonian(model, x, q)), v, search_radius)


def lagrangian_array(model: ProcessModel, x, v):
    """Vectorised Lagrangian for grid solvers (closed forms only)."""
    k = model.kind
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if k is Kind.DIFFUSION:
        s = model.sig(x)
        return (v - model.drift(x)) ** 2 / (2.0 * s * s)
    if k is Kind.STATE_INDEPENDENT and model.quadratic is not None:
        d, s = model.quadratic
        return (v - d) ** 2 / (2.0 * s) + 0.0 * x
    if k is Kind.BIRTH_DEATH:
        lam, mu = model.lam(x), model.mu(x)
        # maximiser solves v = lam e^p - mu e^-p
        ep = (v + np.sqrt(v * v + 4 * lam * mu)) / (2 * lam)
        p = np.log(ep)
        return p * v - lam * (ep - 1) - mu * (1 / ep - 1)
    return np.vectorize(lambda xx, vv: lagrangian(model, float(xx), float(vv)))(x, v)


# -- critical value ---------------------------------------------------------------

_SI_RADIUS = 512.0


def _si_inf(model: ProcessModel) -> float:
    if model.quadratic is not None:
        d, s = model.quadratic
        return -d * d / (2.0 * s)
    h = model.h
    r = 1.0
    while r <= _SI_RADIUS:
        p, val = golden_min(h, -r, r, tol=1e-12)
        if abs(p) < r * (1 - 1e-6):
            return val
        r *= 2.0
    # H monotone: infimum approached at infinity
    return min(h(-_SI_RADIUS), h(_SI_RADIUS))


def inf_p_hamiltonian(model: ProcessModel, x):
    """``inf_p H(x, p)`` in closed form."""
    k = model.kind
    if k is Kind.DIFFUSION:
        return -0.5 * (model.grad_phi(x) / model.sig(x)) ** 2
    if k is Kind.BIRTH_DEATH:
        return -(np.sqrt(model.mu(x)) - np.sqrt(model.lam(x))) ** 2
    if k is Kind.PURE_BIRTH:
        return -float(np.sum(model.rates(x)))
    return _si_inf(model)


def critical_value(model: ProcessModel, domain: WorkingDomain,
                   grid_n: int = CRITICAL_GRID_N) -> float:
    """Mañé critical value ``c_H = sup_x inf_p H(x, p)`` over ``[a, b]``.

    For pure-birth models the supremum runs over the box ``[a, b]^n`` and is
    exact (affine rates attain their infimum at a vertex).
    """
    return critical_value_interval(model, domain.a, domain.b, grid_n)


def critical_value_interval(model: ProcessModel, lo: float, hi: float,
                            grid_n: int = CRITICAL_GRID_N) -> float:
    if grid_n < 2:
        raise ValueError("grid_n must be >= 2")
    k = model.kind
    if k is Kind.STATE_INDEPENDENT:
        return _si_inf(model)
    if k is Kind.PURE_BIRTH:
        col = model.slope.sum(axis=0)
        lam_star = float(model.base.sum() + np.sum(np.minimum(col * lo, col * hi)))
        return -lam_star
    if lo == hi:
        return float(inf_p_hamiltonian(model, lo))

    def neg(x):
        return -float(inf_p_hamiltonian(model, x))

    _, v = grid_refine_min(neg, lo, hi, grid_n,
                           vec=lambda xs: -inf_p_hamiltonian(model, xs), tol=GOLDEN_TOL)
    return -v
