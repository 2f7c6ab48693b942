"""Brute-force dynamic-programming solvers used as independent oracles.

Both solvers march a value function on a uniform space-time grid. A step
takes the minimum over two transition sets:

* node pairs ``x_i -> x_j`` with ``|x_j - x_i| <= v_max dt`` (exact end
  points, no interpolation; needed while the value is still a point mass);
* a velocity fan ``v in [-v_max, v_max]`` whose departure points are
  linearly interpolated (semi-Lagrangian), which removes the velocity
  quantisation ``dx / dt`` of the node-pair stencil.

Running costs use the Lagrangian at the midpoint of the step.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError
from .model import ProcessModel, WorkingDomain, lagrangian_array
from .potential import mane
from .subsolution import optimize_c


@dataclass(frozen=True)
class GridSpec:
    x_lo: float
    x_hi: float
    nx: int
    t_hi: float
    nt: int
    v_max: float
    nv: int = 321

    def __post_init__(self):
        if self.nx < 3 or self.nt < 2 or not self.v_max > 0 or not self.x_lo < self.x_hi:
            raise ConfigError("grid needs nx >= 3, nt >= 2, v_max > 0 and x_lo < x_hi")
        if self.nv < 3:
            raise ConfigError("nv must be >= 3")

    @property
    def dx(self) -> float:
        return (self.x_hi - self.x_lo) / (self.nx - 1)

    @property
    def dt(self) -> float:
        return self.t_hi / self.nt

    def nodes(self) -> np.ndarray:
        return np.linspace(self.x_lo, self.x_hi, self.nx)

    def refined(self) -> "GridSpec":
        """Halve ``dx`` and ``dt`` (nodes of this grid stay nodes)."""
        return GridSpec(self.x_lo, self.x_hi, 2 * self.nx - 1, self.t_hi, 2 * self.nt, self.v_max, self.nv)


class _Stepper:
    """Precomputed transition data for one grid and one time direction.

    ``direction=+1`` is the forward (initial-value) update
    ``V'(x) = min V(x - v dt) + dt L``; ``direction=-1`` the backward one
    ``V'(x) = min V(x + v dt) + dt L``.
    """

    def __init__(self, model: ProcessModel, xs: np.ndarray, dt: float, v_max: float,
                 nv: int, direction: int):
        nx = xs.size
        dx = xs[1] - xs[0]
        self.nx = nx
        vs = np.linspace(-v_max, v_max, nv)
        dep = xs[:, None] - direction * vs[None, :] * dt
        mid = xs[:, None] - direction * vs[None, :] * dt / 2
        with np.errstate(all="ignore"):
            cost = dt * lagrangian_array(model, mid, np.broadcast_to(vs, dep.shape))
        pos = (dep - xs[0]) / dx
        inside = (pos >= -1e-9) & (pos <= nx - 1 + 1e-9)
        pos = np.clip(pos, 0.0, nx - 1)
        i = np.minimum(np.floor(pos).astype(int), nx - 2)
        w = pos - i
        w[w < 1e-12] = 0.0
        self.i, self.w = i, w
        self.cost = np.where(inside & np.isfinite(cost), cost, np.inf)

        m = int(math.floor(v_max * dt / dx + 1e-9))
        self.offsets = np.arange(-m, m + 1)
        src = np.arange(nx)[:, None] - direction * self.offsets[None, :]
        ok = (src >= 0) & (src < nx)
        self.src = np.clip(src, 0, nx - 1)
        v = self.offsets * dx / dt
        pmid = xs[:, None] - direction * self.offsets[None, :] * dx / 2
        with np.errstate(all="ignore"):
            pc = dt * lagrangian_array(model, pmid, np.broadcast_to(v, pmid.shape))
        self.pair_cost = np.where(ok & np.isfinite(pc), pc, np.inf)

    def __call__(self, V: np.ndarray) -> np.ndarray:
        lo = V[self.i]
        hi = V[self.i + 1]
        w = self.w
        with np.errstate(invalid="ignore"):
            interp = np.where(w == 0.0, lo,
                              np.where(np.isfinite(lo) & np.isfinite(hi), lo + w * (hi - lo), np.inf))
        sl = np.min(interp + self.cost, axis=1)
        pairs = np.min(V[self.src] + self.pair_cost, axis=1)
        return np.minimum(sl, pairs)


def _nearest(xs: np.ndarray, x: float) -> int:
    return int(np.argmin(np.abs(xs - x)))


def _level(grid: GridSpec, t: float) -> int:
    k = t / grid.dt
    kr = int(round(k))
    if kr < 1 or abs(k - kr) > 1e-9 * max(1.0, k):
        raise ConfigError(f"t={t} is not a positive multiple of dt={grid.dt}")
    return kr


def mather_profile(model: ProcessModel, grid: GridSpec, x: float, y: float,
                   k_max: Optional[int] = None) -> np.ndarray:
    """``M_grid(k dt, y; x)`` for ``k = 0..k_max`` (index 0 is the start)."""
    xs = grid.nodes()
    k_max = grid.nt if k_max is None else k_max
    step = _Stepper(model, xs, grid.dt, grid.v_max, grid.nv, +1)
    V = np.full(xs.size, np.inf)
    V[_nearest(xs, x)] = 0.0
    j = _nearest(xs, y)
    out = np.empty(k_max + 1)
    out[0] = V[j]
    for k in range(1, k_max + 1):
        V = step(V)
        out[k] = V[j]
    return out


def mather_action(model: ProcessModel, grid: GridSpec, x: float, y: float, t: float) -> float:
    """Grid approximation (from above) of the minimal action from ``x`` to
    ``y`` in time ``t``; ``inf`` when ``|y - x| > v_max t``."""
    k = _level(grid, t)
    if abs(y - x) > grid.v_max * t:
        return math.inf
    return float(mather_profile(model, grid, x, y, k)[k])


@dataclass
class DualityReport:
    """Residuals of both duality identities against the grid oracle."""

    x: float
    y: float
    rel_tol: float
    c_rows: list = field(default_factory=list)  # (c, S^c, inf_t{M+ct}, residual)
    t_rows: list = field(default_factory=list)  # (t, sup_c{S^c-ct}, M_grid, residual, c_opt)
    note: str = "grid tolerance is empirical (refinement study), not a proven rate"

    @property
    def passed(self) -> bool:
        rows = [r[3] / max(abs(r[1]), 1e-12) for r in self.c_rows]
        rows += [r[3] / max(abs(r[1]), 1e-12) for r in self.t_rows]
        return all(v <= self.rel_tol for v in rows)

    def max_t_residual(self) -> float:
        return max((r[3] for r in self.t_rows), default=0.0)


def duality_check(model: ProcessModel, x: float, y: float, t_list: Sequence[float],
                  c_list: Sequence[float], grid: GridSpec, rel_tol: float = 0.05,
                  c_crit: Optional[float] = None) -> DualityReport:
    """Compare ``S^c`` with ``min_t {M_grid(t) + c t}`` and ``M_grid(t)``
    with ``sup_c {S^c - c t}``.

    The infimum over ``t`` runs over every grid level up to ``t_hi`` (plus
    the levels in ``t_list``).
    """
    prof = mather_profile(model, grid, x, y)
    ts = grid.dt * np.arange(prof.size)
    rep = DualityReport(x, y, rel_tol)
    for c in c_list:
        s = mane(model, c, x, y)
        with np.errstate(invalid="ignore"):
            cand = prof[1:] + c * ts[1:]
        inf_t = float(np.min(cand)) if y != x else 0.0
        rep.c_rows.append((float(c), s, inf_t, abs(s - inf_t)))
    for t in t_list:
        k = _level(grid, t)
        c_opt, sup_c = optimize_c(model, x, y, t, 0.0, c_crit=c_crit)
        m = float(prof[k])
        rep.t_rows.append((float(t), sup_c, m, abs(sup_c - m), c_opt))
    return rep


@dataclass
class ValueTable:
    ts: np.ndarray
    xs: np.ndarray
    values: np.ndarray  # shape (len(ts), len(xs))

    def at(self, t: float, x: float) -> float:
        k = int(np.argmin(np.abs(self.ts - t)))
        row = self.values[k]
        if not np.all(np.isfinite(row)):
            ok = np.isfinite(row)
            return float(np.interp(x, self.xs[ok], row[ok])) if ok.any() else math.inf
        return float(np.interp(x, self.xs, row))


def grid_value_function(model: ProcessModel, domain: WorkingDomain, T: float,
                        grid: GridSpec, exit: bool = True) -> ValueTable:
    """Backward DP for the exit problem (``exit=True``: boundary absorbs at
    cost ``g`` at every time) or the terminal problem (``exit=False``: the
    path must sit on the boundary at time ``T``).

    Nodes are ``nx`` points on ``[a, b]`` and ``nt`` steps on ``[0, T]``;
    ``grid.x_lo/x_hi`` must cover the domain.
    """
    if grid.x_lo > domain.a or grid.x_hi < domain.b:
        raise ConfigError("grid does not cover the working domain")
    xs = np.linspace(domain.a, domain.b, grid.nx)
    dt = T / grid.nt
    step = _Stepper(model, xs, dt, grid.v_max, grid.nv, -1)
    V = np.full(xs.size, np.inf)
    V[0], V[-1] = domain.g_a, domain.g_b
    out = np.empty((grid.nt + 1, xs.size))
    out[grid.nt] = V
    for k in range(grid.nt - 1, -1, -1):
        V = step(V)
        if exit:
            V[0] = min(V[0], domain.g_a)
            V[-1] = min(V[-1], domain.g_b)
        out[k] = V
    return ValueTable(dt * np.arange(grid.nt + 1), xs, out)
