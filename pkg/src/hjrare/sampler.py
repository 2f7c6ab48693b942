"""Monte Carlo engines with importance sampling.

Diffusions are advanced by Euler-Maruyama under the sampling measure, with
drift ``b + sigma * theta``; birth-death processes are simulated event by
event with exponentially tilted rates. Every path carries ``log dP/dQ`` and
the estimator is the sample mean of ``exp(log_weight) * 1{exit before T}``.

Random numbers come from a Philox stream keyed by ``(seed, batch, path)``,
so a path's trajectory does not depend on how batches are scheduled over
worker threads.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError, WrongModel
from .model import Kind, ProcessModel, WorkingDomain
from .subsolution import (BranchLookup, Subsolution, control_theta_array,
                          tilt_exponent_array)

BLOCK = 2048
EVENT_CHUNK = 256
_MASK64 = (1 << 64) - 1


def path_generator(seed: int, batch: int, path: int) -> np.random.Generator:
    """Counter-based stream for one path."""
    key = np.array([seed & _MASK64, ((batch & 0xFFFFFFFF) << 32) | (path & 0xFFFFFFFF)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass
class SimConfig:
    """Everything needed to run an estimator.

    ``subsolution=None`` means standard Monte Carlo. ``epsilon`` and ``dt``
    apply to diffusions, ``n`` (population scale) to birth-death models.
    ``stop_at_exit=False`` runs every path to ``T`` (used to check the
    likelihood-ratio martingale).
    """

    model: ProcessModel
    domain: WorkingDomain
    subsolution: Optional[Subsolution] = None
    epsilon: Optional[float] = None
    n: Optional[int] = None
    T: Optional[float] = None
    dt: Optional[float] = None
    batches: int = 50
    samples_per_batch: int = 1000
    seed: int = 0
    stop_at_exit: bool = True
    threads: int = 1

    def __post_init__(self):
        if self.T is None:
            self.T = self.domain.T
        if not self.T > 0:
            raise ConfigError("T must be positive")
        if self.batches < 2:
            raise ConfigError("need at least two batches")
        if self.samples_per_batch < 1:
            raise ConfigError("samples_per_batch must be >= 1")
        if not 0 <= self.seed <= _MASK64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.model.kind is Kind.DIFFUSION:
            if self.epsilon is None or not self.epsilon > 0:
                raise ConfigError("diffusions need epsilon > 0")
            if self.dt is None:
                self.dt = self.T * 1e-3
            k = self.T / self.dt
            if not self.dt > 0 or abs(k - round(k)) > 1e-9 * max(k, 1.0):
                raise ConfigError("dt must divide T")
        elif self.model.kind is Kind.BIRTH_DEATH:
            if self.n is None or int(self.n) < 1:
                raise ConfigError("birth-death models need n >= 1")
            self.n = int(self.n)
        else:
            raise WrongModel("simulation supports diffusion and birth-death models")

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))

    @property
    def method(self) -> str:
        return "standard" if self.subsolution is None else self.subsolution.variant.value


@dataclass
class PathRecord:
    exited: bool
    exit_time: float
    log_weight: float
    trace: Optional[list] = None  # (t, x, log_weight) rows


@dataclass
class Estimate:
    mean: float
    batch_means: list
    rel_err: float
    total_samples: int
    seed: int
    wall_time: float
    hits: int = 0
    degenerate: bool = False

    @property
    def std_err(self) -> float:
        """Standard error of ``mean`` from the spread of the batch means."""
        b = np.asarray(self.batch_means)
        return float(np.std(b, ddof=1) / math.sqrt(b.size))


class _Controls:
    """Per-run control data shared (read-only) by all batches."""

    def __init__(self, cfg: SimConfig):
        self.sub = cfg.subsolution
        self.lookup = BranchLookup(self.sub) if self.sub is not None else None

    def theta(self, x):
        if self.sub is None:
            return np.zeros_like(x)
        return control_theta_array(self.sub, x, self.lookup)

    def tilt(self, x):
        if self.sub is None:
            return np.zeros_like(x)
        return tilt_exponent_array(self.sub, x, self.lookup)


# -- diffusion -----------------------------------------------------------------------

def simulate_diffusion_path(cfg: SimConfig, rng: np.random.Generator, trace: bool = False,
                            controls: Optional[_Controls] = None) -> PathRecord:
    """One Euler-Maruyama path under the sampling measure."""
    if cfg.model.kind is not Kind.DIFFUSION:
        raise WrongModel("simulate_diffusion_path needs a diffusion model")
    ctl = controls or _Controls(cfg)
    m, d = cfg.model, cfg.domain
    dt, eps = cfg.dt, cfg.epsilon
    sq_dt, sq_eps = math.sqrt(dt), math.sqrt(eps)
    x = np.array([d.x0])
    logw = 0.0
    rows = [(0.0, d.x0, 0.0)] if trace else None
    tilted = ctl.sub is not None
    hit, hit_t = False, cfg.T
    for k in range(cfg.n_steps):
        db = rng.standard_normal() * sq_dt
        s = m.sig(x)
        th = ctl.theta(x) if tilted else 0.0
        x = x + (m.drift(x) + s * th) * dt + sq_eps * s * db
        if tilted:
            logw += float(-th[0] * db / sq_eps - th[0] * th[0] * dt / (2.0 * eps))
        t = (k + 1) * dt
        if trace:
            rows.append((t, float(x[0]), logw))
        if not hit and (x[0] <= d.a or x[0] >= d.b):
            hit, hit_t = True, t
            if cfg.stop_at_exit:
                break
    return PathRecord(hit, hit_t, logw, rows)


def _diffusion_block(cfg: SimConfig, ctl: _Controls, batch: int, paths: np.ndarray):
    m, d = cfg.model, cfg.domain
    dt, eps = cfg.dt, cfg.epsilon
    sq_dt, sq_eps = math.sqrt(dt), math.sqrt(eps)
    n_steps = cfg.n_steps
    N = paths.size
    z = np.empty((N, n_steps))
    for r, p in enumerate(paths):
        z[r] = path_generator(cfg.seed, batch, int(p)).standard_normal(n_steps)
    x = np.full(N, d.x0)
    logw = np.zeros(N)
    exited = np.zeros(N, dtype=bool)
    exit_time = np.full(N, cfg.T)
    alive = np.arange(N)
    tilted = ctl.sub is not None
    for k in range(n_steps):
        if alive.size == 0:
            break
        xa = x[alive]
        db = z[alive, k] * sq_dt
        s = m.sig(xa)
        if tilted:
            th = ctl.theta(xa)
            xn = xa + (m.drift(xa) + s * th) * dt + sq_eps * s * db
            logw[alive] += -th * db / sq_eps - th * th * dt / (2.0 * eps)
        else:
            xn = xa + m.drift(xa) * dt + sq_eps * s * db
        x[alive] = xn
        out = ((xn <= d.a) | (xn >= d.b)) & ~exited[alive]
        if out.any():
            gone = alive[out]
            exited[gone] = True
            exit_time[gone] = (k + 1) * dt
            if cfg.stop_at_exit:
                alive = alive[~out]
    return exited, exit_time, logw


# -- birth-death -----------------------------------------------------------------------

def lattice(cfg: SimConfig) -> tuple[int, int, int]:
    """``(k0, k_a, k_b)``: start index (nearest lattice point to ``x0``, error
    at most ``1/(2n)``) and the exit thresholds ``k <= k_a`` / ``k >= k_b``."""
    n, d = cfg.n, cfg.domain
    k0 = int(math.floor(n * d.x0 + 0.5))
    ka = int(math.floor(n * d.a + 1e-9))
    kb = int(math.ceil(n * d.b - 1e-9))
    if not ka < k0 < kb:
        raise ConfigError(f"snapped start {k0}/{n} lies outside the working interval")
    return k0, ka, kb


def _bd_rates(cfg: SimConfig, ctl: _Controls, k: np.ndarray):
    x = k / cfg.n
    lam, mu = cfg.model.lam(x), cfg.model.mu(x)
    lam = np.maximum(lam, 0.0)
    mu = np.maximum(mu, 0.0)
    p = ctl.tilt(x)
    return lam, mu, lam * np.exp(p), mu * np.exp(-p), p


def simulate_bd_path(cfg: SimConfig, rng: np.random.Generator, trace: bool = False,
                     controls: Optional[_Controls] = None) -> PathRecord:
    """One event-driven birth-death path under the tilted rates."""
    if cfg.model.kind is not Kind.BIRTH_DEATH:
        raise WrongModel("simulate_bd_path needs a birth-death model")
    ctl = controls or _Controls(cfg)
    n, T = cfg.n, cfg.T
    k0, ka, kb = lattice(cfg)
    k, t, logw = k0, 0.0, 0.0
    hit, hit_t = False, T
    rows = [(0.0, k / n, 0.0)] if trace else None
    while True:
        u1, u2 = rng.random(2)
        lam, mu, lq, mq, p = (float(v[0]) for v in _bd_rates(cfg, ctl, np.array([k])))
        rq, rp = n * (lq + mq), n * (lam + mu)
        tau = -math.log1p(-u1) / rq if rq > 0 else math.inf
        if t + tau > T:
            logw += (rq - rp) * (T - t)
            if trace:
                rows.append((T, k / n, logw))
            return PathRecord(hit, hit_t, logw, rows)
        logw += (rq - rp) * tau
        t += tau
        if u2 < lq / (lq + mq):
            k += 1
            logw -= p
        else:
            k -= 1
            logw += p
        if trace:
            rows.append((t, k / n, logw))
        if not hit and (k <= ka or k >= kb):
            hit, hit_t = True, t
            if cfg.stop_at_exit:
                return PathRecord(True, t, logw, rows)


def _bd_block(cfg: SimConfig, ctl: _Controls, batch: int, paths: np.ndarray):
    n, T = cfg.n, cfg.T
    k0, ka, kb = lattice(cfg)
    N = paths.size
    gens = [path_generator(cfg.seed, batch, int(p)) for p in paths]
    U = np.empty((N, 0))
    k = np.full(N, k0, dtype=np.int64)
    t = np.zeros(N)
    logw = np.zeros(N)
    exited = np.zeros(N, dtype=bool)
    exit_time = np.full(N, T)
    alive = np.arange(N)
    it = 0
    while alive.size:
        if 2 * it >= U.shape[1]:
            more = np.zeros((N, 2 * EVENT_CHUNK))
            for r in alive:
                more[r] = gens[r].random(2 * EVENT_CHUNK)
            U = np.concatenate([U, more], axis=1)
        u1 = U[alive, 2 * it]
        u2 = U[alive, 2 * it + 1]
        lam, mu, lq, mq, p = _bd_rates(cfg, ctl, k[alive])
        rq, rp = n * (lq + mq), n * (lam + mu)
        with np.errstate(divide="ignore", invalid="ignore"):
            tau = np.where(rq > 0, -np.log1p(-u1) / rq, np.inf)
        ta = t[alive]
        over = ta + tau > T
        logw[alive] += (rq - rp) * np.where(over, T - ta, tau)
        go = ~over
        idx = alive[go]
        with np.errstate(divide="ignore", invalid="ignore"):
            up = u2[go] < lq[go] / (lq[go] + mq[go])
        k[idx] += np.where(up, 1, -1)
        logw[idx] += np.where(up, -p[go], p[go])
        t[idx] = ta[go] + tau[go]
        alive = idx
        if alive.size:
            out = ((k[alive] <= ka) | (k[alive] >= kb)) & ~exited[alive]
            if out.any():
                gone = alive[out]
                exited[gone] = True
                exit_time[gone] = t[gone]
                if cfg.stop_at_exit:
                    alive = alive[~out]
        it += 1
    return exited, exit_time, logw


# -- estimation ------------------------------------------------------------------------

def run_batch(cfg: SimConfig, batch: int, controls: Optional[_Controls] = None):
    """Simulate one batch; returns ``(exited, exit_time, log_weight)`` arrays
    ordered by path index."""
    ctl = controls or _Controls(cfg)
    block = _diffusion_block if cfg.model.kind is Kind.DIFFUSION else _bd_block
    parts = [block(cfg, ctl, batch, np.arange(s, min(s + BLOCK, cfg.samples_per_batch)))
             for s in range(0, cfg.samples_per_batch, BLOCK)]
    return tuple(np.concatenate([p[i] for p in parts]) for i in range(3))


def simulate_path(cfg: SimConfig, batch: int, path: int, trace: bool = False) -> PathRecord:
    """Scalar re-simulation of path ``path`` of batch ``batch``."""
    rng = path_generator(cfg.seed, batch, path)
    if cfg.model.kind is Kind.DIFFUSION:
        return simulate_diffusion_path(cfg, rng, trace)
    return simulate_bd_path(cfg, rng, trace)


def estimate(cfg: SimConfig, threads: Optional[int] = None) -> Estimate:
    """Batched importance-sampling (or standard MC) estimate of
    ``P(exit before T)``."""
    threads = cfg.threads if threads is None else threads
    ctl = _Controls(cfg)
    t0 = time.perf_counter()

    def one(b):
        exited, _, logw = run_batch(cfg, b, ctl)
        z = np.where(exited, np.exp(np.where(exited, logw, 0.0)), 0.0)
        return float(np.mean(z)), int(exited.sum())

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            res = list(ex.map(one, range(cfg.batches)))
    else:
        res = [one(b) for b in range(cfg.batches)]
    means = [r[0] for r in res]
    hits = sum(r[1] for r in res)
    mean = float(np.mean(means))
    rel = float(np.std(means, ddof=1) / mean) if mean > 0 else 0.0
    return Estimate(mean=mean, batch_means=means, rel_err=rel,
                    total_samples=cfg.batches * cfg.samples_per_batch, seed=cfg.seed,
                    wall_time=time.perf_counter() - t0, hits=hits, degenerate=(mean == 0.0))


def weight_martingale(cfg: SimConfig, threads: Optional[int] = None) -> tuple[float, float]:
    """Sample mean and standard error of ``exp(log_weight)`` over all paths
    (run with ``stop_at_exit=False`` for the full-horizon check)."""
    threads = cfg.threads if threads is None else threads
    ctl = _Controls(cfg)

    def one(b):
        return np.exp(run_batch(cfg, b, ctl)[2])

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            w = np.concatenate(list(ex.map(one, range(cfg.batches))))
    else:
        w = np.concatenate([one(b) for b in range(cfg.batches)])
    return float(w.mean()), float(w.std(ddof=1) / math.sqrt(w.size))
