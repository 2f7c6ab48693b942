"""Declarative run configuration (TOML).

A run file looks like::

    schema = 1
    method = "UcyK"

    [model]
    builtin = "double_well"
    sigma = 1.0

    [domain]
    a = -1.42
    b = 1.42
    x0 = 1.0

    [scale]
    epsilon = [0.09]
    T = [0.25]

    [sampling]
    batches = 50
    samples_per_batch = 10000
    dt_factor = 0.001
    seed = 20240601

Unknown keys are rejected in every section.
"""
from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import tomlkit
from tomlkit.exceptions import TOMLKitError

from .errors import ConfigError
from .model import Kind, ProcessModel, WorkingDomain, model_from_spec
from .model import validate as validate_model

SCHEMA_VERSION = 1
METHODS = ("standard", "Uc", "UcyK")
DEFAULT_SEED = 20240601

_TOP = {"schema", "method", "model", "domain", "scale", "sampling", "output"}
_DOMAIN = {"a", "b", "x0", "g_a", "g_b"}
_SCALE = {"epsilon", "n", "T"}
_SAMPLING = {"batches", "samples_per_batch", "dt_factor", "seed", "threads"}
_OUTPUT = {"dir", "trace"}


@dataclass
class RunConfig:
    model: dict
    domain: dict
    method: str = "UcyK"
    epsilon: Optional[list] = None
    n: Optional[list] = None
    T: list = field(default_factory=lambda: [1.0])
    batches: int = 50
    samples_per_batch: int = 10000
    dt_factor: float = 1e-3
    seed: int = DEFAULT_SEED
    threads: int = 1
    out_dir: str = "out"
    trace: bool = False
    schema: int = SCHEMA_VERSION

    # -- derived objects ------------------------------------------------------
    def build_model(self) -> ProcessModel:
        return model_from_spec(copy.deepcopy(self.model))

    def build_domain(self, T: Optional[float] = None) -> WorkingDomain:
        d = self.domain
        return WorkingDomain(float(d["a"]), float(d["b"]), float(d["x0"]),
                             float(self.T[0] if T is None else T),
                             float(d.get("g_a", 0.0)), float(d.get("g_b", 0.0)))

    def validate(self) -> "RunConfig":
        """Check everything that can be checked before computing."""
        if self.schema != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema version {self.schema}")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        missing = {"a", "b", "x0"} - set(self.domain)
        if missing:
            raise ConfigError(f"domain block lacks {sorted(missing)}")
        m = self.build_model()
        if not self.T or any(not float(t) > 0 for t in self.T):
            raise ConfigError("T must be a non-empty list of positive numbers")
        for t in self.T:
            validate_model(m, self.build_domain(t))
        if m.kind is Kind.DIFFUSION:
            if not self.epsilon or any(not float(e) > 0 for e in self.epsilon):
                raise ConfigError("diffusion runs need a list of epsilon > 0")
            if self.n:
                raise ConfigError("n applies to birth-death models only")
        elif m.kind is Kind.BIRTH_DEATH:
            if not self.n or any(int(k) != k or k < 1 for k in self.n):
                raise ConfigError("birth-death runs need a list of integers n >= 1")
            if self.epsilon:
                raise ConfigError("epsilon applies to diffusion models only")
        if self.batches < 2 or self.samples_per_batch < 1:
            raise ConfigError("need batches >= 2 and samples_per_batch >= 1")
        if not 0 < self.dt_factor <= 1:
            raise ConfigError("dt_factor must lie in (0, 1]")
        k = 1.0 / self.dt_factor
        if abs(k - round(k)) > 1e-9 * k:
            raise ConfigError("dt_factor must be 1/N for an integer N")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        return self

    # -- (de)serialisation ----------------------------------------------------
    def to_dict(self) -> dict:
        d = {"schema": self.schema, "method": self.method,
             "model": copy.deepcopy(self.model), "domain": dict(self.domain)}
        scale = {"T": list(self.T)}
        if self.epsilon is not None:
            scale["epsilon"] = list(self.epsilon)
        if self.n is not None:
            scale["n"] = list(self.n)
        d["scale"] = scale
        d["sampling"] = {"batches": self.batches, "samples_per_batch": self.samples_per_batch,
                         "dt_factor": self.dt_factor, "seed": self.seed, "threads": self.threads}
        d["output"] = {"dir": self.out_dir, "trace": self.trace}
        return d

    def dumps(self) -> str:
        return tomlkit.dumps(self.to_dict())

    def config_hash(self) -> str:
        """Short digest of the canonical form (ignores threads and output)."""
        d = self.to_dict()
        d["sampling"].pop("threads")
        d.pop("output")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _check_keys(block: dict, allowed: set, where: str) -> None:
    extra = set(block) - allowed
    if extra:
        raise ConfigError(f"unknown keys in {where}: {sorted(extra)}")


def from_dict(d: dict) -> RunConfig:
    if not isinstance(d, dict):
        raise ConfigError("configuration must be a table")
    _check_keys(d, _TOP, "top level")
    for key in ("model", "domain"):
        if not isinstance(d.get(key), dict):
            raise ConfigError(f"missing [{key}] section")
    _check_keys(d["domain"], _DOMAIN, "[domain]")
    scale = d.get("scale", {})
    sampling = d.get("sampling", {})
    output = d.get("output", {})
    _check_keys(scale, _SCALE, "[scale]")
    _check_keys(sampling, _SAMPLING, "[sampling]")
    _check_keys(output, _OUTPUT, "[output]")

    def as_list(v):
        return None if v is None else (list(v) if isinstance(v, (list, tuple)) else [v])

    try:
        cfg = RunConfig(
            model=copy.deepcopy(dict(d["model"])),
            domain={k: float(v) for k, v in d["domain"].items()},
            method=str(d.get("method", "UcyK")),
            epsilon=as_list(scale.get("epsilon")),
            n=as_list(scale.get("n")),
            T=as_list(scale.get("T", [1.0])),
            batches=int(sampling.get("batches", 50)),
            samples_per_batch=int(sampling.get("samples_per_batch", 10000)),
            dt_factor=float(sampling.get("dt_factor", 1e-3)),
            seed=int(sampling.get("seed", DEFAULT_SEED)),
            threads=int(sampling.get("threads", 1)),
            out_dir=str(output.get("dir", "out")),
            trace=bool(output.get("trace", False)),
            schema=int(d.get("schema", SCHEMA_VERSION)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value: {exc}") from exc
    return cfg.validate()


def loads(text: str) -> RunConfig:
    try:
        doc = tomlkit.parse(text).unwrap()
    except TOMLKitError as exc:
        raise ConfigError(f"cannot parse configuration: {exc}") from exc
    return from_dict(doc)


def load(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return loads(text)


# -- presets ----------------------------------------------------------------------

def table1_config(**kw) -> RunConfig:
    cfg = RunConfig(model={"builtin": "double_well", "sigma": 1.0},
                    domain={"a": -1.42, "b": 1.42, "x0": 1.0, "g_a": 0.0, "g_b": 0.0},
                    method="UcyK", epsilon=[0.09, 0.05, 0.03], T=[0.25, 0.5, 1.0, 2.0],
                    batches=50, samples_per_batch=10000)
    return replace(cfg, **kw).validate()


def table2_config(**kw) -> RunConfig:
    cfg = RunConfig(model={"builtin": "sis", "rho": 3.0},
                    domain={"a": 0.5, "b": 5.0 / 6.0, "x0": 2.0 / 3.0, "g_a": 0.0, "g_b": 0.0},
                    method="UcyK", n=[100, 200, 300, 400, 500], T=[0.5],
                    batches=50, samples_per_batch=1000)
    return replace(cfg, **kw).validate()


def gap_config(a: float = -1.2, b: float = 1.1, **kw) -> RunConfig:
    cfg = RunConfig(model={"builtin": "drifted_brownian", "drift": 1.0, "sigma": 1.0},
                    domain={"a": a, "b": b, "x0": 0.0, "g_a": 0.0, "g_b": 0.0},
                    method="UcyK", epsilon=[0.1], T=[1.0], batches=20, samples_per_batch=5000)
    return replace(cfg, **kw).validate()


DESK_BUDGETS = {"table1": (10, 1000), "table2": (10, 500)}


def desk_scale(cfg: RunConfig, which: Optional[str] = None) -> RunConfig:
    """Shrink the sampling budget for quick runs.

    The two table presets get fixed budgets; anything else is cut 20-fold
    (fewer samples per batch, at least two batches kept).
    """
    if which in DESK_BUDGETS:
        b, s = DESK_BUDGETS[which]
        return replace(cfg, batches=b, samples_per_batch=s)
    return replace(cfg, batches=max(2, cfg.batches // 2),
                   samples_per_batch=max(1, cfg.samples_per_batch // 10))
