"""JSON experiment configuration parsing with field-level diagnostics.

Schema (all sections except the simulation core are optional):

    {
      "n": 1000, "lambda": 0.1,
      "job_size": {"kind": "mixed_poisson_pareto", "alpha": 3, "beta": 0.6667},
      "truncation": {"kind": "min_cap", "m": 1000},
      "service": {"kind": "uniform", "a": 0, "b": 1},
      "horizon_jobs": 30000, "warmup_jobs": 0, "seed": 1,
      "discipline": "all-crn",
      "limit": {"pool_size": 100000, "generations": 60, "depth": 8},
      "asymptotics": {"h_samples": 1000000, "conditioned": false}
    }

job_size kinds: deterministic {k}, mixed_poisson_pareto {alpha, beta},
empirical {pmf: [[k, p], ...]}.  truncation kinds: min_cap {m}, cond_cap {m},
none (or omit).  service kinds: uniform {a, b}, exponential {rate},
deterministic {c}.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from .dists import (
    ConditionalOnCap, DeterministicService, DeterministicSize, EmpiricalSize,
    ExponentialService, JobSizeDistribution, MinWithCap, MixedPoissonPareto,
    ServiceMarginal, ServiceModel, Truncation, UniformService,
)
from .engine import SimConfig
from .errors import ConfigError
from .limit import LimitParams

__all__ = [
    "ExperimentConfig", "LimitSettings", "AsymptoticsSettings",
    "load_experiment", "parse_experiment", "config_digest",
    "parse_job_size", "parse_truncation", "parse_service",
]

DISCIPLINE_CHOICES = ("syncb", "splitmerge", "mgn", "all-crn")


@dataclass(frozen=True)
class LimitSettings:
    pool_size: int = 100_000
    generations: Optional[int] = None   # None: derived from the stability margin
    depth: int = 8


@dataclass(frozen=True)
class AsymptoticsSettings:
    h_samples: int = 1_000_000
    conditioned: bool = False


@dataclass(frozen=True)
class ExperimentConfig:
    sim: SimConfig
    discipline: str = "all-crn"
    limit: LimitSettings = field(default_factory=LimitSettings)
    asymptotics: AsymptoticsSettings = field(default_factory=AsymptoticsSettings)
    raw: dict = field(default_factory=dict, repr=False)

    def limit_params(self) -> LimitParams:
        return LimitParams(self.sim.job_size, self.sim.service, self.sim.lam)


def _need(obj: dict, key: str, where: str) -> Any:
    if key not in obj:
        raise ConfigError(f"{where}: missing required field '{key}'")
    return obj[key]


def _number(obj: dict, key: str, where: str, default=None):
    if key not in obj:
        if default is None:
            raise ConfigError(f"{where}: missing required field '{key}'")
        return default
    v = obj[key]
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise ConfigError(f"{where}.{key}: expected a number, got {v!r}")
    return v


def parse_job_size(obj: Any) -> JobSizeDistribution:
    if not isinstance(obj, dict):
        raise ConfigError(f"job_size: expected an object, got {obj!r}")
    kind = _need(obj, "kind", "job_size")
    try:
        if kind == "deterministic":
            return DeterministicSize(int(_number(obj, "k", "job_size")))
        if kind == "mixed_poisson_pareto":
            return MixedPoissonPareto(float(_number(obj, "alpha", "job_size")),
                                      float(_number(obj, "beta", "job_size")))
        if kind == "empirical":
            pmf = _need(obj, "pmf", "job_size")
            return EmpiricalSize(tuple((int(k), float(p)) for k, p in pmf))
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"job_size: {exc}") from exc
    raise ConfigError(f"job_size.kind: unknown kind {kind!r}")


def parse_truncation(obj: Any) -> Truncation:
    if obj is None:
        return None
    if not isinstance(obj, dict):
        raise ConfigError(f"truncation: expected an object or null, got {obj!r}")
    kind = obj.get("kind", "none")
    try:
        if kind == "none":
            return None
        if kind == "min_cap":
            return MinWithCap(int(_number(obj, "m", "truncation")))
        if kind == "cond_cap":
            return ConditionalOnCap(int(_number(obj, "m", "truncation")))
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"truncation: {exc}") from exc
    raise ConfigError(f"truncation.kind: unknown kind {kind!r}")


def parse_service(obj: Any) -> ServiceMarginal:
    if not isinstance(obj, dict):
        raise ConfigError(f"service: expected an object, got {obj!r}")
    kind = _need(obj, "kind", "service")
    try:
        if kind == "uniform":
            return UniformService(float(_number(obj, "a", "service", 0.0)),
                                  float(_number(obj, "b", "service")))
        if kind == "exponential":
            return ExponentialService(float(_number(obj, "rate", "service")))
        if kind == "deterministic":
            return DeterministicService(float(_number(obj, "c", "service")))
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"service: {exc}") from exc
    raise ConfigError(f"service.kind: unknown kind {kind!r}")


def parse_experiment(data: Any) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    sim = SimConfig(
        n=int(_number(data, "n", "config")),
        lam=float(_number(data, "lambda", "config")),
        job_size=parse_job_size(_need(data, "job_size", "config")),
        truncation=parse_truncation(data.get("truncation")),
        service=ServiceModel(parse_service(_need(data, "service", "config"))),
        horizon_jobs=int(_number(data, "horizon_jobs", "config", 30_000)),
        warmup_jobs=int(_number(data, "warmup_jobs", "config", 0)),
        seed=int(_number(data, "seed", "config", 0)),
    )
    discipline = data.get("discipline", "all-crn")
    if discipline not in DISCIPLINE_CHOICES:
        raise ConfigError(
            f"discipline: {discipline!r} not in {DISCIPLINE_CHOICES}")
    lim = data.get("limit", {})
    if not isinstance(lim, dict):
        raise ConfigError("limit: expected an object")
    gens = lim.get("generations")
    limit = LimitSettings(
        pool_size=int(_number(lim, "pool_size", "limit", 100_000)),
        generations=None if gens is None else int(gens),
        depth=int(_number(lim, "depth", "limit", 8)),
    )
    asy = data.get("asymptotics", {})
    if not isinstance(asy, dict):
        raise ConfigError("asymptotics: expected an object")
    asymptotics = AsymptoticsSettings(
        h_samples=int(_number(asy, "h_samples", "asymptotics", 1_000_000)),
        conditioned=bool(asy.get("conditioned", False)),
    )
    if limit.pool_size < 1:
        raise ConfigError("limit.pool_size: must be >= 1")
    if limit.depth < 0:
        raise ConfigError("limit.depth: must be >= 0")
    if asymptotics.h_samples < 1:
        raise ConfigError("asymptotics.h_samples: must be >= 1")
    return ExperimentConfig(sim=sim, discipline=discipline, limit=limit,
                            asymptotics=asymptotics, raw=data)


def load_experiment(path: str | Path) -> ExperimentConfig:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config parse error in {p}: {exc}") from exc
    return parse_experiment(data)


def config_digest(data: dict) -> str:
    """Stable content hash of a configuration dictionary."""
    canon = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]
