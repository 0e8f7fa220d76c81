"""Run configuration: defaults, INI file, ``DCSFCM_*`` environment variables and flags.

Later sources win: defaults < config file < environment < command line.
Every option has the same name in all three places, e.g. ``--c-min``,
``c_min = 3`` in the file and ``DCSFCM_C_MIN=3``.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import asdict, dataclass, fields
from typing import Any, Mapping

from .errors import ConfigError
from .features import DEFAULT_LAGS
from .fuzzy import DEFAULT_M, DEFAULT_MAX_ITER, DEFAULT_RESTARTS, DEFAULT_TOL
from .score_models import DcsSpec, Family

ENV_PREFIX = "DCSFCM_"


def _default_jobs() -> int:
    return max(1, len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count() or 1)


@dataclass(frozen=True)
class PipelineConfig:
    input: str | None = None
    family: str = "gaussian"
    gamma: float = 1.0
    lags: int = DEFAULT_LAGS
    m: float = DEFAULT_M
    c_min: int = 2
    c_max: int = 5
    c: int | None = None
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    restarts: int = DEFAULT_RESTARTS
    seed: int = 0
    out: str | None = None
    jobs: int = 0  # 0 means one worker per available core

    def validate(self) -> "PipelineConfig":
        if not self.input:
            raise ConfigError("an input CSV is required (--input)")
        if not self.out:
            raise ConfigError("an output directory is required (--out)")
        try:
            DcsSpec(self.family, self.gamma)
        except Exception as exc:
            raise ConfigError(str(exc)) from exc
        if self.lags < 1:
            raise ConfigError("lags must be at least 1")
        if not self.m > 1.0:
            raise ConfigError("m must exceed 1")
        if self.c is not None and self.c < 2:
            raise ConfigError("c must be at least 2")
        if not 2 <= self.c_min <= self.c_max:
            raise ConfigError("need 2 <= c_min <= c_max")
        if not self.tol > 0.0 or self.max_iter < 1 or self.restarts < 1:
            raise ConfigError("tol must be positive; max_iter and restarts at least 1")
        if self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        if self.jobs < 0:
            raise ConfigError("jobs must be non-negative")
        return self

    @property
    def spec(self) -> DcsSpec:
        return DcsSpec(self.family, self.gamma)

    @property
    def workers(self) -> int:
        return self.jobs or _default_jobs()

    def to_dict(self) -> dict:
        d = asdict(self)
        d["family"] = Family.parse(self.family).value
        return d


@dataclass(frozen=True)
class SimulationConfig:
    scenario: int = 2
    T: int | None = None  # None runs the full T grid
    lags: int | None = None  # None runs the full L grid
    M: int = 100
    seed: int = 0
    out: str | None = None
    jobs: int = 1
    m: float = DEFAULT_M
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    restarts: int = DEFAULT_RESTARTS

    def validate(self) -> "SimulationConfig":
        if self.scenario not in (1, 2):
            raise ConfigError(f"scenario must be 1 or 2 (got {self.scenario})")
        if self.T is not None and self.T < 30:
            raise ConfigError("T must be at least 30")
        if self.lags is not None and self.lags < 1:
            raise ConfigError("lags must be at least 1")
        if self.M < 1:
            raise ConfigError("M must be at least 1")
        if self.seed < 0 or self.jobs < 0:
            raise ConfigError("seed and jobs must be non-negative")
        if not self.out:
            raise ConfigError("an output directory is required (--out)")
        return self

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class DiagnoseConfig:
    input: str | None = None
    out: str | None = None

    def validate(self) -> "DiagnoseConfig":
        if not self.input:
            raise ConfigError("an input CSV is required (--input)")
        return self

    def to_dict(self) -> dict:
        return asdict(self)


SECTIONS = {"cluster": PipelineConfig, "simulate": SimulationConfig, "diagnose": DiagnoseConfig}


def _coerce(cls, name: str, raw: Any) -> Any:
    if raw is None:
        return None
    target = {f.name: f for f in fields(cls)}[name]
    kind = str(target.type)
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    if text.lower() in ("", "none") and "None" in kind:
        return None
    try:
        if kind.startswith("int"):
            return int(text)
        if kind.startswith("float"):
            return float(text)
    except ValueError:
        raise ConfigError(f"option {name!r}: cannot parse {raw!r}") from None
    return text


def read_config_file(path: str | os.PathLike, section: str) -> dict:
    parser = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file {path}: {exc}") from exc
    if not parser.has_section(section):
        return {}
    return {k.replace("-", "_"): v for k, v in parser.items(section)}


def env_options(cls, environ: Mapping[str, str]) -> dict:
    out = {}
    for f in fields(cls):
        key = ENV_PREFIX + f.name.upper()
        if key in environ:
            out[f.name] = environ[key]
    return out


def resolve(section: str, cli: Mapping[str, Any], config_path: str | None = None, environ: Mapping[str, str] | None = None):
    """Merge all sources for one subcommand and return a validated config."""
    cls = SECTIONS[section]
    names = {f.name for f in fields(cls)}
    merged: dict[str, Any] = {}
    layers = []
    if config_path:
        layers.append(read_config_file(config_path, section))
    layers.append(env_options(cls, os.environ if environ is None else environ))
    layers.append({k: v for k, v in cli.items() if v is not None})
    for layer in layers:
        for key, value in layer.items():
            if key not in names:
                raise ConfigError(f"unknown option {key!r} for {section}")
            merged[key] = _coerce(cls, key, value)
    try:
        return cls(**merged).validate()
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
