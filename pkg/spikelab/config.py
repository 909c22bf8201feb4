"""
Config - Run Configuration for the Command Line

A run is described by a plain-text manifest of `key = value` lines (read
with python-dotenv) plus command-line overrides; flags win over the file.
Everything lands in a validated pydantic RunConfig.

Value syntax:
- grids: `0.1, 0.2, 0.5` or `start:stop:count` (linear)
- priors: `bernoulli:<rho>`, `community:<rho>`, `rademacher`, `dirac:<a>`,
  `atoms:<value>@<prob>,<value>@<prob>,...`
- intervals: `lo, hi`
"""

import logging
import os
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
from dotenv import dotenv_values, load_dotenv
from pydantic import BaseModel, ConfigDict, field_validator, model_validator
from thefuzz import process as fuzzy_process

from .errors import ConfigError
from .prior import DEFAULT_BIAS, DiscretePrior, bernoulli, biased, community, dirac, make_prior, rademacher

logger = logging.getLogger(__name__)

THREADS_ENV = "SPIKELAB_THREADS"
SEED_LIMIT = 2**64


def parse_grid(text, name: str = "grid") -> List[float]:
    """
    Parse a grid written as a comma list or as start:stop:count.

    Raises:
        ConfigError: malformed entry (message names the field)
    """
    if isinstance(text, (int, float)):
        return [float(text)]
    if isinstance(text, (list, tuple, np.ndarray)):
        return [float(x) for x in text]
    text = str(text).strip()
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise ValueError("expected start:stop:count")
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
            if count < 1:
                raise ValueError("count must be positive")
            return [float(x) for x in np.linspace(start, stop, count)]
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError as exc:
        raise ConfigError(f"{name}: cannot parse grid '{text}' ({exc})") from exc


def parse_interval(text, name: str = "interval") -> Optional[Tuple[float, float]]:
    if text is None or text == "":
        return None
    values = parse_grid(text, name)
    if len(values) != 2 or not values[0] < values[1]:
        raise ConfigError(f"{name}: expected 'lo, hi' with lo < hi, got '{text}'")
    return values[0], values[1]


def parse_prior(text: str, bias: float = DEFAULT_BIAS) -> DiscretePrior:
    """
    Build a prior from its config spelling; zero-mean priors are biased by
    `bias` (0 disables it).

    Raises:
        ConfigError: unknown family or bad parameter
    """
    text = str(text).strip()
    family, _, argument = text.partition(":")
    family = family.strip().lower()
    try:
        if family == "bernoulli":
            prior = bernoulli(float(argument))
        elif family == "community":
            prior = community(float(argument))
        elif family == "rademacher":
            prior = rademacher()
        elif family == "dirac":
            prior = dirac(float(argument))
        elif family == "atoms":
            atoms = []
            for item in argument.split(","):
                value, _, prob = item.partition("@")
                atoms.append((float(value), float(prob)))
            prior = make_prior(atoms)
        else:
            raise ConfigError(
                f"prior: unknown family '{family}' "
                "(expected bernoulli, community, rademacher, dirac or atoms)"
            )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"prior: cannot build '{text}' ({exc})") from exc

    if bias > 0 and prior.size >= 2 and abs(prior.mean) <= 1e-12:
        try:
            prior = biased(prior, bias)
        except ValueError as exc:
            raise ConfigError(f"bias: {exc}") from exc
    return prior


def family_prior(family: str, rho: float, bias: float = DEFAULT_BIAS) -> DiscretePrior:
    """Member ρ of a ρ-parametric family (phase diagrams)."""
    return parse_prior(f"{family}:{rho}", bias)


class RunConfig(BaseModel):
    """Validated configuration of one CLI run."""

    model_config = ConfigDict(extra="forbid")

    prior: str = "bernoulli:0.02"
    family: Literal["bernoulli", "community"] = "bernoulli"
    rho: List[float] = [0.02]
    delta: List[float] = [0.001]
    bias: float = DEFAULT_BIAS
    n: int = 1000
    L: int = 32
    w: int = 4
    seeds: int = 1
    seed: int = 0
    tmax: Optional[int] = None
    tol: Optional[float] = None
    out: Optional[str] = None
    format: Literal["csv", "json"] = "csv"
    se_driven: bool = False
    amp_interval: Optional[Tuple[float, float]] = None
    rs_interval: Optional[Tuple[float, float]] = None
    samples: int = 2000
    sizes: List[int] = [4, 6, 8, 10]
    h: float = 0.05
    points: int = 201
    workers: Optional[int] = None

    @field_validator("rho", "delta", mode="before")
    @classmethod
    def _parse_grid(cls, value, info):
        return parse_grid(value, info.field_name)

    @field_validator("sizes", mode="before")
    @classmethod
    def _parse_sizes(cls, value, info):
        return [int(x) for x in parse_grid(value, info.field_name)]

    @field_validator("amp_interval", "rs_interval", mode="before")
    @classmethod
    def _parse_interval(cls, value, info):
        return parse_interval(value, info.field_name)

    @field_validator("rho", "delta", "sizes")
    @classmethod
    def _check_grid(cls, value, info):
        if not value:
            raise ValueError(f"{info.field_name} grid is empty")
        if not all(np.isfinite(value)):
            raise ValueError(f"{info.field_name} grid has non-finite entries")
        if any(b < a for a, b in zip(value, value[1:])):
            raise ValueError(f"{info.field_name} grid must be sorted ascending")
        return value

    @field_validator("delta")
    @classmethod
    def _check_delta(cls, value):
        if any(d <= 0 for d in value):
            raise ValueError("delta entries must be positive")
        return value

    @field_validator("seed")
    @classmethod
    def _check_seed(cls, value):
        if not 0 <= value < SEED_LIMIT:
            raise ValueError("seed must be an unsigned 64-bit integer")
        return value

    @field_validator("n")
    @classmethod
    def _check_n(cls, value):
        if value < 2:
            raise ValueError("n must be at least 2")
        return value

    @field_validator("L", "seeds", "tmax", "samples", "points")
    @classmethod
    def _check_positive_int(cls, value, info):
        if value is not None and value < 1:
            raise ValueError(f"{info.field_name} must be positive")
        return value

    @field_validator("tol", "h")
    @classmethod
    def _check_positive(cls, value, info):
        if value is not None and not value > 0:
            raise ValueError(f"{info.field_name} must be positive")
        return value

    @field_validator("bias")
    @classmethod
    def _check_bias(cls, value):
        if not 0 <= value < 0.5:
            raise ValueError("bias must be in [0, 0.5)")
        return value

    @model_validator(mode="after")
    def _check_window(self):
        if not 0 <= self.w <= self.L / 2:
            raise ValueError(f"w must satisfy 0 ≤ w ≤ L/2 (w={self.w}, L={self.L})")
        return self

    def build_prior(self) -> DiscretePrior:
        return parse_prior(self.prior, self.bias)


def _suggest(key: str) -> str:
    matches = fuzzy_process.extractBests(key, list(RunConfig.model_fields), score_cutoff=60, limit=1)
    return f" (did you mean '{matches[0][0]}'?)" if matches else ""


def _normalize_key(key: str) -> str:
    key = key.strip().replace("-", "_")
    return key if key == "L" else key.lower()


def load_config_file(path: str) -> Dict[str, str]:
    """
    Read a `key = value` manifest.

    Raises:
        ConfigError: missing file or unknown key (with the closest valid key)
    """
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    raw = dotenv_values(path)
    values = {}
    with open(path, encoding="utf-8") as handle:
        lines = {line.split("=", 1)[0].strip(): number for number, line in enumerate(handle, 1) if "=" in line}
    for key, value in raw.items():
        name = _normalize_key(key)
        if name not in RunConfig.model_fields:
            raise ConfigError(f"{path}:{lines.get(key, '?')}: unknown key '{key}'{_suggest(name)}")
        values[name] = value
    return values


def build_config(path: Optional[str] = None, overrides: Optional[Dict[str, object]] = None) -> RunConfig:
    """
    Merge file values and flag overrides (flags win) into a RunConfig.

    Raises:
        ConfigError: bad file
        pydantic.ValidationError: invalid field values
    """
    values: Dict[str, object] = load_config_file(path) if path else {}
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    return RunConfig(**values)


def worker_count(requested: Optional[int] = None) -> int:
    """
    Worker pool size: the request (default os.cpu_count()) capped by
    SPIKELAB_THREADS, which may also come from a .env file.
    """
    load_dotenv()
    cap = os.cpu_count() or 1
    raw = os.getenv(THREADS_ENV)
    if raw:
        try:
            cap = int(raw)
            if cap < 1:
                raise ValueError
        except ValueError:
            logger.warning("%s=%r is not a positive integer, using 1 worker", THREADS_ENV, raw)
            cap = 1
    return max(1, min(requested or cap, cap))
