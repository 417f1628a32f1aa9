"""Experiment configuration: flat ``key=value`` files plus command-line overrides."""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

from .errors import ConfigError
from .generators import PredictionModel, WagerModel, parse_prediction_model, parse_wager_model
from .mechanisms import MechanismId, parse_mechanism
from .scoring import RULES, ScoringRule
from .verifier import STUBS


@dataclass(frozen=True)
class ExperimentConfig:
    """Settings shared by every subcommand; see :data:`KEYS` for the file format."""

    mechanisms: tuple[str, ...] = ("WSWM", "NAWM", "LWS", "RP-SWME")
    n_min: int = 2
    n_max: int = 50
    n_step: int = 2
    instances: int = 1000
    pred_model: str = "uniform"
    wager_model: str = "uniform"
    m: int = 2
    seed: int = 0
    out: str | None = None
    rule: str = "brier"
    sample_cap: int = 1000
    threads: int = 1
    bins: int = 10
    accuracy: str = "outcome"
    weighted: bool = True

    def __post_init__(self):
        if self.n_min < 2:
            raise ConfigError("n_min must be at least 2: a wagering game needs two agents")
        if self.n_max < self.n_min or self.n_step < 1:
            raise ConfigError("empty agent range")
        if self.instances < 1:
            raise ConfigError("instances must be positive")
        if self.m < 2:
            raise ConfigError("m must be at least 2")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.rule not in RULES:
            raise ConfigError(f"unknown scoring rule {self.rule!r}")
        if self.sample_cap < 1 or self.threads < 1 or self.bins < 1:
            raise ConfigError("sample_cap, threads and bins must be positive")
        if self.accuracy not in ("outcome", "q"):
            raise ConfigError("accuracy must be 'outcome' or 'q'")
        if not self.mechanisms:
            raise ConfigError("no mechanisms selected")
        # Parse eagerly so that bad names fail before any work starts.
        for m in self.mechanisms:
            if m not in STUBS:
                parse_mechanism(m)
        self.prediction_model
        self.wager

    @property
    def n_values(self) -> list[int]:
        return list(range(self.n_min, self.n_max + 1, self.n_step))

    @property
    def mechanism_ids(self) -> list[MechanismId]:
        stubs = [m for m in self.mechanisms if m in STUBS]
        if stubs:
            raise ConfigError(f"{', '.join(stubs)} can only be used with verify")
        return [replace(parse_mechanism(m), weighted=self.weighted) for m in self.mechanisms]

    @property
    def prediction_model(self) -> PredictionModel:
        return parse_prediction_model(self.pred_model)

    @property
    def wager(self) -> WagerModel:
        return parse_wager_model(self.wager_model)

    @property
    def scoring_rule(self) -> ScoringRule:
        return RULES[self.rule]


KEYS = {f.name: f.type for f in fields(ExperimentConfig)}


def _split_mechanisms(value: str) -> tuple[str, ...]:
    # Commas separate mechanisms except inside parentheses, e.g. "SWM(0.1,0.2),LWS".
    out, depth, cur = [], 0, ""
    for ch in value:
        if ch == "," and depth == 0:
            out.append(cur.strip())
            cur = ""
            continue
        depth += ch == "("
        depth -= ch == ")"
        cur += ch
    if cur.strip():
        out.append(cur.strip())
    return tuple(m for m in out if m)


def coerce(key: str, value: str):
    if key not in KEYS:
        raise ConfigError(f"unknown config key {key!r}")
    try:
        if key == "mechanisms":
            return _split_mechanisms(value)
        if key == "weighted":
            v = value.strip().lower()
            if v not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(value)
            return v in ("true", "1", "yes")
        if key in ("n_min", "n_max", "n_step", "instances", "m", "seed", "sample_cap", "threads", "bins"):
            return int(value)
        return value.strip()
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {value!r}") from exc


def parse_config_text(text: str) -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key] = coerce(key, value)
    return values


def load_config(path: str | Path | None = None, defaults: dict | None = None, **overrides) -> ExperimentConfig:
    """Defaults, then the file at ``path``, then non-``None`` ``overrides``."""
    values = dict(defaults or {})
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        values.update(parse_config_text(text))
    values.update({k: v for k, v in overrides.items() if v is not None})
    unknown = set(values) - set(KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return ExperimentConfig(**values)
