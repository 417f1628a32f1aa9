"""Synthetic games: prediction models and wager models of the simulation setup."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logit
from scipy.stats import norm

from .errors import ConfigError
from .types import GameInstance

Q_CLIP = 1e-9


@dataclass(frozen=True)
class PredictionModel:
    """``uniform``, ``logit_normal`` (with ``alpha``, ``sigma2``) or ``synthetic``."""

    tag: str = "uniform"
    alpha: float = 2.0
    sigma2: float = 1.0

    def __post_init__(self):
        if self.tag not in ("uniform", "logit_normal", "synthetic"):
            raise ConfigError(f"unknown prediction model {self.tag!r}")
        if self.alpha <= 0:
            raise ConfigError("alpha must be positive")
        if self.sigma2 < 0:
            raise ConfigError("sigma2 must be non-negative")


@dataclass(frozen=True)
class WagerModel:
    """``uniform`` (every wager 1) or ``pareto`` with ``shape`` and ``scale``."""

    tag: str = "uniform"
    shape: float = 1.16
    scale: float = 1.0

    def __post_init__(self):
        if self.tag not in ("uniform", "pareto"):
            raise ConfigError(f"unknown wager model {self.tag!r}")
        if self.shape <= 0 or self.scale <= 0:
            raise ConfigError("pareto shape and scale must be positive")


def uniform_simplex(rng: np.random.Generator, size: int, M: int) -> np.ndarray:
    """``size`` points uniform on the probability simplex (normalized exponential spacings)."""
    e = rng.exponential(size=(size, M))
    return e / e.sum(axis=1, keepdims=True)


def gen_predictions(model: PredictionModel, N: int, M: int, rng: np.random.Generator, *, u=None):
    """Happening probabilities ``q`` (shape ``(M,)``) and reports ``(N, M)``.

    ``u`` overrides the standard normal draws of the synthetic model; it
    exists for tests.
    """
    if N < 1:
        raise ConfigError("need at least one agent")
    if M < 2:
        raise ConfigError("need at least two outcomes")
    if model.tag == "uniform":
        if M == 2:
            q1 = rng.random()
            p1 = rng.random(N)
            return np.array([1.0 - q1, q1]), np.column_stack([1.0 - p1, p1])
        q = uniform_simplex(rng, 1, M)[0]
        return q, uniform_simplex(rng, N, M)
    if M != 2:
        raise ConfigError(f"{model.tag} predictions are defined for binary events only")
    if model.tag == "logit_normal":
        q1 = float(np.clip(rng.random(), Q_CLIP, 1.0 - Q_CLIP))
        mean = logit(q1) / model.alpha
        p1 = expit(mean + np.sqrt(model.sigma2) * rng.standard_normal(N))
    else:
        u = rng.standard_normal(N) if u is None else np.asarray(u, dtype=float)
        q1 = float(norm.cdf(u.sum()))
        p1 = norm.cdf(u / np.sqrt(2 * N - 1))
    return np.array([1.0 - q1, q1]), np.column_stack([1.0 - p1, p1])


def gen_wagers(model: WagerModel, N: int, rng: np.random.Generator) -> np.ndarray:
    if model.tag == "uniform":
        return np.ones(N)
    # 1 - U is in (0, 1], which keeps the inverse CDF finite.
    return model.scale * (1.0 - rng.random(N)) ** (-1.0 / model.shape)


def gen_game(pred: PredictionModel, wager: WagerModel, N: int, M: int, rng: np.random.Generator) -> GameInstance:
    """One game with reports, wagers and happening probabilities (outcome unrealized)."""
    q, reports = gen_predictions(pred, N, M, rng)
    wagers = gen_wagers(wager, N, rng)
    return GameInstance(reports, wagers, None, q)


def parse_prediction_model(text: str) -> PredictionModel:
    """``uniform``, ``synthetic``, ``logit_normal`` or ``logit_normal(alpha,sigma2)``."""
    text = text.strip()
    if text.startswith("logit_normal(") and text.endswith(")"):
        try:
            alpha, sigma2 = (float(v) for v in text[len("logit_normal("):-1].split(","))
        except ValueError as exc:
            raise ConfigError(f"bad logit_normal parameters in {text!r}") from exc
        return PredictionModel("logit_normal", alpha, sigma2)
    return PredictionModel(text)


def parse_wager_model(text: str) -> WagerModel:
    """``uniform``, ``pareto`` or ``pareto(shape,scale)``."""
    text = text.strip()
    if text.startswith("pareto(") and text.endswith(")"):
        try:
            shape, scale = (float(v) for v in text[len("pareto("):-1].split(","))
        except ValueError as exc:
            raise ConfigError(f"bad pareto parameters in {text!r}") from exc
        return WagerModel("pareto", shape, scale)
    return WagerModel(text)
