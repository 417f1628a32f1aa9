"""Mechanism identifiers and a uniform calling convention.

A *mechanism* in this package is any callable taking a :class:`GameInstance`
with a realized outcome and returning a :class:`PayoffDistribution`.
:class:`Mechanism` bundles that with a sampler for the experiment harness.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import randomized as rm
from .deterministic import nawm, wswm
from .errors import ConfigError
from .scoring import BRIER, ConfusionMatrix, ErrorRates, ScoringRule
from .types import GameInstance, PayoffDistribution

TAGS = ("WSWM", "NAWM", "LWS", "LWS-mixed", "SWM", "SWME", "RP-SWME", "S-NAWM", "noisy-SWME")
DETERMINISTIC = ("WSWM", "NAWM")


@dataclass(frozen=True)
class MechanismId:
    """Which mechanism to run plus its parameters.

    ``lam`` weights the lottery in ``LWS-mixed``; ``noise`` holds fixed flip
    rates for ``SWM`` / ``S-NAWM`` (``None`` lets ``S-NAWM`` pick its own);
    ``outcome_noise`` holds the known noise of the observed outcome for
    ``noisy-SWME``; ``weighted`` selects the wager-weighted others' average
    in the NAWM family.
    """

    tag: str
    lam: float | None = None
    noise: ErrorRates | ConfusionMatrix | None = None
    outcome_noise: ErrorRates | None = None
    weighted: bool = True

    def __post_init__(self):
        if self.tag not in TAGS:
            raise ConfigError(f"unknown mechanism {self.tag!r}; choose from {', '.join(TAGS)}")
        if self.tag == "LWS-mixed":
            if self.lam is None or not 0.0 <= self.lam <= 1.0:
                raise ConfigError("LWS-mixed needs a mixture weight in [0, 1]")
        if self.tag == "SWM" and self.noise is None:
            raise ConfigError("SWM needs explicit error rates")
        if self.tag == "noisy-SWME" and self.outcome_noise is None:
            object.__setattr__(self, "outcome_noise", ErrorRates(0.0, 0.0))

    @property
    def label(self) -> str:
        if self.tag == "LWS-mixed":
            return f"LWS-mixed({self.lam:g})"
        if self.tag == "SWM":
            n = self.noise
            return f"SWM({n.e0:g},{n.e1:g})" if isinstance(n, ErrorRates) else "SWM(C)"
        if self.tag == "noisy-SWME":
            n = self.outcome_noise
            return f"noisy-SWME({n.e0:g},{n.e1:g})"
        return self.tag

    @property
    def deterministic(self) -> bool:
        return self.tag in DETERMINISTIC


_PARAM = re.compile(r"^([A-Za-z-]+?)(?:\(([^)]*)\))?$")


def parse_mechanism(text: str) -> MechanismId:
    """Parse ``"RP-SWME"``, ``"LWS-mixed(0.5)"``, ``"SWM(0.2,0.3)"``, ``"noisy-SWME(0.1,0.1)"``."""
    m = _PARAM.match(text.strip())
    if not m:
        raise ConfigError(f"cannot parse mechanism {text!r}")
    name, args = m.group(1), m.group(2)
    canon = {t.lower(): t for t in TAGS}
    tag = canon.get(name.lower())
    if tag is None:
        raise ConfigError(f"unknown mechanism {name!r}; choose from {', '.join(TAGS)}")
    vals = [float(v) for v in args.split(",")] if args else []
    try:
        if tag == "LWS-mixed":
            return MechanismId(tag, lam=vals[0] if vals else None)
        if tag in ("SWM", "S-NAWM") and vals:
            rates = ErrorRates(vals[0], vals[1] if len(vals) > 1 else vals[0])
            return MechanismId(tag, noise=rates)
        if tag == "noisy-SWME":
            rates = ErrorRates(vals[0], vals[1] if len(vals) > 1 else vals[0]) if vals else None
            return MechanismId(tag, outcome_noise=rates)
    except (IndexError, ValueError) as exc:
        raise ConfigError(f"bad parameters for {text!r}: {exc}") from exc
    if vals:
        raise ConfigError(f"{tag} takes no parameters")
    return MechanismId(tag)


def distribution(mid: MechanismId, g: GameInstance, rule: ScoringRule = BRIER) -> PayoffDistribution:
    """Exact payoff distribution of ``mid`` at ``g``'s realized outcome."""
    t = mid.tag
    if t == "WSWM":
        return PayoffDistribution.point(wswm(g, rule), g.wagers)
    if t == "NAWM":
        return PayoffDistribution.point(nawm(g, rule, mid.weighted), g.wagers)
    if t == "LWS":
        return rm.lws(g, rule)
    if t == "LWS-mixed":
        return rm.lws_mixed(g, mid.lam, rule)
    if t == "SWM":
        return rm.swm_distribution(g, rule, mid.noise)
    if t == "SWME":
        return rm.swme_distribution(g, rule)
    if t == "RP-SWME":
        return rm.rp_swme_distribution(g, rule)
    if t == "S-NAWM":
        return rm.surrogate_nawm_distribution(g, rule, mid.noise, weighted=mid.weighted)
    return rm.noisy_swme_distribution(g, mid.outcome_noise, rule)


def sample(mid: MechanismId, g: GameInstance, rng: np.random.Generator, rule: ScoringRule = BRIER) -> np.ndarray:
    """One realized payoff vector of ``mid`` at ``g``'s realized outcome."""
    t = mid.tag
    if t == "WSWM":
        return wswm(g, rule)
    if t == "NAWM":
        return nawm(g, rule, mid.weighted)
    if t == "LWS":
        return rm.sample_lws(g, rng, rule)
    if t == "LWS-mixed":
        return rm.sample_lws_mixed(g, mid.lam, rng, rule)
    if t == "SWM":
        return rm.sample_swm(g, rng, rule, mid.noise)
    if t == "SWME":
        return rm.sample_swme(g, rng, rule)
    if t == "RP-SWME":
        return rm.sample_rp_swme(g, rng, rule)
    if t == "S-NAWM":
        return rm.sample_surrogate_nawm(g, rng, rule, mid.noise, weighted=mid.weighted)
    return rm.sample_noisy_swme(g, mid.outcome_noise, rng, rule)


@dataclass(frozen=True)
class Mechanism:
    """Callable view of a mechanism: ``mech(g) -> PayoffDistribution``."""

    name: str
    dist: Callable[[GameInstance], PayoffDistribution]
    sampler: Callable[[GameInstance, np.random.Generator], np.ndarray] | None = field(default=None, compare=False)

    def __call__(self, g: GameInstance) -> PayoffDistribution:
        return self.dist(g)

    def sample(self, g: GameInstance, rng: np.random.Generator) -> np.ndarray:
        if self.sampler is None:
            d = self.dist(g)
            k = int(np.searchsorted(np.cumsum(d.probs), rng.random(), side="right"))
            return np.array(d.payoffs[min(k, len(d) - 1)])
        return self.sampler(g, rng)


def mechanism(which: MechanismId | str, rule: ScoringRule = BRIER) -> Mechanism:
    mid = parse_mechanism(which) if isinstance(which, str) else which
    return Mechanism(
        mid.label,
        lambda g: distribution(mid, g, rule),
        lambda g, rng: sample(mid, g, rng, rule),
    )
