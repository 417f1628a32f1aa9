"""Deterministic and randomized one-shot wagering mechanisms."""

from .deterministic import nawm, wswm
from .mechanisms import Mechanism, MechanismId, distribution, mechanism, parse_mechanism, sample
from .randomized import (
    compose_noise,
    enumerate_partitions,
    lottery_wrap,
    lws,
    lws_mixed,
    noisy_swme_distribution,
    rp_swme_distribution,
    scale_payoffs,
    select_error_rates,
    solve_agent_flip,
    surrogate_nawm_distribution,
    swm_distribution,
    swme_distribution,
)
from .scoring import (
    BRIER,
    SPHERICAL,
    ConfusionMatrix,
    ErrorRates,
    ScoringRule,
    brier,
    surrogate_score_binary,
    surrogate_score_multi,
    unbiasedness_oracle,
    uniform_confusion,
)
from .types import GameInstance, PayoffDistribution, Prediction, mix_distributions, payoff_distribution_stats

__version__ = "0.1.0"
