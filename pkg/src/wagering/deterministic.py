"""Deterministic baselines: weighted-score and no-arbitrage wagering."""

from __future__ import annotations

import numpy as np

from .errors import DimensionError
from .scoring import BRIER, ScoringRule
from .types import GameInstance


def weighted_score_payoffs(scores: np.ndarray, wagers: np.ndarray) -> np.ndarray:
    """Net payoffs ``w_i (s_i - sum_j w_j s_j / W)`` for one or many score rows.

    Algebraically identical to ``w_i W_{-i} / W * (s_i - avg_{j != i} s_j)``
    and budget balanced for any scores.  ``scores`` may be ``(N,)`` or
    ``(K, N)``.
    """
    total = wagers.sum()
    if total <= 0:
        return np.zeros_like(scores, dtype=float)
    mean = scores @ wagers / total
    return wagers * (scores - np.expand_dims(mean, -1))


def wswm(g: GameInstance, rule: ScoringRule = BRIER) -> np.ndarray:
    x = g.require_outcome()
    return weighted_score_payoffs(rule.scores(g.reports)[:, x], g.wagers)


def others_average(reports: np.ndarray, wagers: np.ndarray, i: int, weighted: bool = True) -> np.ndarray:
    """Average report of every agent except ``i`` (wager-weighted by default)."""
    mask = np.arange(reports.shape[0]) != i
    if weighted:
        w = wagers[mask]
        if w.sum() > 0:
            return w @ reports[mask] / w.sum()
    return reports[mask].mean(axis=0)


def others_average_all(reports: np.ndarray, wagers: np.ndarray, weighted: bool = True) -> np.ndarray:
    """Row ``i`` is :func:`others_average` for agent ``i``."""
    N = reports.shape[0]
    out = np.empty_like(reports, dtype=float)
    for i in range(N):
        out[i] = others_average(reports, wagers, i, weighted)
    return out


def anchor_terms(g: GameInstance, rule: ScoringRule = BRIER, weighted: bool = True, x=None) -> np.ndarray:
    """Per agent, the WSWM payoff it would get by reporting the others' average."""
    if g.n_agents < 2:
        raise DimensionError("no-arbitrage anchor needs at least two agents")
    x = g.require_outcome() if x is None else x
    w = g.wagers
    total = w.sum()
    if total <= 0:
        return np.zeros(g.n_agents)
    s = rule.scores(g.reports)[:, x]
    s_bar = rule.scores(others_average_all(g.reports, w, weighted))[:, x]
    # Only agent i's own score changes, so the weighted mean shifts by w_i (s_bar_i - s_i) / W.
    mean_i = (w @ s + w * (s_bar - s)) / total
    return w * (s_bar - mean_i)


def nawm(g: GameInstance, rule: ScoringRule = BRIER, weighted: bool = True) -> np.ndarray:
    """WSWM payoff minus the WSWM payoff of reporting the others' average."""
    return wswm(g, rule) - anchor_terms(g, rule, weighted)
