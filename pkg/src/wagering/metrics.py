"""Efficiency and randomness metrics: individual risk, money exchange, accuracy bins."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DimensionError, WagerViolationError
from .types import TOL, GameInstance, PayoffDistribution

MechanismFn = Callable[[GameInstance], PayoffDistribution]

# Normalized payoffs above this count as "not losing"; absorbs float noise
# around exact zeros.
NOT_LOSING_TOL = 1e-12


@dataclass(frozen=True)
class MetricsRecord:
    """Aggregated metrics for one mechanism at one population size."""

    mechanism: str
    n_agents: int
    pred_model: str
    wager_model: str
    avg_risk: float
    avg_exchange_rate: float
    mode: str = "exact"
    bins: tuple = field(default=(), compare=False)

    def __post_init__(self):
        for v in (self.avg_risk, self.avg_exchange_rate):
            if not -TOL <= v <= 1 + TOL:
                raise ValueError(f"metric {v} outside [0, 1]")


def risk_from_payoffs(payoffs: np.ndarray, wagers: np.ndarray) -> np.ndarray:
    """Worst loss as a fraction of wager over the rows of ``payoffs``, clipped to [0, 1]."""
    payoffs = np.atleast_2d(payoffs)
    wagers = np.asarray(wagers, dtype=float)
    worst = -payoffs.min(axis=0)
    ratio = np.divide(worst, wagers, out=np.zeros_like(worst), where=wagers > 0)
    return np.clip(ratio, 0.0, 1.0)


def individual_risk(mechanism: MechanismFn, g: GameInstance) -> np.ndarray:
    """Per-agent share of wager lost in the worst case over outcomes and mechanism randomness."""
    rows = [mechanism(g.with_outcome(x)).payoffs for x in range(g.n_outcomes)]
    return risk_from_payoffs(np.vstack(rows), g.wagers)


def money_exchanged(payoffs, balanced: bool = True) -> np.ndarray:
    """Total positive payoff per realization.

    ``payoffs`` is ``(N,)`` or ``(K, N)``.  With ``balanced`` the budget
    identity (gains equal losses) is asserted for every row.
    """
    payoffs = np.atleast_2d(np.asarray(payoffs, dtype=float))
    gains = np.clip(payoffs, 0.0, None).sum(axis=1)
    if balanced:
        losses = np.clip(-payoffs, 0.0, None).sum(axis=1)
        gap = np.abs(gains - losses)
        if np.any(gap > TOL):
            k = int(np.argmax(gap))
            raise WagerViolationError(f"realization {k} is not budget balanced (gap {gap[k]:.3g})")
    return gains


def exchange_rate(payoffs, wagers, balanced: bool = True) -> np.ndarray | float:
    """Money exchanged divided by total wager, per realization."""
    total = float(np.sum(wagers))
    if total <= 0:
        raise DimensionError("exchange rate needs a positive total wager")
    out = money_exchanged(payoffs, balanced) / total
    return float(out[0]) if np.ndim(payoffs) == 1 else out


def distribution_exchange_rate(d: PayoffDistribution, balanced: bool = True) -> float:
    """Expected exchange rate over the support of ``d``."""
    rates = exchange_rate(d.payoffs, d.wagers, balanced)
    return math.fsum(np.atleast_1d(rates) * d.probs)


def money_exchange_rate(mechanism: MechanismFn, g: GameInstance, balanced: bool = True) -> float:
    """Expected exchange rate over outcomes (weighted by ``g.q``) and mechanism randomness."""
    if g.q is None:
        raise DimensionError("expected exchange rate needs happening probabilities q")
    terms = [
        g.q[x] * distribution_exchange_rate(mechanism(g.with_outcome(x)), balanced)
        for x in range(g.n_outcomes)
        if g.q[x] > 0
    ]
    return math.fsum(terms)


@dataclass(frozen=True)
class AccuracyBins:
    """Per accuracy bin: sample size, sample std of payoff/wager, fraction not losing."""

    edges: np.ndarray
    count: np.ndarray
    std: np.ndarray
    frac_not_losing: np.ndarray

    @property
    def populated(self) -> np.ndarray:
        return self.count > 0


def accuracy(p1, outcome=None, q1=None) -> np.ndarray:
    """``1 - |x - p|`` against the outcome, or ``1 - |q - p|`` against the happening probability."""
    p1 = np.asarray(p1, dtype=float)
    if (outcome is None) == (q1 is None):
        raise ValueError("give exactly one of outcome or q1")
    ref = np.asarray(outcome if q1 is None else q1, dtype=float)
    if ref.ndim == 1 and p1.ndim == 2:
        ref = ref[:, None]
    return 1.0 - np.abs(ref - p1)


def accuracy_bins(acc, normalized, bins: int = 10) -> AccuracyBins:
    """Group agents into equal-width accuracy bins on [0, 1].

    ``acc`` and ``normalized`` (realized payoff divided by own wager) have
    matching shapes; NaN entries (zero wagers) are ignored.  Bins with fewer
    than two members report a NaN standard deviation; empty bins NaN
    everywhere.
    """
    acc = np.asarray(acc, dtype=float).ravel()
    z = np.asarray(normalized, dtype=float).ravel()
    keep = np.isfinite(z) & np.isfinite(acc)
    acc, z = acc[keep], z[keep]
    idx = np.minimum((acc * bins).astype(np.intp), bins - 1)
    count = np.bincount(idx, minlength=bins)
    std = np.full(bins, np.nan)
    frac = np.full(bins, np.nan)
    for b in np.flatnonzero(count):
        vals = z[idx == b]
        if vals.shape[0] >= 2:
            std[b] = np.std(vals, ddof=1)
        frac[b] = np.mean(vals >= -NOT_LOSING_TOL)
    return AccuracyBins(np.linspace(0.0, 1.0, bins + 1), count, std, frac)


def normalize_payoffs(payoffs, wagers) -> np.ndarray:
    """Payoff over own wager; NaN where the wager is zero."""
    payoffs = np.asarray(payoffs, dtype=float)
    wagers = np.broadcast_to(np.asarray(wagers, dtype=float), payoffs.shape)
    return np.divide(payoffs, wagers, out=np.full(payoffs.shape, np.nan), where=wagers > 0)
