"""Core value types: predictions, game instances and payoff distributions."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, InvalidPredictionError, WagerViolationError

TOL = 1e-9
# Payoff vectors closer than this (after rounding) are merged into one support point.
_COALESCE_DECIMALS = 12


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _check_simplex(p: np.ndarray, what: str = "prediction") -> None:
    if p.ndim != 1 or p.shape[0] < 2:
        raise InvalidPredictionError(f"{what} needs at least two outcomes, got shape {p.shape}")
    if np.any(p < -TOL) or np.any(p > 1 + TOL) or not np.all(np.isfinite(p)):
        raise InvalidPredictionError(f"{what} entries must lie in [0, 1]: {p}")
    if abs(p.sum() - 1.0) > TOL:
        raise InvalidPredictionError(f"{what} must sum to 1 (sum={p.sum()!r})")


@dataclass(frozen=True)
class Prediction:
    """A probability vector over ``M >= 2`` outcomes."""

    probs: np.ndarray

    def __post_init__(self):
        p = _frozen(self.probs)
        _check_simplex(p)
        object.__setattr__(self, "probs", p)

    @classmethod
    def binary(cls, p1: float) -> "Prediction":
        """Binary prediction from the reported probability of outcome 1."""
        return cls(np.array([1.0 - p1, p1]))

    @property
    def n_outcomes(self) -> int:
        return self.probs.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Prediction):
            return NotImplemented
        return self.probs.shape == other.probs.shape and np.allclose(
            self.probs, other.probs, rtol=0, atol=TOL
        )

    def __hash__(self):
        return hash(tuple(np.round(self.probs, 9)))


def as_reports(predictions) -> np.ndarray:
    """Coerce predictions into an ``(N, M)`` array.

    Accepts a list of :class:`Prediction`, an ``(N, M)`` array, or a flat
    sequence of binary probabilities of outcome 1.
    """
    if isinstance(predictions, np.ndarray) and predictions.ndim == 2:
        return np.array(predictions, dtype=float)
    items = list(predictions)
    if items and isinstance(items[0], Prediction):
        return np.vstack([p.probs for p in items])
    arr = np.asarray(items, dtype=float)
    if arr.ndim == 1:
        return np.column_stack([1.0 - arr, arr])
    return arr


@dataclass(frozen=True)
class GameInstance:
    """One wagering game.

    ``reports`` is an ``(N, M)`` array of reported probability vectors;
    ``outcome`` is the realized outcome (``None`` before resolution) and
    ``q`` the happening probabilities when known.
    """

    reports: np.ndarray
    wagers: np.ndarray
    outcome: int | None = None
    q: np.ndarray | None = None

    def __post_init__(self):
        reports = _frozen(as_reports(self.reports))
        wagers = _frozen(self.wagers).reshape(-1)
        if reports.ndim != 2 or reports.shape[0] < 1:
            raise DimensionError("need at least one agent")
        if wagers.shape[0] != reports.shape[0]:
            raise DimensionError(
                f"{reports.shape[0]} reports but {wagers.shape[0]} wagers"
            )
        for row in reports:
            _check_simplex(row)
        if np.any(wagers < 0) or not np.all(np.isfinite(wagers)):
            raise DimensionError("wagers must be finite and non-negative")
        object.__setattr__(self, "reports", reports)
        object.__setattr__(self, "wagers", wagers)
        M = reports.shape[1]
        if self.outcome is not None:
            x = int(self.outcome)
            if not 0 <= x < M:
                raise DimensionError(f"outcome {x} outside 0..{M - 1}")
            object.__setattr__(self, "outcome", x)
        if self.q is not None:
            q = _frozen(self.q).reshape(-1)
            if q.shape[0] != M:
                raise DimensionError("happening probabilities must cover every outcome")
            _check_simplex(q, "happening probability vector")
            object.__setattr__(self, "q", q)

    @classmethod
    def binary(cls, p1s: Sequence[float], wagers: Sequence[float], outcome=None, q1=None):
        q = None if q1 is None else np.array([1.0 - q1, q1])
        return cls(as_reports(p1s), np.asarray(wagers, dtype=float), outcome, q)

    @property
    def n_agents(self) -> int:
        return self.reports.shape[0]

    @property
    def n_outcomes(self) -> int:
        return self.reports.shape[1]

    @property
    def predictions(self) -> list[Prediction]:
        return [Prediction(r) for r in self.reports]

    def with_outcome(self, x: int) -> "GameInstance":
        return replace(self, outcome=x)

    def with_report(self, i: int, probs) -> "GameInstance":
        reports = np.array(self.reports)
        reports[i] = probs.probs if isinstance(probs, Prediction) else probs
        return replace(self, reports=reports)

    def subgame(self, idx: Sequence[int]) -> "GameInstance":
        idx = list(idx)
        return replace(self, reports=self.reports[idx], wagers=self.wagers[idx])

    def permuted(self, perm: Sequence[int]) -> "GameInstance":
        """Agents reordered so that new agent ``k`` is old agent ``perm[k]``."""
        return self.subgame(perm)

    def relabeled(self, sigma: Sequence[int]) -> "GameInstance":
        """Outcome ``x`` renamed to ``sigma[x]`` in reports, outcome and q."""
        sigma = np.asarray(sigma)
        inv = np.argsort(sigma)
        reports = self.reports[:, inv]
        q = None if self.q is None else self.q[inv]
        outcome = None if self.outcome is None else int(sigma[self.outcome])
        return GameInstance(reports, self.wagers, outcome, q)

    def require_outcome(self) -> int:
        if self.outcome is None:
            raise DimensionError("mechanism needs a realized outcome")
        return self.outcome


def coalesce(probs: np.ndarray, payoffs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Merge support points whose payoff vectors agree to 12 decimals."""
    keep = probs > 0
    probs, payoffs = probs[keep], payoffs[keep]
    if probs.shape[0] <= 1:
        return probs, payoffs
    keys = np.round(payoffs, _COALESCE_DECIMALS) + 0.0  # +0.0 folds -0.0 into 0.0
    _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.reshape(-1)
    merged = np.bincount(inverse, weights=probs, minlength=first.shape[0])
    return merged, payoffs[first]


@dataclass(frozen=True)
class PayoffDistribution:
    """Exact finite-support joint distribution of net payoffs.

    ``probs`` has shape ``(K,)`` and ``payoffs`` shape ``(K, N)``.
    Zero-probability points are dropped on construction.  With ``check``
    set (the default) the wager constraint is enforced and violations raise
    :class:`WagerViolationError`.
    """

    probs: np.ndarray
    payoffs: np.ndarray
    wagers: np.ndarray
    check: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float).reshape(-1)
        payoffs = np.asarray(self.payoffs, dtype=float)
        wagers = np.asarray(self.wagers, dtype=float).reshape(-1)
        if payoffs.ndim == 1:
            payoffs = payoffs.reshape(1, -1)
        if payoffs.shape[0] != probs.shape[0]:
            raise DimensionError("one payoff vector per support probability")
        if payoffs.shape[1] != wagers.shape[0]:
            raise DimensionError("payoff vectors must have one entry per wager")
        if np.any(probs < 0):
            raise ValueError("negative support probability")
        keep = probs > 0
        probs, payoffs = probs[keep], payoffs[keep]
        if probs.shape[0] == 0 or abs(probs.sum() - 1.0) > TOL:
            raise ValueError(f"support probabilities sum to {probs.sum()!r}, not 1")
        object.__setattr__(self, "probs", _frozen(probs))
        object.__setattr__(self, "payoffs", _frozen(payoffs))
        object.__setattr__(self, "wagers", _frozen(wagers))
        if self.check:
            bad = self.wager_violations()
            if bad:
                k, i = bad[0]
                raise WagerViolationError(
                    f"agent {i} pays {self.payoffs[k, i]:.12g} with wager {wagers[i]:.12g}",
                    replace(self, check=False),
                )

    @classmethod
    def point(cls, payoffs, wagers, check: bool = True) -> "PayoffDistribution":
        return cls(np.ones(1), np.asarray(payoffs, dtype=float).reshape(1, -1), wagers, check)

    @property
    def n_agents(self) -> int:
        return self.wagers.shape[0]

    @property
    def support(self) -> list[tuple[float, np.ndarray]]:
        return list(zip(self.probs.tolist(), self.payoffs))

    def __len__(self):
        return self.probs.shape[0]

    def expectation(self) -> np.ndarray:
        return self.probs @ self.payoffs

    def min_payoff(self) -> np.ndarray:
        return self.payoffs.min(axis=0)

    def max_payoff(self) -> np.ndarray:
        return self.payoffs.max(axis=0)

    def wager_violations(self, tol: float = TOL) -> list[tuple[int, int]]:
        """(support index, agent) pairs breaking the wager constraint."""
        below = self.payoffs < -self.wagers - tol
        zero = (self.wagers == 0) & (np.abs(self.payoffs) > tol)
        ks, idx = np.nonzero(below | zero)
        return list(zip(ks.tolist(), idx.tolist()))

    def scaled(self, factor: float) -> "PayoffDistribution":
        return PayoffDistribution(self.probs, self.payoffs * factor, self.wagers, self.check)

    def embed(self, idx: Sequence[int], n_agents: int, wagers) -> "PayoffDistribution":
        """Place this group's payoffs at ``idx`` in an ``n_agents`` vector."""
        payoffs = np.zeros((len(self), n_agents))
        payoffs[:, list(idx)] = self.payoffs
        return PayoffDistribution(self.probs, payoffs, wagers, self.check)

    def canonical(self) -> tuple[np.ndarray, np.ndarray]:
        """Support sorted lexicographically by payoff vector, for comparisons."""
        order = np.lexsort(np.round(self.payoffs, 9).T[::-1])
        return self.probs[order], self.payoffs[order]

    def coalesced(self) -> "PayoffDistribution":
        probs, payoffs = coalesce(self.probs, self.payoffs)
        return PayoffDistribution(probs, payoffs, self.wagers, self.check)

    def allclose(self, other: "PayoffDistribution", atol: float = TOL) -> bool:
        """Equal as multisets of (probability, payoff vector) after merging duplicates."""
        a, b = self.coalesced(), other.coalesced()
        if a.payoffs.shape != b.payoffs.shape:
            return False
        pa, xa = a.canonical()
        pb, xb = b.canonical()
        return np.allclose(pa, pb, rtol=0, atol=atol) and np.allclose(xa, xb, rtol=0, atol=atol)


def payoff_distribution_stats(d: PayoffDistribution) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-agent expected, minimum and maximum payoff."""
    return d.expectation(), d.min_payoff(), d.max_payoff()


def mix_distributions(a: PayoffDistribution, b: PayoffDistribution, lam: float) -> PayoffDistribution:
    """Run ``a`` with probability ``lam`` and ``b`` otherwise."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"mixture weight {lam} outside [0, 1]")
    if a.n_agents != b.n_agents or not np.array_equal(a.wagers, b.wagers):
        raise DimensionError("mixed distributions must share agents and wagers")
    if lam == 1.0:
        return a
    if lam == 0.0:
        return b
    probs = np.concatenate([a.probs * lam, b.probs * (1.0 - lam)])
    probs, payoffs = coalesce(probs, np.vstack([a.payoffs, b.payoffs]))
    return PayoffDistribution(probs, payoffs, a.wagers, a.check and b.check)


def product_distribution(parts: Iterable[PayoffDistribution]) -> PayoffDistribution:
    """Joint distribution of independent components whose payoffs add."""
    parts = list(parts)
    probs, payoffs = parts[0].probs, parts[0].payoffs
    for d in parts[1:]:
        probs = np.outer(probs, d.probs).reshape(-1)
        payoffs = (payoffs[:, None, :] + d.payoffs[None, :, :]).reshape(-1, payoffs.shape[1])
        probs, payoffs = coalesce(probs, payoffs)
    return PayoffDistribution(probs, payoffs, parts[0].wagers, all(d.check for d in parts))


def mixture(weights: Sequence[float], parts: Sequence[PayoffDistribution], check: bool = True) -> PayoffDistribution:
    probs = np.concatenate([w * d.probs for w, d in zip(weights, parts)])
    probs, payoffs = coalesce(probs, np.vstack([d.payoffs for d in parts]))
    return PayoffDistribution(probs, payoffs, parts[0].wagers, check)
