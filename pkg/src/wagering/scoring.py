"""Bounded strictly proper scoring rules and unbiased surrogate scores.

A scoring rule here maps an ``(N, M)`` array of reports to the ``(N, M)``
array of scores ``s_x(p_i)`` for every agent and every outcome, all in
``[0, 1]``.  Surrogate scores debias a score computed against a randomly
flipped outcome so that its conditional expectation given the true outcome
equals the ordinary score.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from .errors import DegenerateNoiseError, DimensionError, RankError
from .types import TOL, Prediction

_SOLVE_RESIDUAL = 1e-6


@dataclass(frozen=True)
class ScoringRule:
    name: str
    table: Callable[[np.ndarray], np.ndarray]

    def scores(self, reports) -> np.ndarray:
        """Score table ``(N, M)``; a single report yields shape ``(M,)``."""
        r = np.asarray(reports, dtype=float)
        if r.ndim == 1:
            return self.table(r[None, :])[0]
        return self.table(r)

    def __call__(self, x: int, p) -> float:
        return float(self.scores(_probs(p))[x])


def _brier_table(reports: np.ndarray) -> np.ndarray:
    # 1 - ||p - e_x||^2 / 2: equals 1 - (p1 - x)^2 in the binary case.
    sq = np.sum(reports * reports, axis=1, keepdims=True)
    return 1.0 - 0.5 * (sq - 2.0 * reports + 1.0)


def _spherical_table(reports: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(reports, axis=1, keepdims=True)
    return reports / norm


BRIER = ScoringRule("brier", _brier_table)
SPHERICAL = ScoringRule("spherical", _spherical_table)
RULES = {"brier": BRIER, "spherical": SPHERICAL}


def custom_rule(name: str, fn: Callable[[int, np.ndarray], float]) -> ScoringRule:
    """Wrap a per-outcome score function ``fn(x, probs)`` as a :class:`ScoringRule`."""

    def table(reports):
        M = reports.shape[1]
        return np.array([[fn(x, row) for x in range(M)] for row in reports])

    return ScoringRule(name, table)


def _probs(p) -> np.ndarray:
    if isinstance(p, Prediction):
        return p.probs
    arr = np.asarray(p, dtype=float)
    if arr.ndim == 0:
        return np.array([1.0 - float(arr), float(arr)])
    return arr


def brier(x: int, p) -> float:
    """Brier score of ``p`` (a :class:`Prediction`, vector, or binary P(X=1))."""
    probs = _probs(p)
    if not 0 <= x < probs.shape[0]:
        raise DimensionError(f"outcome {x} outside 0..{probs.shape[0] - 1}")
    return BRIER(x, probs)


@dataclass(frozen=True)
class ErrorRates:
    """Binary flip rates: ``e0 = P(X~=1 | X=0)``, ``e1 = P(X~=0 | X=1)``."""

    e0: float
    e1: float

    def __post_init__(self):
        for v in (self.e0, self.e1):
            if not -TOL <= v <= 1 + TOL:
                raise ValueError(f"error rate {v} outside [0, 1]")
        if abs(self.e0 + self.e1 - 1.0) <= TOL:
            raise DegenerateNoiseError(f"e0 + e1 = 1 ({self.e0}, {self.e1})")

    @classmethod
    def symmetric(cls, e: float) -> "ErrorRates":
        return cls(e, e)

    def rate(self, x: int) -> float:
        return self.e0 if x == 0 else self.e1

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[1.0 - self.e0, self.e0], [self.e1, 1.0 - self.e1]])

    def as_confusion(self) -> "ConfusionMatrix":
        return ConfusionMatrix(self.matrix)


@dataclass(frozen=True)
class ConfusionMatrix:
    """Row-stochastic ``c[j, k] = P(X~ = k | X = j)``; must be invertible."""

    matrix: np.ndarray

    def __post_init__(self):
        c = np.array(self.matrix, dtype=float)
        if c.ndim != 2 or c.shape[0] != c.shape[1] or c.shape[0] < 2:
            raise DimensionError(f"confusion matrix must be square, got {c.shape}")
        if np.any(c < -TOL) or np.any(c > 1 + TOL):
            raise ValueError("confusion entries must lie in [0, 1]")
        if np.any(np.abs(c.sum(axis=1) - 1.0) > TOL):
            raise ValueError("confusion rows must sum to 1")
        eye = np.eye(c.shape[0])
        try:
            inv = np.linalg.solve(c, eye)
        except np.linalg.LinAlgError as exc:
            raise RankError("confusion matrix is singular") from exc
        if not np.all(np.isfinite(inv)) or np.abs(c @ inv - eye).max() > _SOLVE_RESIDUAL:
            raise RankError("confusion matrix is numerically rank deficient")
        c.setflags(write=False)
        object.__setattr__(self, "matrix", c)

    @property
    def n_outcomes(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def inverse(self) -> np.ndarray:
        return np.linalg.inv(self.matrix)


def uniform_confusion(M: int) -> ConfusionMatrix:
    """Keep the outcome with probability 1/2, else move uniformly to another."""
    if M <= 2:
        raise ValueError("uniform confusion is defined for M > 2; use ErrorRates for M = 2")
    c = np.full((M, M), 1.0 / (2 * (M - 1)))
    np.fill_diagonal(c, 0.5)
    return ConfusionMatrix(c)


def symmetric_confusion(M: int, eps: float) -> ConfusionMatrix:
    """Diagonal ``1 - eps``, off-diagonal ``eps / (M - 1)``."""
    c = np.full((M, M), eps / (M - 1))
    np.fill_diagonal(c, 1.0 - eps)
    return ConfusionMatrix(c)


def surrogate_score_binary(rule: ScoringRule, p, x_tilde: int, e: ErrorRates) -> float:
    """Debiased score of ``p`` against the surrogate outcome ``x_tilde``.

    May lie outside ``[0, 1]``.
    """
    if abs(e.e0 + e.e1 - 1.0) <= TOL:
        raise DegenerateNoiseError("e0 + e1 = 1")
    s = rule.scores(_probs(p))
    if s.shape[0] != 2:
        raise DimensionError("binary surrogate score needs M = 2")
    xt = int(x_tilde)
    other = 1 - xt
    return ((1.0 - e.rate(other)) * s[xt] - e.rate(xt) * s[other]) / (1.0 - e.e0 - e.e1)


def surrogate_score_multi(rule: ScoringRule, p, x_tilde: int, C: ConfusionMatrix) -> float:
    """Component ``x_tilde`` of the solution of ``C @ phi = s(p)``."""
    s = rule.scores(_probs(p))
    if s.shape[0] != C.n_outcomes:
        raise DimensionError("report and confusion matrix disagree on M")
    try:
        phi = np.linalg.solve(C.matrix, s)
    except np.linalg.LinAlgError as exc:
        raise RankError("singular confusion matrix") from exc
    return float(phi[x_tilde])


def surrogate_table(rule: ScoringRule, reports: np.ndarray, noise) -> np.ndarray:
    """All surrogate scores at once.

    ``noise`` is one :class:`ErrorRates` / :class:`ConfusionMatrix` shared by
    every agent, or a sequence with one entry per agent.  Returns ``(N, M)``
    with entry ``[i, k]`` the debiased score of agent ``i`` when its surrogate
    outcome is ``k``.
    """
    s = rule.scores(reports)
    mats = per_agent_confusion(noise, reports.shape[0], reports.shape[1])
    return np.einsum("ijk,ik->ij", np.linalg.inv(mats), s)


def per_agent_confusion(noise, n_agents: int, M: int) -> np.ndarray:
    """Stack of ``(N, M, M)`` confusion matrices from any accepted noise description."""
    if isinstance(noise, (ErrorRates, ConfusionMatrix)) or noise is None:
        noise = [noise] * n_agents
    mats = []
    for nz in noise:
        if nz is None:
            m = np.eye(M)
        elif isinstance(nz, ErrorRates):
            m = nz.matrix
        else:
            m = nz.matrix
        if m.shape != (M, M):
            raise DimensionError(f"noise model is {m.shape[0]}-ary but reports have M={M}")
        mats.append(m)
    if len(mats) != n_agents:
        raise DimensionError("one noise model per agent")
    return np.stack(mats)


def unbiasedness_oracle(rule: ScoringRule, p, x: int, noise) -> float:
    """Exact ``E[surrogate score | X = x]`` by enumerating surrogate outcomes."""
    if isinstance(noise, ErrorRates):
        row = noise.matrix[x]
        return sum(row[k] * surrogate_score_binary(rule, p, k, noise) for k in range(2))
    row = noise.matrix[x]
    return sum(row[k] * surrogate_score_multi(rule, p, k, noise) for k in range(noise.n_outcomes))
