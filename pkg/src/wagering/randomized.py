"""Randomized wagering mechanisms.

Every mechanism comes in two forms: ``*_distribution`` returns the exact
:class:`PayoffDistribution` over the mechanism's own randomness given the
realized outcome, and ``sample_*`` draws one payoff vector from an explicit
``numpy.random.Generator``.  Draw order inside one call is fixed: one
uniform per agent (ascending) for surrogate outcomes, then the partition,
then the lottery.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache
from typing import Sequence

import numpy as np

from .deterministic import anchor_terms, weighted_score_payoffs, wswm
from .errors import (
    AlgorithmInconsistencyError,
    DegenerateNoiseError,
    DimensionError,
    EnumerationCapError,
    InfeasibleFlipError,
    InvalidBaseMechanismError,
    WagerViolationError,
)
from .scoring import (
    BRIER,
    ConfusionMatrix,
    ErrorRates,
    ScoringRule,
    per_agent_confusion,
    surrogate_table,
    symmetric_confusion,
)
from .types import TOL, GameInstance, PayoffDistribution, mix_distributions, mixture, product_distribution

MAX_JOINT_OUTCOMES = 65536  # M ** N for enumerated surrogate realizations
MAX_PARTITION_AGENTS = 10
MAX_SUPPORT = 1 << 20

Partition = tuple[tuple[int, ...], ...]


# ---------------------------------------------------------------------------
# lottery


def lottery_wrap(det_payoffs, wagers) -> PayoffDistribution:
    """Winner-take-all lottery with odds proportional to ``w_i + payoff_i``."""
    det_payoffs = np.asarray(det_payoffs, dtype=float)
    wagers = np.asarray(wagers, dtype=float)
    tickets = wagers + det_payoffs
    if np.any(tickets < -TOL):
        i = int(np.argmin(tickets))
        raise InvalidBaseMechanismError(f"agent {i} would hold {tickets[i]:.3g} lottery tickets")
    tickets = np.clip(tickets, 0.0, None)
    total = tickets.sum()
    N = wagers.shape[0]
    if total <= 0:
        return PayoffDistribution.point(np.zeros(N), wagers)
    winners = np.flatnonzero(tickets > 0)
    payoffs = np.tile(-wagers, (winners.shape[0], 1))
    payoffs[np.arange(winners.shape[0]), winners] = wagers.sum() - wagers[winners]
    return PayoffDistribution(tickets[winners] / total, payoffs, wagers)


def lottery_odds(det_payoffs, wagers) -> np.ndarray:
    tickets = np.clip(np.asarray(wagers) + np.asarray(det_payoffs), 0.0, None)
    total = tickets.sum()
    return tickets / total if total > 0 else tickets


def lws(g: GameInstance, rule: ScoringRule = BRIER) -> PayoffDistribution:
    return lottery_wrap(wswm(g, rule), g.wagers)


def lws_mixed(g: GameInstance, lam: float, rule: ScoringRule = BRIER) -> PayoffDistribution:
    """Run the lottery with probability ``lam`` and plain WSWM otherwise."""
    return mix_distributions(lws(g, rule), PayoffDistribution.point(wswm(g, rule), g.wagers), lam)


def sample_lws(g: GameInstance, rng: np.random.Generator, rule: ScoringRule = BRIER) -> np.ndarray:
    odds = lottery_odds(wswm(g, rule), g.wagers)
    if odds.sum() <= 0:
        return np.zeros(g.n_agents)
    winner = min(int(np.searchsorted(np.cumsum(odds), rng.random(), side="right")), g.n_agents - 1)
    out = -np.array(g.wagers)
    out[winner] = g.wagers.sum() - g.wagers[winner]
    return out


def sample_lws_mixed(g: GameInstance, lam: float, rng: np.random.Generator, rule: ScoringRule = BRIER) -> np.ndarray:
    if rng.random() < lam:
        return sample_lws(g, rng, rule)
    return wswm(g, rule)


# ---------------------------------------------------------------------------
# surrogate wagering


def _joint_patterns(N: int, M: int) -> np.ndarray:
    if M ** N > MAX_JOINT_OUTCOMES:
        raise EnumerationCapError(
            f"{M}^{N} joint surrogate outcomes exceed the cap of {MAX_JOINT_OUTCOMES}; sample instead"
        )
    return np.array(list(itertools.product(range(M), repeat=N)), dtype=np.intp).reshape(-1, N)


def _surrogate_support(mats: np.ndarray, phi: np.ndarray, x: int) -> tuple[np.ndarray, np.ndarray]:
    """Probabilities and debiased score rows of every joint surrogate pattern."""
    N, M = phi.shape
    patterns = _joint_patterns(N, M)
    agents = np.arange(N)
    probs = np.prod(mats[agents, x][agents, patterns], axis=1)
    keep = probs > 0
    return probs[keep], phi[agents, patterns[keep]]


def _finish(probs, payoffs, wagers, strict: bool) -> PayoffDistribution:
    d = PayoffDistribution(probs, payoffs, wagers, check=False)
    if strict and d.wager_violations():
        k, i = d.wager_violations()[0]
        raise WagerViolationError(
            f"agent {i} pays {d.payoffs[k, i]:.12g} with wager {d.wagers[i]:.12g}", d
        )
    return PayoffDistribution(d.probs, d.payoffs, d.wagers, check=strict)


def swm_distribution(g: GameInstance, rule: ScoringRule = BRIER, noise=None, *, strict: bool = True) -> PayoffDistribution:
    """Surrogate wagering with caller-chosen flip rates.

    ``noise`` is an :class:`ErrorRates` or :class:`ConfusionMatrix` shared by
    all agents, or a per-agent sequence.  Generic rates may break the wager
    constraint; with ``strict`` the violation raises
    :class:`WagerViolationError` (carrying the distribution) instead of being
    clamped.
    """
    x = g.require_outcome()
    mats = per_agent_confusion(noise, g.n_agents, g.n_outcomes)
    phi = surrogate_table(rule, g.reports, noise)
    probs, scores = _surrogate_support(mats, phi, x)
    return _finish(probs, weighted_score_payoffs(scores, g.wagers), g.wagers, strict)


def _draw_surrogates(mats: np.ndarray, x: int, u: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(mats[:, x, :], axis=1)
    M = mats.shape[2]
    return np.minimum((u[:, None] >= cdf).sum(axis=1), M - 1)


def sample_swm(g: GameInstance, rng: np.random.Generator, rule: ScoringRule = BRIER, noise=None) -> np.ndarray:
    x = g.require_outcome()
    u = rng.random(g.n_agents)
    mats = per_agent_confusion(noise, g.n_agents, g.n_outcomes)
    phi = surrogate_table(rule, g.reports, noise)
    xt = _draw_surrogates(mats, x, u)
    return weighted_score_payoffs(phi[np.arange(g.n_agents), xt], g.wagers)


def worst_case_payoffs(phi: np.ndarray, wagers: np.ndarray, reachable: np.ndarray | None = None) -> np.ndarray:
    """Each agent's lowest surrogate-WSWM payoff over independent surrogates.

    Agent ``i`` is worst off when its own debiased score is minimal and every
    other agent's is maximal.  ``reachable`` masks which surrogate outcomes
    can occur (all of them by default).
    """
    if reachable is None:
        lo, hi = phi.min(axis=1), phi.max(axis=1)
    else:
        lo = np.where(reachable, phi, np.inf).min(axis=1)
        hi = np.where(reachable, phi, -np.inf).max(axis=1)
    W = wagers.sum()
    if W <= 0:
        return np.zeros_like(wagers)
    a = wagers / W
    return wagers * ((1.0 - a) * lo - (a @ hi - a * hi))


def error_rate_ratios(g: GameInstance, rule: ScoringRule = BRIER) -> np.ndarray:
    """Per-agent ``r_i``: the common flip rate at which agent ``i`` can lose exactly its wager."""
    if g.n_outcomes != 2:
        raise DimensionError("error-rate selection is defined for binary events")
    s = rule.scores(g.reports)
    sw, sb = s.min(axis=1), s.max(axis=1)
    W = g.wagers.sum()
    a = g.wagers / W
    d = sw - sb
    num = (1.0 - a) * d + (a @ d - a * d)
    den = 2.0 * (2.0 + sw + sb - a @ (sw + sb))
    return 0.5 + num / den


def select_error_rates(g: GameInstance, rule: ScoringRule = BRIER) -> float:
    """Common flip rate ``e`` (``e0 = e1 = e`` for everyone) for SWME."""
    if g.n_agents < 2:
        raise DimensionError("error-rate selection needs at least two agents")
    active = g.wagers > 0
    if active.sum() < 2:
        return 0.0
    r = error_rate_ratios(g, rule)[active]
    rmin = float(r.min())
    if rmin > 0.5 + TOL or rmin <= -TOL:
        raise AlgorithmInconsistencyError(f"min r = {rmin!r} outside (0, 0.5]")
    if rmin >= 0.5 - TOL:
        return 0.0
    return max(rmin, 0.0)


def _violates(phi, wagers, offsets=0.0, tol=1e-12) -> bool:
    worst = worst_case_payoffs(phi, wagers) - offsets
    return bool(np.any((wagers > 0) & (worst < -wagers - tol)))


def select_symmetric_rate(g: GameInstance, rule: ScoringRule = BRIER, offsets=None, iters: int = 100) -> float:
    """Largest symmetric flip mass ``eps`` with no wager violation, by bisection.

    Flips keep the outcome with probability ``1 - eps`` and otherwise move to
    one of the other ``M - 1`` outcomes uniformly.  ``offsets`` are fixed
    amounts subtracted from each agent's payoff (worst case over outcomes).
    Returns 0 when reports carry no information or no positive rate is safe.
    """
    M = g.n_outcomes
    s = rule.scores(g.reports)
    offsets = np.zeros(g.n_agents) if offsets is None else np.asarray(offsets)
    if np.all(s.max(axis=1) - s.min(axis=1) <= TOL) or (g.wagers > 0).sum() < 2:
        return 0.0
    eps_max = (M - 1) / M

    def bad(eps):
        c = np.full((M, M), eps / (M - 1))
        np.fill_diagonal(c, 1.0 - eps)
        return _violates(s @ np.linalg.inv(c).T, g.wagers, offsets)

    lo, hi = 0.0, eps_max * (1.0 - 1e-7)
    if bad(hi * 1e-9):
        return 0.0
    if not bad(hi):
        return hi
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if bad(mid):
            hi = mid
        else:
            lo = mid
    return lo


def select_noise(g: GameInstance, rule: ScoringRule = BRIER):
    """Flip model used by SWME and the label of the method that chose it.

    Binary events use the closed-form error-rate selection; ``M > 2`` bisects
    on a symmetric confusion matrix, an extrapolation of the binary rule.
    """
    if g.n_outcomes == 2:
        return ErrorRates.symmetric(select_error_rates(g, rule)), "closed-form"
    eps = select_symmetric_rate(g, rule)
    return symmetric_confusion(g.n_outcomes, eps), "bisection (extrapolated, M>2)"


def swme_distribution(g: GameInstance, rule: ScoringRule = BRIER) -> PayoffDistribution:
    noise, _ = select_noise(g, rule)
    return swm_distribution(g, rule, noise)


def sample_swme(g: GameInstance, rng: np.random.Generator, rule: ScoringRule = BRIER) -> np.ndarray:
    noise, _ = select_noise(g, rule)
    return sample_swm(g, rng, rule, noise)


# ---------------------------------------------------------------------------
# random partitions


def _pairings(items: tuple[int, ...]):
    if not items:
        yield ()
        return
    first, rest = items[0], items[1:]
    for k, partner in enumerate(rest):
        for tail in _pairings(rest[:k] + rest[k + 1:]):
            yield ((first, partner),) + tail


def _double_factorial(n: int) -> int:
    return math.prod(range(n, 0, -2)) if n > 0 else 1


def partition_count(N: int) -> int:
    if N < 2:
        raise DimensionError("partitions need at least two agents")
    if N % 2 == 0:
        return _double_factorial(N - 1)
    return math.comb(N, 3) * _double_factorial(N - 4)


@lru_cache(maxsize=None)
def _partitions(N: int) -> tuple[Partition, ...]:
    agents = tuple(range(N))
    if N % 2 == 0:
        return tuple(_pairings(agents))
    out = []
    for triple in itertools.combinations(agents, 3):
        rest = tuple(a for a in agents if a not in triple)
        for tail in _pairings(rest):
            out.append(tuple(sorted((triple,) + tail)))
    return tuple(out)


def enumerate_partitions(N: int, cap: int = MAX_PARTITION_AGENTS) -> list[tuple[Partition, float]]:
    """Every grouping into pairs (plus one triple when ``N`` is odd), uniformly weighted."""
    if N < 2:
        raise DimensionError("partitions need at least two agents")
    if N > cap:
        raise EnumerationCapError(f"{partition_count(N)} partitions of {N} agents; sample instead")
    parts = _partitions(N)
    return [(p, 1.0 / len(parts)) for p in parts]


def sample_partition(N: int, rng: np.random.Generator) -> Partition:
    perm = rng.permutation(N)
    return partition_from_permutation(perm)


def partition_from_permutation(perm) -> Partition:
    perm = [int(v) for v in perm]
    N = len(perm)
    n_pairs = N // 2 if N % 2 == 0 else (N - 3) // 2
    groups = [tuple(sorted(perm[2 * k: 2 * k + 2])) for k in range(n_pairs)]
    if N % 2:
        groups.append(tuple(sorted(perm[-3:])))
    return tuple(sorted(groups))


def _grouped(g: GameInstance, group_dist, cap: int = MAX_PARTITION_AGENTS) -> PayoffDistribution:
    """Uniform mixture over partitions of independent per-group distributions."""
    N = g.n_agents
    if N == 2:
        return group_dist((0, 1))
    cache = {}
    weights, parts = [], []
    for partition, prob in enumerate_partitions(N, cap):
        comps = []
        for grp in partition:
            if grp not in cache:
                cache[grp] = group_dist(grp).embed(grp, N, g.wagers)
            comps.append(cache[grp])
        if math.prod(len(c) for c in comps) > MAX_SUPPORT:
            raise EnumerationCapError("joint support too large; sample instead")
        weights.append(prob)
        parts.append(product_distribution(comps))
    return mixture(weights, parts)


def rp_swme_distribution(g: GameInstance, rule: ScoringRule = BRIER) -> PayoffDistribution:
    """SWME run independently inside every group of a uniformly random partition."""
    if g.n_agents < 2:
        raise DimensionError("random-partition SWME needs at least two agents")
    x = g.require_outcome()
    return _grouped(g, lambda grp: swme_distribution(g.subgame(grp).with_outcome(x), rule))


def sample_rp_swme(g: GameInstance, rng: np.random.Generator, rule: ScoringRule = BRIER) -> np.ndarray:
    x = g.require_outcome()
    u = rng.random(g.n_agents)
    partition = sample_partition(g.n_agents, rng)
    out = np.zeros(g.n_agents)
    for grp in partition:
        idx = list(grp)
        sub = g.subgame(idx)
        noise, _ = select_noise(sub, rule)
        mats = per_agent_confusion(noise, len(idx), g.n_outcomes)
        phi = surrogate_table(rule, sub.reports, noise)
        xt = _draw_surrogates(mats, x, u[idx])
        out[idx] = weighted_score_payoffs(phi[np.arange(len(idx)), xt], sub.wagers)
    return out


# ---------------------------------------------------------------------------
# surrogate no-arbitrage wagering


def _anchor_worst(g: GameInstance, rule: ScoringRule, weighted: bool) -> np.ndarray:
    return np.max([anchor_terms(g, rule, weighted, x=x) for x in range(g.n_outcomes)], axis=0)


def select_snawm_noise(g: GameInstance, rule: ScoringRule = BRIER, weighted: bool = True):
    """Largest symmetric flip rate keeping surrogate NAWM within every wager."""
    eps = select_symmetric_rate(g, rule, offsets=_anchor_worst(g, rule, weighted))
    if g.n_outcomes == 2:
        return ErrorRates.symmetric(min(eps, 0.5 - 1e-9))
    return symmetric_confusion(g.n_outcomes, eps)


def surrogate_nawm_distribution(
    g: GameInstance, rule: ScoringRule = BRIER, noise=None, *, weighted: bool = True, strict: bool = True
) -> PayoffDistribution:
    """Surrogate-scored WSWM term minus the deterministic true-outcome anchor."""
    x = g.require_outcome()
    if noise is None:
        noise = select_snawm_noise(g, rule, weighted)
    mats = per_agent_confusion(noise, g.n_agents, g.n_outcomes)
    phi = surrogate_table(rule, g.reports, noise)
    probs, scores = _surrogate_support(mats, phi, x)
    payoffs = weighted_score_payoffs(scores, g.wagers) - anchor_terms(g, rule, weighted)
    return _finish(probs, payoffs, g.wagers, strict)


def sample_surrogate_nawm(
    g: GameInstance, rng: np.random.Generator, rule: ScoringRule = BRIER, noise=None, *, weighted: bool = True
) -> np.ndarray:
    if noise is None:
        noise = select_snawm_noise(g, rule, weighted)
    return sample_swm(g, rng, rule, noise) - anchor_terms(g, rule, weighted)


# ---------------------------------------------------------------------------
# noisy ground truth


def compose_noise(agent_flip: ErrorRates, outcome_noise: ErrorRates) -> ErrorRates:
    """Error rates w.r.t. the true outcome after flipping a noisy outcome."""
    f0, f1 = agent_flip.e0, agent_flip.e1
    n0, n1 = outcome_noise.e0, outcome_noise.e1
    t0 = f0 * (1.0 - n0) + (1.0 - f1) * n0
    t1 = f1 * (1.0 - n1) + (1.0 - f0) * n1
    return ErrorRates(t0, t1)


def solve_agent_flip(target: ErrorRates, outcome_noise: ErrorRates) -> ErrorRates:
    """Flip rates on the noisy outcome that compose to ``target``."""
    n0, n1 = outcome_noise.e0, outcome_noise.e1
    if abs(n0 + n1 - 1.0) <= TOL:
        raise DegenerateNoiseError("outcome noise carries no information")
    A = np.array([[1.0 - n0, -n0], [-n1, 1.0 - n1]])
    b = np.array([target.e0 - n0, target.e1 - n1])
    f0, f1 = np.linalg.solve(A, b)
    if min(f0, f1) < -TOL or max(f0, f1) > 1 + TOL:
        raise InfeasibleFlipError(f"flip rates ({f0:.6g}, {f1:.6g}) outside [0, 1]")
    f0, f1 = float(np.clip(f0, 0, 1)), float(np.clip(f1, 0, 1))
    if abs(f0 + f1 - 1.0) <= TOL:
        raise InfeasibleFlipError("solution flips carry no information")
    return ErrorRates(f0, f1)


def scale_factor(payoffs: np.ndarray, wagers: np.ndarray) -> float:
    payoffs = np.atleast_2d(payoffs)
    live = wagers > 0
    if np.any(np.abs(payoffs[:, ~live]) > TOL):
        raise WagerViolationError("zero-wager agent has a nonzero payoff")
    if not live.any():
        return 1.0
    return max(1.0, float(np.max(-payoffs[:, live] / wagers[live])))


def scale_payoffs(d: PayoffDistribution, wagers=None) -> PayoffDistribution:
    """Shrink every payoff by the worst loss-to-wager ratio when it exceeds 1."""
    wagers = d.wagers if wagers is None else np.asarray(wagers, dtype=float)
    scale = scale_factor(d.payoffs, wagers)
    return PayoffDistribution(d.probs, d.payoffs / scale, wagers)


def _noisy_group(sub: GameInstance, noise: ErrorRates, rule: ScoringRule):
    """Per-group plan: returns ``dist(x_hat) -> PayoffDistribution`` and the scale used."""
    e = select_error_rates(sub, rule)
    wagers = sub.wagers
    try:
        flip = solve_agent_flip(ErrorRates.symmetric(e), noise)
    except InfeasibleFlipError:
        flip = None
    if flip is not None:
        target = ErrorRates.symmetric(e)
        phi = surrogate_table(rule, sub.reports, target)
        mats = per_agent_confusion(flip, sub.n_agents, 2)

        def dist(x_hat):
            probs, scores = _surrogate_support(mats, phi, x_hat)
            return PayoffDistribution(probs, weighted_score_payoffs(scores, wagers), wagers)

        return dist, 1.0, flip
    # Direct debiasing with the outcome's own noise, then shrink to fit wagers.
    phi = surrogate_table(rule, sub.reports, noise)
    raw = {xh: weighted_score_payoffs(phi[:, xh], wagers) for xh in (0, 1)}
    scale = scale_factor(np.vstack(list(raw.values())), wagers)

    def dist(x_hat):
        return PayoffDistribution.point(raw[x_hat] / scale, wagers)

    return dist, scale, None


def noisy_group_plan(sub: GameInstance, noise: ErrorRates, rule: ScoringRule = BRIER):
    """``(flip rates or None, scale)`` chosen for one group."""
    _, scale, flip = _noisy_group(sub, noise, rule)
    return flip, scale


def noisy_swme_distribution(
    g: GameInstance, noise: ErrorRates, rule: ScoringRule = BRIER, x_hat: int | None = None
) -> PayoffDistribution:
    """Random-partition SWME driven by a noisy outcome with known noise rates.

    With ``x_hat`` given, the distribution covers the mechanism's randomness
    only.  Without it, ``g.outcome`` is the true outcome and the noisy outcome
    is enumerated too, giving the end-to-end distribution.
    """
    if g.n_outcomes != 2:
        raise DimensionError("noisy ground truth is supported for binary events")
    if g.n_agents < 2:
        raise DimensionError("needs at least two agents")
    plans = {}

    def plan(grp):
        if grp not in plans:
            plans[grp] = _noisy_group(g.subgame(grp), noise, rule)[0]
        return plans[grp]

    def given(xh):
        return _grouped(g, lambda grp: plan(grp)(xh))

    if x_hat is not None:
        return given(int(x_hat))
    x = g.require_outcome()
    row = noise.matrix[x]
    branches = [(row[xh], given(xh)) for xh in (0, 1) if row[xh] > 0]
    return mixture([w for w, _ in branches], [d for _, d in branches])


def sample_noisy_swme(
    g: GameInstance, noise: ErrorRates, rng: np.random.Generator, rule: ScoringRule = BRIER, x_hat: int | None = None
) -> np.ndarray:
    if x_hat is None:
        x = g.require_outcome()
        x_hat = int(rng.random() < noise.matrix[x, 1])
    u = rng.random(g.n_agents)
    partition = sample_partition(g.n_agents, rng)
    out = np.zeros(g.n_agents)
    for grp in partition:
        idx = list(grp)
        sub = g.subgame(idx)
        dist, scale, flip = _noisy_group(sub, noise, rule)
        if flip is None:
            out[idx] = dist(x_hat).payoffs[0]
            continue
        e = select_error_rates(sub, rule)
        phi = surrogate_table(rule, sub.reports, ErrorRates.symmetric(e))
        mats = per_agent_confusion(flip, len(idx), 2)
        xt = _draw_surrogates(mats, x_hat, u[idx])
        out[idx] = weighted_score_payoffs(phi[np.arange(len(idx)), xt], sub.wagers)
    return out


def group_members(partition: Partition, i: int) -> Sequence[int]:
    return next(grp for grp in partition if i in grp)
