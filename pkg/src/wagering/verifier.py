"""Executable property checks over exact payoff distributions.

Each ``check_*`` function takes a mechanism (anything callable as
``mech(game) -> PayoffDistribution``, typically a :class:`Mechanism`) plus a
list of games, and returns a :class:`PropertyReport`.  Games without a
realized outcome are checked at every outcome.  A failing report always
carries a witness that replays the violation.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .deterministic import wswm
from .mechanisms import Mechanism
from .types import TOL, GameInstance, PayoffDistribution

PROPERTIES = (
    "IR", "WIC", "SIC", "WEBB", "EBB", "sybilproof", "anonymity", "neutrality", "no_arbitrage", "PO",
)

MechanismLike = Callable[[GameInstance], PayoffDistribution]


@dataclass(frozen=True)
class PropertyReport:
    prop: str
    mechanism: str
    passed: bool
    tol: float = TOL
    checked: int = 0
    witness: dict | None = None
    note: str = ""

    def __post_init__(self):
        if self.prop not in PROPERTIES:
            raise ValueError(f"unknown property {self.prop!r}")
        if not self.passed and self.witness is None:
            raise ValueError("a failing report needs a witness")

    def to_dict(self) -> dict:
        return {
            "property": self.prop,
            "mechanism": self.mechanism,
            "passed": self.passed,
            "tolerance": self.tol,
            "checked": self.checked,
            "witness": self.witness,
            "note": self.note,
        }

    def __str__(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.prop:<13} {self.mechanism:<14} checked={self.checked} {self.note}".rstrip()


def _name(mech) -> str:
    return getattr(mech, "name", getattr(mech, "__name__", repr(mech)))


def _game_record(g: GameInstance) -> dict:
    return {
        "reports": g.reports.tolist(),
        "wagers": g.wagers.tolist(),
        "outcome": g.outcome,
    }


def _outcomes(g: GameInstance) -> Sequence[int]:
    return range(g.n_outcomes) if g.outcome is None else (g.outcome,)


def _expected(mech, g: GameInstance, belief: np.ndarray) -> np.ndarray:
    """Per-agent expected payoff over ``X ~ belief`` and the mechanism's randomness."""
    total = np.zeros(g.n_agents)
    for x in range(g.n_outcomes):
        if belief[x] > 0:
            total += belief[x] * mech(g.with_outcome(x)).expectation()
    return total


# ---------------------------------------------------------------------------
# budget balance


def check_budget_balance(mech, games: Iterable[GameInstance], weak: bool = False, tol: float = TOL) -> PropertyReport:
    """Every support point sums to zero (``weak``: to at most zero)."""
    prop = "WEBB" if weak else "EBB"
    n = 0
    for k, g in enumerate(games):
        for x in _outcomes(g):
            d = mech(g.with_outcome(x))
            sums = d.payoffs.sum(axis=1)
            bad = sums > tol if weak else np.abs(sums) > tol
            n += 1
            if np.any(bad):
                j = int(np.flatnonzero(bad)[0])
                witness = {
                    "instance": k, **_game_record(g.with_outcome(x)),
                    "payoffs": d.payoffs[j].tolist(), "sum": float(sums[j]),
                }
                return PropertyReport(prop, _name(mech), False, tol, n, witness)
    return PropertyReport(prop, _name(mech), True, tol, n)


# ---------------------------------------------------------------------------
# incentives


def report_grid(step: float = 0.01) -> np.ndarray:
    n = int(round(1.0 / step))
    return np.linspace(0.0, 1.0, n + 1)


def sic_configs(N: int, n_configs: int, rng: np.random.Generator, step: float = 0.01) -> list[tuple[GameInstance, int]]:
    """Random (game, agent) pairs whose agent's report is a grid point; the report is its belief."""
    grid = report_grid(step)
    out = []
    for _ in range(n_configs):
        p1 = rng.random(N)
        i = int(rng.integers(N))
        p1[i] = grid[rng.integers(grid.shape[0])]
        wagers = rng.uniform(0.5, 2.0, N)
        out.append((GameInstance.binary(p1, wagers), i))
    return out


def check_ir_sic(
    mech, configs: Sequence[tuple[GameInstance, int]], step: float = 0.01, margin: float = TOL
) -> tuple[PropertyReport, PropertyReport]:
    """Exact grid check of individual rationality and strict incentive compatibility.

    For each ``(game, i)`` agent ``i``'s report is its belief.  Every grid
    report is scored by its exact expected payoff under that belief; truth
    must be the unique argmax by more than ``margin`` and must not lose
    money in expectation.
    """
    grid = report_grid(step)
    name = _name(mech)
    ir_witness = sic_witness = None
    for k, (g, i) in enumerate(configs):
        belief = g.reports[i]
        truth = int(np.argmin(np.abs(grid - belief[1])))
        values = np.array([
            _expected(mech, g.with_report(i, np.array([1.0 - r, r])), belief)[i] for r in grid
        ])
        if ir_witness is None and values[truth] < -TOL:
            ir_witness = {"instance": k, "agent": i, **_game_record(g), "expected": float(values[truth])}
        others = np.delete(values, truth)
        best = int(np.argmax(np.where(np.arange(grid.shape[0]) == truth, -np.inf, values)))
        if sic_witness is None and not values[truth] > others.max() + margin:
            sic_witness = {
                "instance": k, "agent": i, **_game_record(g),
                "truthful": float(grid[truth]), "truthful_value": float(values[truth]),
                "deviation": float(grid[best]), "deviation_value": float(values[best]),
            }
        if ir_witness is not None and sic_witness is not None:
            break
    n = len(configs)
    return (
        PropertyReport("IR", name, ir_witness is None, TOL, n, ir_witness),
        PropertyReport("SIC", name, sic_witness is None, margin, n, sic_witness, f"grid step {step}"),
    )


# ---------------------------------------------------------------------------
# no arbitrage and Pareto optimality


def _worst_ratio_hits(mech, g: GameInstance, tol: float):
    """Per agent: lowest payoff over outcomes and support, and whether it ever equals ``-w``."""
    low = np.full(g.n_agents, np.inf)
    full_loss = np.zeros(g.n_agents, dtype=bool)
    for x in range(g.n_outcomes):
        d = mech(g.with_outcome(x))
        low = np.minimum(low, d.payoffs.min(axis=0))
        full_loss |= np.any(np.abs(d.payoffs + g.wagers) <= tol, axis=0)
    return low, full_loss


def _identical_reports(g: GameInstance) -> bool:
    return bool(np.all(np.abs(g.reports - g.reports[0]) <= TOL))


def check_no_arbitrage(mech, games: Iterable[GameInstance], tol: float = TOL) -> PropertyReport:
    """Every agent with a positive wager loses money under some outcome and realization."""
    n = 0
    skipped = 0
    for k, g in enumerate(games):
        if _identical_reports(g):
            skipped += 1
            continue
        low, _ = _worst_ratio_hits(mech, g.with_outcome(None), tol)
        n += 1
        safe = (g.wagers > 0) & (low >= -tol)
        if np.any(safe):
            i = int(np.flatnonzero(safe)[0])
            witness = {"instance": k, "agent": i, **_game_record(g), "lowest_payoff": float(low[i])}
            return PropertyReport("no_arbitrage", _name(mech), False, tol, n, witness)
    return PropertyReport("no_arbitrage", _name(mech), True, tol, n, note=f"skipped {skipped} identical-report games")


def po_failures(mech, g: GameInstance, tol: float = TOL) -> list[tuple[int, int]]:
    """Pairs with differing reports where neither agent can ever lose its whole wager."""
    _, full_loss = _worst_ratio_hits(mech, g.with_outcome(None), tol)
    out = []
    for i, j in itertools.combinations(range(g.n_agents), 2):
        if np.all(np.abs(g.reports[i] - g.reports[j]) <= TOL):
            continue
        if not (full_loss[i] or full_loss[j]):
            out.append((i, j))
    return out


def check_po(mech, games: Iterable[GameInstance], tol: float = TOL) -> PropertyReport:
    n = 0
    for k, g in enumerate(games):
        n += 1
        bad = po_failures(mech, g, tol)
        if bad:
            i, j = bad[0]
            witness = {"instance": k, "pair": [i, j], **_game_record(g)}
            return PropertyReport("PO", _name(mech), False, tol, n, witness)
    return PropertyReport("PO", _name(mech), True, tol, n)


# ---------------------------------------------------------------------------
# sybilproofness


def split_game(g: GameInstance, i: int, fraction: float) -> GameInstance:
    """Agent ``i`` keeps ``fraction`` of its wager and a clone (appended last) takes the rest."""
    reports = np.vstack([g.reports, g.reports[i]])
    wagers = np.append(g.wagers, (1.0 - fraction) * g.wagers[i])
    wagers[i] = fraction * g.wagers[i]
    return GameInstance(reports, wagers, g.outcome, g.q)


def check_sybilproof(
    mech, games: Iterable[GameInstance], splits: Sequence[float] = tuple(np.arange(1, 10) / 10), tol: float = TOL
) -> PropertyReport:
    """Splitting a wager over identical-report identities never raises expected payoff.

    The expectation is over the splitting agent's own report as belief.
    """
    n = 0
    for k, g in enumerate(games):
        g = g.with_outcome(None)
        for i in range(g.n_agents):
            if g.wagers[i] <= 0:
                continue
            belief = g.reports[i]
            base = _expected(mech, g, belief)[i]
            for f in splits:
                sg = split_game(g, i, float(f))
                split = _expected(mech, sg, belief)[[i, g.n_agents]].sum()
                n += 1
                if split > base + tol:
                    witness = {
                        "instance": k, "agent": i, "fraction": float(f), **_game_record(g),
                        "unsplit": float(base), "split": float(split), "gain": float(split - base),
                    }
                    return PropertyReport("sybilproof", _name(mech), False, tol, n, witness)
    return PropertyReport("sybilproof", _name(mech), True, tol, n)


# ---------------------------------------------------------------------------
# anonymity and neutrality


def check_symmetries(mech, games: Iterable[GameInstance], tol: float = TOL) -> tuple[PropertyReport, PropertyReport]:
    """Anonymity over all agent permutations and neutrality over all outcome relabelings."""
    name = _name(mech)
    anon = neut = None
    n = 0
    for k, g in enumerate(games):
        for x in _outcomes(g):
            gx = g.with_outcome(x)
            d = mech(gx)
            n += 1
            if anon is None:
                for perm in itertools.permutations(range(g.n_agents)):
                    dp = mech(gx.permuted(perm))
                    expect = PayoffDistribution(d.probs, d.payoffs[:, list(perm)], d.wagers[list(perm)], check=False)
                    if not dp.allclose(expect, tol):
                        anon = {"instance": k, **_game_record(gx), "permutation": list(perm)}
                        break
            if neut is None:
                for sigma in itertools.permutations(range(g.n_outcomes)):
                    dr = mech(gx.relabeled(sigma))
                    if not dr.allclose(d, tol):
                        neut = {"instance": k, **_game_record(gx), "relabeling": list(sigma)}
                        break
    return (
        PropertyReport("anonymity", name, anon is None, tol, n, anon),
        PropertyReport("neutrality", name, neut is None, tol, n, neut),
    )


# ---------------------------------------------------------------------------
# deliberately broken mechanisms for testing the checks themselves


def _wswm_point(g: GameInstance) -> PayoffDistribution:
    return PayoffDistribution.point(wswm(g), g.wagers)


def corrupted_budget_stub(bonus: float = 0.01) -> Mechanism:
    """WSWM with an unfunded bonus for agent 0."""

    def dist(g):
        pay = wswm(g)
        pay[0] += bonus
        return PayoffDistribution(np.ones(1), pay[None, :], g.wagers, check=False)

    return Mechanism("stub-unbalanced", dist)


def report_distance_stub() -> Mechanism:
    """Pays each agent ``w_i |p_i - 1/2|`` regardless of the outcome."""

    def dist(g):
        pay = g.wagers * np.abs(g.reports[:, 1] - 0.5)
        return PayoffDistribution(np.ones(1), pay[None, :], g.wagers, check=False)

    return Mechanism("stub-distance", dist)


def identity_bonus_stub(bonus: float = 0.05) -> Mechanism:
    """WSWM plus a flat bonus per identity, funded in proportion to wagers."""

    def dist(g):
        W = g.wagers.sum()
        pay = wswm(g) + bonus - g.n_agents * bonus * g.wagers / W
        return PayoffDistribution(np.ones(1), pay[None, :], g.wagers, check=False)

    return Mechanism("stub-identity-bonus", dist)


def favoritism_stub(bonus: float = 0.01) -> Mechanism:
    """WSWM with a transfer from agent 1 to agent 0."""

    def dist(g):
        pay = wswm(g)
        pay[0] += bonus
        pay[1] -= bonus
        return PayoffDistribution(np.ones(1), pay[None, :], g.wagers, check=False)

    return Mechanism("stub-favoritism", dist)


STUBS = {
    "stub-unbalanced": corrupted_budget_stub,
    "stub-distance": report_distance_stub,
    "stub-identity-bonus": identity_bonus_stub,
    "stub-favoritism": favoritism_stub,
}
