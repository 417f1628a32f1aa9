"""The twelve acceptance criteria at their stated tolerances.

Each test records a one-line PASS/FAIL verdict with the measured numbers;
the lines are printed together at the end of the session.
"""

import itertools
import time

import numpy as np
import pytest
from scipy.stats import spearmanr

from wagering import (
    BRIER,
    ErrorRates,
    GameInstance,
    mechanism,
    noisy_swme_distribution,
    unbiasedness_oracle,
    uniform_confusion,
    wswm,
)
from wagering.cli import main
from wagering.config import ExperimentConfig
from wagering.experiments import instance_rng, run_efficiency_sweep, variance_samples
from wagering.generators import PredictionModel, WagerModel, gen_game
from wagering.metrics import accuracy_bins
from wagering.randomized import (
    error_rate_ratios,
    noisy_group_plan,
    select_error_rates,
    swm_distribution,
    swme_distribution,
)
from wagering.verifier import (
    check_budget_balance,
    check_ir_sic,
    check_po,
    check_sybilproof,
    corrupted_budget_stub,
    identity_bonus_stub,
    report_distance_stub,
    sic_configs,
)

from conftest import ACCEPTANCE_LINES

SEED = 20240611


def verdict(k, title, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] {k:>2}. {title}: {detail}"
    ACCEPTANCE_LINES[k] = line
    print(line)
    return passed


def realized_games(n, Ns, stream):
    """``n`` uniform/uniform games cycling through ``Ns``, outcome drawn from ``q``."""
    out = []
    for i in range(n):
        N = Ns[i % len(Ns)]
        rng = instance_rng(SEED, N, i, stream)
        g = gen_game(PredictionModel(), WagerModel(), N, 2, rng)
        out.append(g.with_outcome(int(rng.random() < g.q[1])))
    return out


def random_wager_games(n, Ns, stream):
    out = []
    for i in range(n):
        N = Ns[i % len(Ns)]
        rng = instance_rng(SEED, N, i, stream)
        out.append(GameInstance.binary(rng.random(N), rng.uniform(0.1, 3.0, N), outcome=int(rng.integers(2))))
    return out


def test_01_unbiasedness():
    t0 = time.perf_counter()
    grid = np.round(np.arange(0, 1.0001, 0.05), 10)
    rates = np.round(np.arange(0, 0.90001, 0.1), 10)
    worst, n = 0.0, 0
    for p1 in grid:
        for e0, e1 in itertools.product(rates, repeat=2):
            if abs(e0 + e1 - 1) <= 1e-12:
                continue
            for x in (0, 1):
                worst = max(worst, abs(unbiasedness_oracle(BRIER, p1, x, ErrorRates(e0, e1)) - BRIER(x, p1)))
                n += 1
    dt = time.perf_counter() - t0
    ok = worst <= 1e-9 and dt < 1.0
    assert verdict(1, "binary unbiasedness", ok, f"{n} cases, max error {worst:.2e}, {dt:.2f}s")


def test_02_multi_outcome_unbiasedness():
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for M in (3, 4):
        C = uniform_confusion(M)
        for _ in range(100):
            p = rng.dirichlet(np.ones(M))
            for x in range(M):
                worst = max(worst, abs(unbiasedness_oracle(BRIER, p, x, C) - BRIER(x, p)))
    C3 = uniform_confusion(3)
    inv_err = np.abs(C3.matrix @ C3.inverse - np.eye(3)).max()
    dt = time.perf_counter() - t0
    ok = worst <= 1e-9 and inv_err <= 1e-9 and dt < 1.0
    assert verdict(2, "multi-outcome unbiasedness", ok, f"max error {worst:.2e}, |C C^-1 - I| {inv_err:.2e}, {dt:.2f}s")


def test_03_budget_balance():
    t0 = time.perf_counter()
    games = realized_games(1000, [2, 3, 4, 5, 6], 0)
    rng = np.random.default_rng(SEED)
    swm_noise = [ErrorRates(*rng.uniform(0, 0.4, 2)) for _ in games]
    mechs = {
        "WSWM": mechanism("WSWM"), "LWS": mechanism("LWS"), "SWME": mechanism("SWME"),
        "RP-SWME": mechanism("RP-SWME"), "S-NAWM": mechanism("S-NAWM"),
        "noisy-SWME": mechanism("noisy-SWME(0.1,0.1)"),
    }
    worst = {}
    for name, mech in mechs.items():
        worst[name] = max(np.abs(mech(g).payoffs.sum(axis=1)).max() for g in games)
    worst["SWM"] = max(
        np.abs(swm_distribution(g, BRIER, e, strict=False).payoffs.sum(axis=1)).max() for g, e in zip(games, swm_noise)
    )
    nawm_max = max(mechanism("NAWM")(g).payoffs.sum() for g in games)
    snawm_signed = max(mechs["S-NAWM"](g).payoffs.sum(axis=1).max() for g in games)
    dt = time.perf_counter() - t0
    failing = [k for k, v in worst.items() if v > 1e-9]
    ok = not failing and nawm_max <= 1e-9 and dt < 30
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    assert verdict(3, "ex-post budget balance", ok,
                   f"max |sum|: {detail}; NAWM max sum {nawm_max:.1e}; S-NAWM max signed sum {snawm_signed:.1e}; failing {failing or 'none'}; {dt:.1f}s")


def test_04_worst_case_tightness():
    t0 = time.perf_counter()
    games = random_wager_games(1000, [2, 3, 4, 5, 6], 1)
    below, gap = 0, 0.0
    for g in games:
        i = int(np.argmin(error_rate_ratios(g)))
        lows = []
        for x in (0, 1):
            d = swme_distribution(g.with_outcome(x))
            below += int(np.any(d.payoffs < -d.wagers - 1e-9))
            lows.append(d.min_payoff()[i])
        gap = max(gap, abs(min(lows) + g.wagers[i]))
    hand = GameInstance.binary([1.0, 0.0], [1.0, 1.0], outcome=1)
    e = select_error_rates(hand)
    hand_worst = swme_distribution(hand).min_payoff()[0]
    dt = time.perf_counter() - t0
    ok = below == 0 and gap <= 1e-9 and e == pytest.approx(0.25, abs=1e-12) and hand_worst == pytest.approx(-1, abs=1e-12) and dt < 30
    assert verdict(4, "worst case equals the full wager", ok,
                   f"violations {below}, max |worst + w| {gap:.1e}, hand case e={e:.4g} worst={hand_worst:.4g}, {dt:.1f}s")


def test_05_sic():
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    configs = sic_configs(2, 50, rng) + sic_configs(3, 50, rng)
    results = {}
    for name in ("WSWM", "SWME", "RP-SWME", "LWS"):
        _, sic = check_ir_sic(mechanism(name), configs)
        results[name] = sic.passed
    dt = time.perf_counter() - t0
    ok = all(results.values()) and dt < 120
    assert verdict(5, "strict incentive compatibility", ok,
                   f"{len(configs)} configs (50 per N in {{2,3}}); " + ", ".join(f"{k} {'ok' if v else 'FAIL'}" for k, v in results.items())
                   + f"; {dt:.1f}s")


def test_06_pareto_optimality():
    t0 = time.perf_counter()
    Ns = [2, 3, 4, 5, 6]
    games = [g.with_outcome(None) for g in random_wager_games(500, Ns, 2)]
    fails = {name: {N: 0 for N in Ns} for name in ("RP-SWME", "LWS", "WSWM")}
    for name in fails:
        mech = mechanism(name)
        for g in games:
            r = check_po(mech, [g])
            if not r.passed:
                assert r.witness is not None
                fails[name][g.n_agents] += 1
    per_n = len(games) // len(Ns)
    wswm_rate = sum(fails["WSWM"].values()) / len(games)
    dt = time.perf_counter() - t0
    rp_ok = sum(fails["RP-SWME"].values()) == 0
    lws_ok = sum(fails["LWS"].values()) == 0
    ok = rp_ok and lws_ok and wswm_rate >= 0.95 and dt < 60
    rp = " ".join(f"N={N}:{c}/{per_n}" for N, c in fails["RP-SWME"].items())
    assert verdict(6, "Pareto optimality witness", ok,
                   f"RP-SWME failures {rp}; LWS failures {sum(fails['LWS'].values())}; "
                   f"WSWM fail rate {wswm_rate:.3f}; {dt:.1f}s")


def _efficiency(mechanisms, n_min, n_max, n_step):
    cfg = ExperimentConfig(mechanisms=mechanisms, n_min=n_min, n_max=n_max, n_step=n_step, instances=200, seed=SEED)
    rows = run_efficiency_sweep(cfg)
    by = {}
    for r in rows:
        by.setdefault(r.mechanism, {})[r.N] = r
    return by


def test_07_risk_anchor():
    # Average over every instance of every N in the sweep; per-N values are
    # printed alongside.
    t0 = time.perf_counter()
    by = _efficiency(("RP-SWME", "LWS", "WSWM"), 2, 20, 2)
    avg = {m: float(np.mean([r.avg_risk for r in rows.values()])) for m, rows in by.items()}
    dt = time.perf_counter() - t0
    ok = avg["RP-SWME"] >= 0.99 and avg["LWS"] >= 0.99 and avg["WSWM"] <= 0.6 and dt < 120
    per_n = " ".join(f"{N}:{r.avg_risk:.4f}" for N, r in by["RP-SWME"].items())
    assert verdict(7, "average individual risk", ok,
                   f"RP-SWME {avg['RP-SWME']:.4f}, LWS {avg['LWS']:.4f}, WSWM {avg['WSWM']:.4f}; "
                   f"RP-SWME per N {per_n}; {dt:.1f}s")


def test_08_exchange_anchor():
    t0 = time.perf_counter()
    by = _efficiency(("LWS", "WSWM"), 2, 20, 1)
    lws = {N: r.avg_exchange_rate for N, r in by["LWS"].items()}
    ws = {N: r.avg_exchange_rate for N, r in by["WSWM"].items()}
    avg = float(np.mean(list(lws.values())))
    below = all(ws[N] < lws[N] for N in lws)
    dt = time.perf_counter() - t0
    ok = avg >= 0.75 and below and dt < 120
    per_n = " ".join(f"{N}:{v:.3f}" for N, v in lws.items())
    assert verdict(8, "money exchange rate", ok,
                   f"LWS average {avg:.4f}; WSWM below LWS at every N: {below}; LWS per N {per_n}; {dt:.1f}s")


def test_09_variance_ordering():
    t0 = time.perf_counter()
    cfg = ExperimentConfig(mechanisms=("RP-SWME", "LWS"), n_min=10, n_max=10, instances=10000, seed=SEED)
    acc, norm = variance_samples(cfg, 10)
    rp = accuracy_bins(acc, norm["RP-SWME"])
    lw = accuracy_bins(acc, norm["LWS"])
    pop = rp.count >= 2
    std_ok = bool(np.all(rp.std[pop] < lw.std[pop]))
    frac_ok = bool(np.all(rp.frac_not_losing[pop] > lw.frac_not_losing[pop]))
    rho = spearmanr(np.flatnonzero(pop), rp.frac_not_losing[pop]).statistic
    dt = time.perf_counter() - t0
    ok = std_ok and frac_ok and rho > 0 and dt < 300
    assert verdict(9, "variance ordering", ok,
                   f"{int(pop.sum())} bins; RP-SWME std {np.nanmin(rp.std):.2f}-{np.nanmax(rp.std):.2f} vs LWS "
                   f"{np.nanmin(lw.std):.2f}-{np.nanmax(lw.std):.2f}; RP-SWME not losing "
                   f"{np.nanmin(rp.frac_not_losing):.2f}-{np.nanmax(rp.frac_not_losing):.2f} vs LWS "
                   f"{np.nanmin(lw.frac_not_losing):.2f}-{np.nanmax(lw.frac_not_losing):.2f}; Spearman {rho:.3f}; {dt:.1f}s")


def test_10_noisy_ground_truth():
    t0 = time.perf_counter()
    noise = ErrorRates(0.1, 0.1)
    games = random_wager_games(200, [2], 3)
    feasible = scaled = 0
    gap = 0.0
    violations = 0
    for g in games:
        flip, scale = noisy_group_plan(g, noise)
        d = noisy_swme_distribution(g, noise)
        if flip is not None:
            feasible += 1
        else:
            scaled += 1
        gap = max(gap, np.abs(d.expectation() - wswm(g) / scale).max())
        violations += int(np.any(d.payoffs < -g.wagers - 1e-9))
    dt = time.perf_counter() - t0
    ok = gap <= 1e-9 and violations == 0 and dt < 30
    assert verdict(10, "noisy ground truth", ok,
                   f"{feasible} flip-feasible, {scaled} scaled; max |E - WSWM/scale| {gap:.1e}; "
                   f"violations {violations}; {dt:.1f}s")


def test_11_determinism(tmp_path):
    outs = []
    for t in (1, 4):
        p = tmp_path / f"eff{t}.csv"
        code = main(["efficiency", "--n-min", "2", "--n-max", "12", "--instances", "30",
                     "--seed", "99", "--threads", str(t), "--out", str(p)])
        assert code == 0
        outs.append(p.read_bytes())
    ok = outs[0] == outs[1]
    assert verdict(11, "byte-identical output across threads", ok, f"{len(outs[0])} bytes, threads 1 vs 4")


def test_12_negative_controls():
    rng = np.random.default_rng(SEED)
    games = [GameInstance.binary(rng.random(3), rng.uniform(0.5, 2, 3), outcome=1) for _ in range(3)]
    bb = check_budget_balance(corrupted_budget_stub(), games)
    _, sic = check_ir_sic(report_distance_stub(), sic_configs(2, 3, rng))
    syb = check_sybilproof(identity_bonus_stub(), [g.with_outcome(None) for g in games])
    reports = {"budget": bb, "SIC": sic, "sybil": syb}
    ok = all(not r.passed and r.witness is not None for r in reports.values())
    assert verdict(12, "negative controls", ok,
                   ", ".join(f"{k} {'caught' if not r.passed else 'MISSED'}" for k, r in reports.items()))
