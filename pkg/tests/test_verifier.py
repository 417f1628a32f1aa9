import json

import numpy as np
import pytest

from wagering import GameInstance, mechanism
from wagering.verifier import (
    PropertyReport,
    check_budget_balance,
    check_ir_sic,
    check_no_arbitrage,
    check_po,
    check_sybilproof,
    check_symmetries,
    corrupted_budget_stub,
    favoritism_stub,
    identity_bonus_stub,
    po_failures,
    report_distance_stub,
    sic_configs,
    split_game,
)

from conftest import random_binary_game


def games(rng, Ns, k=3, outcome=None):
    return [random_binary_game(rng, N, outcome=outcome) for N in Ns for _ in range(k)]


class TestReport:
    def test_failing_needs_witness(self):
        with pytest.raises(ValueError):
            PropertyReport("EBB", "x", False)

    def test_unknown_property(self):
        with pytest.raises(ValueError):
            PropertyReport("fairness", "x", True)

    def test_serializable(self):
        r = PropertyReport("PO", "LWS", False, witness={"pair": [0, 1]})
        assert json.loads(json.dumps(r.to_dict()))["witness"] == {"pair": [0, 1]}
        assert str(r).startswith("FAIL PO")


class TestBudgetBalance:
    @pytest.mark.parametrize("name", ["WSWM", "LWS", "SWME", "RP-SWME"])
    def test_exact(self, name, rng):
        assert check_budget_balance(mechanism(name), games(rng, range(2, 6))).passed

    def test_nawm_weak(self, rng):
        gs = games(rng, range(2, 7))
        assert check_budget_balance(mechanism("NAWM"), gs, weak=True).passed
        assert not check_budget_balance(mechanism("NAWM"), gs).passed

    def test_negative_control(self, rng):
        r = check_budget_balance(corrupted_budget_stub(), games(rng, [3]))
        assert not r.passed
        assert r.witness["sum"] == pytest.approx(0.01)


class TestIncentives:
    @pytest.mark.parametrize("name", ["WSWM", "LWS", "SWME", "RP-SWME"])
    def test_sic(self, name, rng):
        ir, sic = check_ir_sic(mechanism(name), sic_configs(2, 3, rng) + sic_configs(3, 2, rng))
        assert ir.passed and sic.passed

    def test_negative_control(self, rng):
        _, sic = check_ir_sic(report_distance_stub(), sic_configs(2, 3, rng))
        assert not sic.passed
        assert sic.witness["deviation"] in (0.0, 1.0)

    def test_configs_on_grid(self, rng):
        for g, i in sic_configs(3, 20, rng):
            assert abs(g.reports[i, 1] * 100 - round(g.reports[i, 1] * 100)) < 1e-9


class TestNoArbitrage:
    @pytest.mark.parametrize("name", ["LWS", "SWME", "RP-SWME", "S-NAWM"])
    def test_pass(self, name, rng):
        assert check_no_arbitrage(mechanism(name), games(rng, range(2, 6))).passed

    def test_skips_identical(self):
        g = GameInstance.binary([0.4] * 3, [1, 1, 1])
        r = check_no_arbitrage(mechanism("WSWM"), [g])
        assert r.passed and r.checked == 0

    def test_recorded_for_wswm(self, rng):
        # Direction not asserted: only that the check runs and reports.
        r = check_no_arbitrage(mechanism("WSWM"), games(rng, [2, 3]))
        assert r.passed or r.witness is not None


class TestPO:
    def test_lws(self, rng):
        assert check_po(mechanism("LWS"), games(rng, range(2, 7))).passed

    @pytest.mark.parametrize("N", [2, 4, 5, 6])
    def test_rp_swme(self, N, rng):
        assert check_po(mechanism("RP-SWME"), games(rng, [N], k=5)).passed

    def test_rp_swme_three_agents(self, rng):
        # With one group of three, only the agent with the smallest r reaches
        # -w, which leaves exactly one pair without a witness.
        g = GameInstance.binary([0.9, 0.2, 0.6], [1.0, 1.0, 1.0])
        assert len(po_failures(mechanism("RP-SWME"), g)) == 1

    def test_wswm_fails(self, rng):
        r = check_po(mechanism("WSWM"), games(rng, [3]))
        assert not r.passed and len(r.witness["pair"]) == 2

    def test_identical_pair_ignored(self):
        g = GameInstance.binary([0.5, 0.5], [1.0, 1.0])
        assert po_failures(mechanism("WSWM"), g) == []


class TestSybil:
    def test_split_game(self, two_agent_game):
        g = split_game(two_agent_game, 0, 0.25)
        np.testing.assert_allclose(g.wagers, [0.25, 1.0, 0.75])
        np.testing.assert_allclose(g.reports[2], g.reports[0])

    @pytest.mark.parametrize("name", ["WSWM", "LWS", "SWME"])
    def test_pass(self, name, rng):
        assert check_sybilproof(mechanism(name), games(rng, [2, 3], k=2)).passed

    def test_rp_swme_uniform_wagers(self, rng):
        gs = [GameInstance.binary(rng.random(3), [1.0, 1.0, 1.0]) for _ in range(3)]
        assert check_sybilproof(mechanism("RP-SWME"), gs).passed

    def test_negative_control(self, rng):
        assert not check_sybilproof(identity_bonus_stub(), games(rng, [3], k=1)).passed


class TestSymmetries:
    @pytest.mark.parametrize("name", ["WSWM", "LWS", "SWME", "RP-SWME"])
    def test_pass(self, name, rng):
        anon, neut = check_symmetries(mechanism(name), games(rng, [2, 3, 4], k=1, outcome="draw"))
        assert anon.passed and neut.passed

    def test_multi_outcome_neutrality(self, rng):
        g = GameInstance(rng.dirichlet(np.ones(3), size=3), [1.0, 2.0, 1.5], outcome=1)
        _, neut = check_symmetries(mechanism("WSWM"), [g])
        assert neut.passed

    def test_negative_control(self, rng):
        anon, _ = check_symmetries(favoritism_stub(), games(rng, [3], k=1, outcome="draw"))
        assert not anon.passed
        assert "permutation" in anon.witness

    def test_identical_agents_swap(self):
        g = GameInstance.binary([0.3, 0.3, 0.8], [1.0, 1.0, 2.0], outcome=0)
        d = mechanism("RP-SWME")(g)
        assert mechanism("RP-SWME")(g.permuted([1, 0, 2])).allclose(d)
