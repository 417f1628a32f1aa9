import numpy as np
import pytest

from wagering import GameInstance, PayoffDistribution, mechanism, mix_distributions
from wagering.errors import DimensionError, WagerViolationError
from wagering.metrics import (
    MetricsRecord,
    accuracy,
    accuracy_bins,
    distribution_exchange_rate,
    exchange_rate,
    individual_risk,
    money_exchange_rate,
    money_exchanged,
    normalize_payoffs,
    risk_from_payoffs,
)

from conftest import random_binary_game

WSWM = mechanism("WSWM")
LWS = mechanism("LWS")
RP = mechanism("RP-SWME")


class TestRisk:
    def test_wswm_identical_reports(self):
        g = GameInstance.binary([0.3] * 4, [1, 2, 3, 4])
        np.testing.assert_array_equal(individual_risk(WSWM, g), 0)

    def test_lws_full_risk(self, rng):
        for N in range(2, 7):
            g = random_binary_game(rng, N, outcome=None)
            np.testing.assert_allclose(individual_risk(LWS, g), 1.0)

    def test_rp_swme_two_agents(self):
        g = GameInstance.binary([1.0, 0.0], [1.0, 1.0])
        np.testing.assert_allclose(individual_risk(RP, g), 1.0)

    def test_zero_wager(self):
        np.testing.assert_array_equal(risk_from_payoffs([[0.0, -1.0]], [0.0, 2.0]), [0.0, 0.5])

    def test_clipped(self):
        np.testing.assert_array_equal(risk_from_payoffs([[1.0, -3.0]], [1.0, 2.0]), [0.0, 1.0])

    def test_mixture_monotone(self, rng):
        g = random_binary_game(rng, 4)
        a, b = LWS(g), mechanism("SWME")(g)
        for lam in (0.0, 0.3, 1.0):
            mix = mix_distributions(a, b, lam)
            assert np.all(
                risk_from_payoffs(mix.payoffs, g.wagers)
                <= np.maximum(risk_from_payoffs(a.payoffs, g.wagers), risk_from_payoffs(b.payoffs, g.wagers)) + 1e-12
            )


class TestExchange:
    def test_identical_reports(self):
        g = GameInstance.binary([0.6] * 3, [1, 1, 1], q1=0.4)
        assert money_exchange_rate(WSWM, g) == 0.0

    def test_lws_realization(self):
        w = np.array([1.0, 2.0, 3.0])
        payoffs = -w.copy()
        payoffs[1] = w.sum() - w[1]
        assert exchange_rate(payoffs, w) == pytest.approx(4 / 6)

    def test_identity_asserted(self):
        with pytest.raises(WagerViolationError):
            money_exchanged([0.5, -0.4])
        np.testing.assert_allclose(money_exchanged([0.5, -0.4], balanced=False), [0.5])

    def test_zero_total(self):
        with pytest.raises(DimensionError):
            exchange_rate([0.0, 0.0], [0.0, 0.0])

    def test_needs_q(self, two_agent_game):
        with pytest.raises(DimensionError):
            money_exchange_rate(WSWM, two_agent_game)

    def test_two_agent_lws(self):
        # Either outcome moves exactly one unit of the two wagered.
        g = GameInstance.binary([1.0, 0.0], [1.0, 1.0], q1=0.3)
        assert money_exchange_rate(LWS, g) == pytest.approx(0.5)

    def test_q_weighting(self):
        g = GameInstance.binary([1.0, 0.0], [1.0, 1.0], q1=0.25)
        # WSWM moves 0.5 under either outcome.
        assert money_exchange_rate(WSWM, g) == pytest.approx(0.25)

    def test_distribution(self):
        d = PayoffDistribution([0.5, 0.5], [[1.0, -1.0], [0.0, 0.0]], [1.0, 1.0])
        assert distribution_exchange_rate(d) == pytest.approx(0.25)


class TestAccuracy:
    def test_outcome(self):
        np.testing.assert_allclose(accuracy([0.2, 0.9], outcome=1), [0.2, 0.9])
        np.testing.assert_allclose(accuracy([0.2, 0.9], outcome=0), [0.8, 0.1])

    def test_q(self):
        np.testing.assert_allclose(accuracy([0.2, 0.9], q1=0.5), [0.7, 0.6])

    def test_exactly_one_reference(self):
        with pytest.raises(ValueError):
            accuracy([0.2], outcome=1, q1=0.3)

    def test_bins(self):
        acc = np.array([0.05, 0.07, 0.55, 0.56, 0.57, 1.0])
        z = np.array([-1.0, 1.0, 0.0, 0.5, -0.5, 2.0])
        b = accuracy_bins(acc, z, bins=10)
        np.testing.assert_array_equal(b.count, [2, 0, 0, 0, 0, 3, 0, 0, 0, 1])
        assert b.std[0] == pytest.approx(np.sqrt(2))
        assert b.std[5] == pytest.approx(0.5)
        assert np.isnan(b.std[9]) and b.frac_not_losing[9] == 1.0
        assert np.isnan(b.std[1]) and np.isnan(b.frac_not_losing[1])
        assert b.frac_not_losing[5] == pytest.approx(2 / 3)
        np.testing.assert_allclose(b.edges, np.linspace(0, 1, 11))

    def test_tolerance_for_zero(self):
        b = accuracy_bins([0.5, 0.5], [-1e-15, -1e-3], bins=2)
        assert b.frac_not_losing[1] == 0.5

    def test_identical_reports_zero_std(self, rng):
        from wagering.randomized import sample_rp_swme

        zs, accs = [], []
        for _ in range(50):
            g = GameInstance.binary([0.5] * 4, rng.uniform(0.5, 2, 4), outcome=int(rng.integers(2)))
            zs.append(normalize_payoffs(sample_rp_swme(g, rng), g.wagers))
            accs.append(accuracy(g.reports[:, 1], outcome=g.outcome))
        b = accuracy_bins(np.concatenate(accs), np.concatenate(zs))
        np.testing.assert_allclose(b.std[b.count >= 2], 0.0, atol=1e-12)

    def test_normalize(self):
        z = normalize_payoffs([1.0, 0.0], [2.0, 0.0])
        assert z[0] == 0.5 and np.isnan(z[1])


class TestRecord:
    def test_range(self):
        MetricsRecord("LWS", 2, "uniform", "uniform", 1.0, 0.5)
        with pytest.raises(ValueError):
            MetricsRecord("LWS", 2, "uniform", "uniform", 1.2, 0.5)
