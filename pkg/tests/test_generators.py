import numpy as np
import pytest

from wagering.errors import ConfigError
from wagering.generators import (
    PredictionModel,
    WagerModel,
    gen_game,
    gen_predictions,
    gen_wagers,
    parse_prediction_model,
    parse_wager_model,
    uniform_simplex,
)


class TestPredictions:
    def test_synthetic_zero_hook(self, rng):
        q, reports = gen_predictions(PredictionModel("synthetic"), 5, 2, rng, u=np.zeros(5))
        np.testing.assert_allclose(q, [0.5, 0.5])
        np.testing.assert_allclose(reports, 0.5)

    def test_synthetic_formula(self, rng):
        u = np.array([0.3, -1.2, 2.0])
        q, reports = gen_predictions(PredictionModel("synthetic"), 3, 2, rng, u=u)
        from scipy.stats import norm

        assert q[1] == pytest.approx(norm.cdf(u.sum()))
        np.testing.assert_allclose(reports[:, 1], norm.cdf(u / np.sqrt(5)))

    def test_logit_normal_point_mass(self, rng):
        for _ in range(20):
            q, reports = gen_predictions(PredictionModel("logit_normal", alpha=1.0, sigma2=0.0), 4, 2, rng)
            np.testing.assert_allclose(reports[:, 1], q[1], atol=1e-9)

    def test_logit_normal_underconfident(self, rng):
        # alpha > 1 pulls the median report toward 0.5.
        q, reports = gen_predictions(PredictionModel("logit_normal", alpha=2.0, sigma2=0.0), 3, 2, rng)
        assert abs(reports[0, 1] - 0.5) <= abs(q[1] - 0.5) + 1e-12

    def test_defaults(self):
        m = PredictionModel("logit_normal")
        assert (m.alpha, m.sigma2) == (2.0, 1.0)

    def test_uniform_binary_range(self, rng):
        q, reports = gen_predictions(PredictionModel(), 1000, 2, rng)
        assert 0 <= q[1] <= 1
        np.testing.assert_allclose(reports.sum(axis=1), 1)
        assert reports[:, 1].min() >= 0 and reports[:, 1].max() <= 1
        assert abs(reports[:, 1].mean() - 0.5) < 0.05

    def test_uniform_multi(self, rng):
        q, reports = gen_predictions(PredictionModel(), 50, 4, rng)
        assert reports.shape == (50, 4) and q.shape == (4,)
        np.testing.assert_allclose(reports.sum(axis=1), 1)

    def test_uniform_simplex_marginal(self, rng):
        # The first coordinate of a uniform point on the 3-simplex is Beta(1, 2): mean 1/3.
        pts = uniform_simplex(rng, 100000, 3)
        assert pts[:, 0].mean() == pytest.approx(1 / 3, abs=0.005)
        assert np.mean(pts[:, 0] < 0.5) == pytest.approx(0.75, abs=0.005)

    @pytest.mark.parametrize("tag", ["logit_normal", "synthetic"])
    def test_binary_only(self, tag, rng):
        with pytest.raises(ConfigError):
            gen_predictions(PredictionModel(tag), 3, 3, rng)

    def test_bad_params(self):
        with pytest.raises(ConfigError):
            PredictionModel("logit_normal", alpha=0.0)
        with pytest.raises(ConfigError):
            PredictionModel("beta")


class TestWagers:
    def test_uniform(self, rng):
        np.testing.assert_array_equal(gen_wagers(WagerModel(), 3, rng), [1, 1, 1])

    def test_pareto_support_and_median(self):
        w = gen_wagers(WagerModel("pareto"), 1_000_000, np.random.default_rng(5))
        assert w.min() >= 1.0
        assert np.median(w) == pytest.approx(2 ** (1 / 1.16), abs=0.01)

    def test_pareto_scale(self, rng):
        w = gen_wagers(WagerModel("pareto", 2.0, 3.0), 1000, rng)
        assert w.min() >= 3.0

    def test_bad_params(self):
        with pytest.raises(ConfigError):
            WagerModel("pareto", shape=-1.0)


class TestGame:
    def test_deterministic(self):
        a = gen_game(PredictionModel("logit_normal"), WagerModel("pareto"), 6, 2, np.random.default_rng(3))
        b = gen_game(PredictionModel("logit_normal"), WagerModel("pareto"), 6, 2, np.random.default_rng(3))
        np.testing.assert_array_equal(a.reports, b.reports)
        np.testing.assert_array_equal(a.wagers, b.wagers)
        np.testing.assert_array_equal(a.q, b.q)
        assert a.outcome is None

    def test_parse(self):
        assert parse_prediction_model("logit_normal(1.5,0.25)") == PredictionModel("logit_normal", 1.5, 0.25)
        assert parse_wager_model("pareto(2,3)") == WagerModel("pareto", 2.0, 3.0)
        assert parse_wager_model(" uniform ") == WagerModel()

    @pytest.mark.parametrize("text", ["logit_normal(1)", "pareto(a,b)", "zipf"])
    def test_parse_errors(self, text):
        with pytest.raises(ConfigError):
            (parse_wager_model if text.startswith(("pareto", "zipf")) else parse_prediction_model)(text)
