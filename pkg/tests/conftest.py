import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from wagering import GameInstance

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("thorough", max_examples=500, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def two_agent_game():
    """Reports 1 and 0 on outcome 1, unit wagers, outcome 1 realized."""
    return GameInstance.binary([1.0, 0.0], [1.0, 1.0], outcome=1)


def random_binary_game(rng, N, outcome="draw", wager_low=0.1, wager_high=3.0):
    """Uniform reports and wagers; ``outcome="draw"`` picks a fair coin, ``None`` leaves it open."""
    p1 = rng.random(N)
    w = rng.uniform(wager_low, wager_high, N)
    if outcome == "draw":
        outcome = int(rng.integers(2))
    return GameInstance.binary(p1, w, outcome=outcome)


# One line per acceptance criterion, printed in the terminal summary.
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
