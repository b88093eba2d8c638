import numpy as np
import pytest

from malsched.estimation import EstimationConfig, detection_matrix, fp_rates
from malsched.game import (
    GameInstance,
    MixedStrategy,
    Schedule,
    ToolId,
    TradeoffParams,
    UtilityModel,
    VulnId,
)
from malsched.lp import maximize, solve_lp
from malsched.schedules import prune_dominated

# Adversary-escalation payoffs: rows DoNothing / PreventPhishing, columns
# Phishing / DataLeak.
ESC_U_D = np.array([[-3.0, -4.0], [0.0, -4.0]])
ESC_U_A = np.array([[2.0, 1.0], [0.0, 1.0]])


def escalation_game() -> GameInstance:
    return GameInstance.from_payoffs(
        ESC_U_D, ESC_U_A,
        action_names=["DoNothing", "PreventPhishing"],
        vuln_names=["Phishing", "DataLeak"],
    )


@pytest.fixture
def escalation() -> GameInstance:
    return escalation_game()


def random_game(seed: int, max_schedules: int = 6, max_vulns: int = 5):
    """Seeded random payoff game plus a detection model for the
    detection-based baselines (utilities uniform in [-10, 10])."""
    rng = np.random.default_rng(seed)
    num_s = int(rng.integers(1, max_schedules + 1))
    num_v = int(rng.integers(1, max_vulns + 1))
    u_d = rng.uniform(-10.0, 10.0, (num_s, num_v))
    u_a = rng.uniform(-10.0, 10.0, (num_s, num_v))
    prior = rng.dirichlet(np.ones(num_v))
    game = GameInstance.from_payoffs(u_d, u_a, vuln_prior=prior)
    model = UtilityModel(
        detect_prob=rng.uniform(0.0, 1.0, (num_s, num_v)),
        reward_a=np.ones(num_v),
        reward_d=-np.ones(num_v),
        cost_a=np.zeros(num_v),
        cost_d=np.zeros(num_s),
        tradeoffs=TradeoffParams(1.0, 2.0),
        vuln_prior=np.full(num_v, 1.0 / num_v),
    )
    return game, model


def random_mixed(rng, n: int) -> MixedStrategy:
    weights = rng.uniform(0.0, 1.0, n) + 1e-12
    return MixedStrategy(weights / weights.sum())


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Touch every jitted kernel once so timed tests measure the algorithms
    rather than one-time compilation."""
    solve_lp(maximize([1.0], [([1.0], "<=", 1.0)]))
    game = escalation_game()
    prune_dominated(game)
    prune_dominated(game, parallel=True, block_size=1)
    from malsched.estimation import ScanOutcome, ScanRecord

    tools = [ToolId("a", 0), ToolId("b", 1)]
    vulns = [VulnId("CVE-1", 0)]
    records = [
        ScanRecord("f0", ("CVE-1",), {"a": ScanOutcome(True, True),
                                      "b": ScanOutcome(True, False)})
    ]
    schedules = [Schedule((tools[0],)), Schedule((tools[0], tools[1]))]
    detection_matrix(records, schedules, tools, vulns, EstimationConfig(0))
    benign = [ScanRecord("b0", (), {"a": ScanOutcome(True, False)})]
    fp_rates(benign, schedules, tools)
