"""Optimal randomized scheduling of malware-detection tools.

Builds a leader-follower security game from scan-report data (detection
rates, false positives, vulnerability severity scores) and computes the
defender's optimal commitment against a best-responding attacker, along
with the deterministic and naive baseline strategies it is measured
against.
"""

from ._accel import backend
from .estimation import (
    DatasetError,
    DetectionStats,
    EstimationConfig,
    NvdScore,
    ScanOutcome,
    ScanRecord,
    build_utility_model,
    derive_rewards_costs,
    estimate_fp_rate,
    estimate_schedule_detection,
    estimate_tool_detection,
    load_nvd_scores,
    load_scan_dataset,
    tool_universe,
    vuln_prior,
    vuln_universe,
)
from .game import (
    GameInstance,
    GameValidationError,
    MixedStrategy,
    Schedule,
    ToolId,
    TradeoffParams,
    UtilityModel,
    VulnId,
    attacker_best_responses,
    attacker_utility,
    build_game,
    coverage_payoff,
    defender_utility,
    expected_utilities,
)
from .lp import (
    LinearProgram,
    LpSolution,
    LpStatus,
    LpValidationError,
    maximize,
    solve_lp,
)
from .milp import MilpEmitConfig, MilpSummary, emit_milp, read_lp_file
from .schedules import (
    PruneResult,
    ScheduleSet,
    count_schedules,
    enumerate_schedules,
    prune_dominated,
)
from .solver import (
    SolverInvariantError,
    SseSolution,
    StrategyReport,
    UnsupportedBaselineError,
    baseline_best_average,
    baseline_highest_expected_utility,
    baseline_top_m_average,
    baseline_top_m_expected,
    baseline_uniform_all,
    deterministic_best_response,
    evaluate_against_best_response,
    solve_sse,
    standard_reports,
)
from .synth import SyntheticSpec, generate_datasets

__version__ = "0.1.0"
