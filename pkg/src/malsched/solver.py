"""Equilibrium computation and reference defender strategies.

The leader-optimal commitment (attacker breaking ties in the defender's
favor) is found by enumerating the attacker's pure targets: for each
vulnerability, a plain LP maximizes the defender's expected utility
subject to that vulnerability being an attacker best response.  The best
feasible target wins.  With the attack indicator constrained to a single
pure target anyway, this enumeration is exact and needs no integer
programming.

Also here: the deterministic best response (the best single schedule
against a best-responding attacker) and the naive baselines it is
compared against.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import lp
from .game import (
    BEST_RESPONSE_TOL,
    GameInstance,
    GameValidationError,
    MixedStrategy,
    UtilityModel,
)

__all__ = [
    "SolverInvariantError",
    "UnsupportedBaselineError",
    "SseSolution",
    "StrategyReport",
    "BestResponseEval",
    "evaluate_against_best_response",
    "per_target_lp",
    "solve_sse",
    "deterministic_best_response",
    "baseline_uniform_all",
    "baseline_best_average",
    "baseline_top_m_average",
    "baseline_highest_expected_utility",
    "baseline_top_m_expected",
    "standard_reports",
]


class SolverInvariantError(RuntimeError):
    """An internal solver invariant failed (not an input problem)."""


class UnsupportedBaselineError(ValueError):
    """The baseline needs model data this game does not carry."""


@dataclass(frozen=True)
class SseSolution:
    """Leader-optimal commitment and the tie-broken attacker response."""

    defender: MixedStrategy
    attacker_target: int
    value_d: float
    value_a: float


@dataclass(frozen=True)
class StrategyReport:
    """A named defender strategy evaluated against a best-responding attacker."""

    name: str
    defender: MixedStrategy
    induced_attacker: int
    value_d: float
    value_a: float


class BestResponseEval(NamedTuple):
    target: int
    value_d: float
    value_a: float


def evaluate_against_best_response(
    game: GameInstance,
    defender: MixedStrategy,
) -> BestResponseEval:
    """Attacker best response with ties broken in the defender's favor.

    Among attacker-optimal targets (within the shared tolerance) the one
    maximizing defender utility wins; remaining ties go to the lowest
    vulnerability index.
    """
    if len(defender) != game.num_schedules:
        raise GameValidationError(
            f"strategy has {len(defender)} entries for {game.num_schedules} schedules"
        )
    e_a = defender.probs @ game.u_a
    e_d = defender.probs @ game.u_d
    best = np.flatnonzero(e_a >= e_a.max() - BEST_RESPONSE_TOL)
    target = int(best[np.argmax(e_d[best])])
    return BestResponseEval(target, float(e_d[target]), float(e_a[target]))


def per_target_lp(game: GameInstance, target: int) -> lp.LinearProgram:
    """LP over the defender simplex forcing ``target`` to be a best response."""
    num_s, num_v = game.num_schedules, game.num_vulns
    rows = [(np.ones(num_s), "=", 1.0)]
    for v in range(num_v):
        if v == target:
            continue
        rows.append((game.u_a[:, target] - game.u_a[:, v], ">=", 0.0))
    return lp.maximize(game.u_d[:, target], rows, [(0.0, 1.0)] * num_s)


def solve_sse(game: GameInstance) -> SseSolution:
    """Compute the leader-optimal commitment.

    Per-target LPs are solved in index order; infeasible targets (never a
    best response) are skipped, and value ties keep the lowest index.
    """
    best_value = None
    best_x = None
    for v in range(game.num_vulns):
        sol = lp.solve_lp(per_target_lp(game, v))
        if sol.status is lp.LpStatus.UNBOUNDED:
            raise SolverInvariantError(f"per-target LP {v} unbounded on a compact simplex")
        if sol.status is not lp.LpStatus.OPTIMAL:
            continue
        if best_value is None or sol.objective_value > best_value:
            best_value = sol.objective_value
            best_x = sol.x
    if best_x is None:
        raise SolverInvariantError(
            "every per-target LP was infeasible; some target must always be a best response"
        )
    probs = np.clip(best_x, 0.0, 1.0)
    probs /= probs.sum()
    try:
        defender = MixedStrategy(probs)
    except GameValidationError as exc:
        raise SolverInvariantError(f"solver produced an invalid distribution: {exc}") from exc
    ev = evaluate_against_best_response(game, defender)
    return SseSolution(defender, ev.target, ev.value_d, ev.value_a)


def sse_report(game: GameInstance) -> StrategyReport:
    sol = solve_sse(game)
    return StrategyReport("r_br", sol.defender, sol.attacker_target, sol.value_d, sol.value_a)


def deterministic_best_response(game: GameInstance) -> StrategyReport:
    """Best single schedule against a best-responding attacker.

    For each schedule the attacker's argmax target is found first (ties
    resolved toward the defender); the schedule with the best resulting
    defender utility wins, ties keeping the lowest index.
    """
    best = None
    for s in range(game.num_schedules):
        row_a = game.u_a[s]
        candidates = np.flatnonzero(row_a >= row_a.max() - BEST_RESPONSE_TOL)
        v = int(candidates[np.argmax(game.u_d[s][candidates])])
        val = float(game.u_d[s, v])
        if best is None or val > best[0]:
            best = (val, s, v)
    val, s, v = best
    strat = MixedStrategy.pure(s, game.num_schedules)
    return StrategyReport("d_br", strat, v, val, float(game.u_a[s, v]))


def _report(game: GameInstance, name: str, strat: MixedStrategy) -> StrategyReport:
    ev = evaluate_against_best_response(game, strat)
    return StrategyReport(name, strat, ev.target, ev.value_d, ev.value_a)


def baseline_uniform_all(game: GameInstance) -> StrategyReport:
    """Uniform randomization over every schedule."""
    return _report(game, "uall", MixedStrategy.uniform(game.num_schedules))


def _require_model(model: UtilityModel | None, game: GameInstance, what: str) -> UtilityModel:
    if model is None:
        raise UnsupportedBaselineError(
            f"{what} needs detection probabilities; this game carries payoffs only"
        )
    if model.detect_prob.shape != (game.num_schedules, game.num_vulns):
        raise GameValidationError(
            f"model shape {model.detect_prob.shape} does not match the game "
            f"({game.num_schedules}x{game.num_vulns})"
        )
    return model


def _check_m(m: int, num_schedules: int) -> None:
    if not 1 <= m <= num_schedules:
        raise ValueError(f"m must lie in [1, {num_schedules}], got {m}")


def baseline_best_average(model: UtilityModel | None, game: GameInstance) -> StrategyReport:
    """Pure strategy on the schedule with the best mean detection rate."""
    model = _require_model(model, game, "best-average baseline")
    avg = model.detect_prob.mean(axis=1)
    s = int(np.argmax(avg))  # first maximum = canonical-order tie-break
    return _report(game, "ba", MixedStrategy.pure(s, game.num_schedules))


def baseline_top_m_average(
    model: UtilityModel | None, game: GameInstance, m: int
) -> StrategyReport:
    """Uniform over the m schedules with the highest mean detection rates."""
    model = _require_model(model, game, "top-m-average baseline")
    _check_m(m, game.num_schedules)
    avg = model.detect_prob.mean(axis=1)
    top = np.argsort(-avg, kind="stable")[:m]
    probs = np.zeros(game.num_schedules)
    probs[top] = 1.0 / m
    return _report(game, f"u{m}", MixedStrategy(probs))


def _prior_scores(game: GameInstance) -> np.ndarray:
    if game.vuln_prior is None:
        raise UnsupportedBaselineError("this baseline needs a vulnerability prior on the game")
    return game.u_d @ game.vuln_prior


def baseline_highest_expected_utility(game: GameInstance) -> StrategyReport:
    """Pure strategy maximizing prior-weighted defender utility."""
    s = int(np.argmax(_prior_scores(game)))
    return _report(game, "e1", MixedStrategy.pure(s, game.num_schedules))


def baseline_top_m_expected(game: GameInstance, m: int) -> StrategyReport:
    """Uniform over the m schedules with the highest prior-weighted utility."""
    _check_m(m, game.num_schedules)
    top = np.argsort(-_prior_scores(game), kind="stable")[:m]
    probs = np.zeros(game.num_schedules)
    probs[top] = 1.0 / m
    return _report(game, f"e{m}", MixedStrategy(probs))


BASELINE_NAMES = ("d_br", "uall", "ba", "um", "e1", "em")


def standard_reports(
    game: GameInstance,
    model: UtilityModel | None = None,
    m: int | None = None,
    baselines: Sequence[str] = BASELINE_NAMES,
    skip_unsupported: bool = True,
) -> list[StrategyReport]:
    """The equilibrium strategy plus the requested reference strategies, in
    a stable order; an empty request reports the equilibrium alone.

    ``m`` defaults to min(10, number of schedules).  With
    ``skip_unsupported`` set, baselines undefined for this game (payoff-only
    or prior-less) are left out instead of raising.
    """
    if m is None:
        m = min(10, game.num_schedules)
    reports = [sse_report(game)]
    builders = {
        "d_br": lambda: deterministic_best_response(game),
        "uall": lambda: baseline_uniform_all(game),
        "ba": lambda: baseline_best_average(model, game),
        "um": lambda: baseline_top_m_average(model, game, m),
        "e1": lambda: baseline_highest_expected_utility(game),
        "em": lambda: baseline_top_m_expected(game, m),
    }
    for name in baselines:
        if name not in builders:
            raise ValueError(f"unknown baseline {name!r}; choose from {sorted(builders)}")
        try:
            reports.append(builders[name]())
        except UnsupportedBaselineError:
            if not skip_unsupported:
                raise
    return reports
