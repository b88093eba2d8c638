"""Domain types and payoff arithmetic for the detection-scheduling game.

The defender commits to a probability distribution over *schedules*
(budget-bounded sets of detection tools); the attacker observes that
distribution and picks a vulnerability to exploit.  An undetected attack
pays the attacker its reward and costs the defender the mirrored penalty;
running a schedule costs the defender its false-positive rate, and
mounting an attack costs the attacker its exploitability score.

Everything here is an immutable value; every operation is a pure function
and safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "GameValidationError",
    "ToolId",
    "VulnId",
    "Schedule",
    "TradeoffParams",
    "UtilityModel",
    "GameInstance",
    "MixedStrategy",
    "attacker_utility",
    "defender_utility",
    "coverage_payoff",
    "build_game",
    "expected_utilities",
    "attacker_best_responses",
    "BEST_RESPONSE_TOL",
]

# Absolute tolerance for attacker best-response ties.
BEST_RESPONSE_TOL = 1e-9

_PROB_SUM_TOL = 1e-9


class GameValidationError(ValueError):
    """A game-layer type invariant or argument contract was violated."""


def _frozen_array(values, dtype=np.float64, ndim: int | None = None) -> np.ndarray:
    arr = np.ascontiguousarray(values, dtype=dtype)
    if ndim is not None and arr.ndim != ndim:
        raise GameValidationError(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


def _check_index(i: int, size: int, what: str) -> None:
    if not 0 <= i < size:
        raise IndexError(f"{what} index {i} out of range [0, {size})")


@dataclass(frozen=True)
class ToolId:
    """A detection tool: display name plus a stable ordinal."""

    name: str
    index: int

    def __post_init__(self):
        if not self.name:
            raise GameValidationError("tool name must be non-empty")
        if self.index < 0:
            raise GameValidationError(f"tool index must be >= 0, got {self.index}")


@dataclass(frozen=True)
class VulnId:
    """A vulnerability (CVE identifier) plus its ordinal in the universe."""

    cve: str
    index: int

    def __post_init__(self):
        if not self.cve:
            raise GameValidationError("CVE identifier must be non-empty")
        if self.index < 0:
            raise GameValidationError(f"vulnerability index must be >= 0, got {self.index}")


@dataclass(frozen=True)
class Schedule:
    """A non-empty set of tools run together, kept in ascending index order."""

    tools: tuple[ToolId, ...]

    def __post_init__(self):
        if not self.tools:
            raise GameValidationError("a schedule must contain at least one tool")
        ordered = tuple(sorted(self.tools, key=lambda t: t.index))
        indices = [t.index for t in ordered]
        if len(set(indices)) != len(indices):
            raise GameValidationError(f"duplicate tools in schedule: {indices}")
        object.__setattr__(self, "tools", ordered)

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(t.index for t in self.tools)

    @property
    def name(self) -> str:
        return "+".join(t.name for t in self.tools)

    def __len__(self) -> int:
        return len(self.tools)


@dataclass(frozen=True)
class TradeoffParams:
    """Relative weighting of cost units against reward units per player."""

    gamma_a: float = 1.0
    gamma_d: float = 2.0

    def __post_init__(self):
        for label, g in (("gamma_a", self.gamma_a), ("gamma_d", self.gamma_d)):
            if not np.isfinite(g) or g < 0:
                raise GameValidationError(f"{label} must be finite and >= 0, got {g}")


@dataclass(frozen=True)
class UtilityModel:
    """Estimated parameters feeding the payoff matrices.

    ``detect_prob[s, v]`` is the probability that schedule ``s`` flags an
    attack on vulnerability ``v``.  Rewards/costs are per vulnerability
    except ``cost_d`` (per schedule, a false-positive rate in [0, 1]).
    """

    detect_prob: np.ndarray
    reward_a: np.ndarray
    reward_d: np.ndarray
    cost_a: np.ndarray
    cost_d: np.ndarray
    tradeoffs: TradeoffParams
    vuln_prior: np.ndarray

    def __post_init__(self):
        p = _frozen_array(self.detect_prob, ndim=2)
        bad = ~((p >= 0.0) & (p <= 1.0))  # catches NaN as well
        if bad.any():
            s, v = np.argwhere(bad)[0]
            raise GameValidationError(
                f"detection probability for (schedule {s}, vuln {v}) is "
                f"missing or outside [0, 1]: {p[s, v]}"
            )
        object.__setattr__(self, "detect_prob", p)
        num_s, num_v = p.shape

        fields = {
            "reward_a": (num_v, lambda a: (a >= 0).all(), ">= 0"),
            "reward_d": (num_v, lambda a: (a <= 0).all(), "<= 0"),
            "cost_a": (num_v, lambda a: (a >= 0).all(), ">= 0"),
            "cost_d": (num_s, lambda a: ((a >= 0) & (a <= 1)).all(), "in [0, 1]"),
        }
        for fname, (size, ok, desc) in fields.items():
            arr = _frozen_array(getattr(self, fname), ndim=1)
            if arr.shape[0] != size:
                raise GameValidationError(f"{fname} must have length {size}, got {arr.shape[0]}")
            if not np.isfinite(arr).all() or not ok(arr):
                raise GameValidationError(f"{fname} entries must be finite and {desc}")
            object.__setattr__(self, fname, arr)

        prior = _frozen_array(self.vuln_prior, ndim=1)
        _validate_distribution(prior, num_v, "vuln_prior")
        object.__setattr__(self, "vuln_prior", prior)

    @property
    def num_schedules(self) -> int:
        return self.detect_prob.shape[0]

    @property
    def num_vulns(self) -> int:
        return self.detect_prob.shape[1]


def _validate_distribution(arr: np.ndarray, size: int, what: str) -> None:
    if arr.shape[0] != size:
        raise GameValidationError(f"{what} must have length {size}, got {arr.shape[0]}")
    if not np.isfinite(arr).all() or (arr < 0).any() or (arr > 1).any():
        raise GameValidationError(f"{what} entries must lie in [0, 1]")
    total = float(arr.sum())
    if abs(total - 1.0) > _PROB_SUM_TOL:
        raise GameValidationError(f"{what} must sum to 1 within {_PROB_SUM_TOL}, got {total!r}")


@dataclass(frozen=True)
class GameInstance:
    """Payoff matrices over (schedule, vulnerability) pairs.

    This is the solver's sole input.  Instances normally come from
    :func:`build_game`, but raw payoff matrices are accepted directly via
    :meth:`from_payoffs` so table-given games (abstract defender actions
    rather than tool subsets) are first-class inputs.
    """

    schedules: tuple[Schedule, ...]
    vulns: tuple[VulnId, ...]
    u_d: np.ndarray
    u_a: np.ndarray
    vuln_prior: np.ndarray | None = None

    def __post_init__(self):
        shape = (len(self.schedules), len(self.vulns))
        if 0 in shape:
            raise GameValidationError("a game needs at least one schedule and one vulnerability")
        for fname in ("u_d", "u_a"):
            arr = _frozen_array(getattr(self, fname), ndim=2)
            if arr.shape != shape:
                raise GameValidationError(
                    f"{fname} has shape {arr.shape}, expected {shape} from the "
                    "schedule and vulnerability lists"
                )
            if not np.isfinite(arr).all():
                raise GameValidationError(f"{fname} entries must all be finite")
            object.__setattr__(self, fname, arr)
        if self.vuln_prior is not None:
            prior = _frozen_array(self.vuln_prior, ndim=1)
            _validate_distribution(prior, len(self.vulns), "vuln_prior")
            object.__setattr__(self, "vuln_prior", prior)

    @property
    def num_schedules(self) -> int:
        return len(self.schedules)

    @property
    def num_vulns(self) -> int:
        return len(self.vulns)

    @classmethod
    def from_payoffs(
        cls,
        u_d,
        u_a,
        action_names: Sequence[str] | None = None,
        vuln_names: Sequence[str] | None = None,
        vuln_prior=None,
    ) -> "GameInstance":
        """Build a game straight from payoff tables.

        Each defender action becomes a singleton schedule over a pseudo
        tool carrying the action's name.
        """
        u_d = np.asarray(u_d, dtype=np.float64)
        num_s, num_v = u_d.shape
        if action_names is None:
            action_names = [f"a{i}" for i in range(num_s)]
        if vuln_names is None:
            vuln_names = [f"v{j}" for j in range(num_v)]
        schedules = tuple(Schedule((ToolId(n, i),)) for i, n in enumerate(action_names))
        vulns = tuple(VulnId(n, j) for j, n in enumerate(vuln_names))
        return cls(schedules, vulns, u_d, u_a, vuln_prior)

    def restrict_schedules(self, keep: Sequence[int]) -> "GameInstance":
        """Sub-game over the given schedule indices (order preserved)."""
        keep = list(keep)
        if not keep:
            raise GameValidationError("cannot restrict a game to zero schedules")
        return GameInstance(
            tuple(self.schedules[i] for i in keep),
            self.vulns,
            self.u_d[keep, :],
            self.u_a[keep, :],
            self.vuln_prior,
        )


@dataclass(frozen=True)
class MixedStrategy:
    """A probability distribution over the defender's schedules."""

    probs: np.ndarray

    def __post_init__(self):
        arr = _frozen_array(self.probs, ndim=1)
        _validate_distribution(arr, arr.shape[0], "strategy")
        object.__setattr__(self, "probs", arr)

    @classmethod
    def uniform(cls, n: int) -> "MixedStrategy":
        return cls(np.full(n, 1.0 / n))

    @classmethod
    def pure(cls, index: int, n: int) -> "MixedStrategy":
        _check_index(index, n, "schedule")
        probs = np.zeros(n)
        probs[index] = 1.0
        return cls(probs)

    @property
    def support_size(self) -> int:
        return int((self.probs > 1e-9).sum())

    def __len__(self) -> int:
        return len(self.probs)


def attacker_utility(model: UtilityModel, s: int, v: int) -> float:
    """Attacker payoff for (schedule s, vulnerability v).

    The attack cost is sunk whether or not the attack is detected; the
    reward only materializes when detection fails.
    """
    _check_index(s, model.num_schedules, "schedule")
    _check_index(v, model.num_vulns, "vulnerability")
    p = model.detect_prob[s, v]
    return float((1.0 - p) * model.reward_a[v] - model.tradeoffs.gamma_a * model.cost_a[v])


def defender_utility(model: UtilityModel, s: int, v: int) -> float:
    """Defender payoff for (schedule s, vulnerability v).

    A detected attack is worth zero; an undetected one costs the (negative)
    reward, and the schedule's false-positive cost is always paid.
    """
    _check_index(s, model.num_schedules, "schedule")
    _check_index(v, model.num_vulns, "vulnerability")
    p = model.detect_prob[s, v]
    return float((1.0 - p) * model.reward_d[v] - model.tradeoffs.gamma_d * model.cost_d[s])


def coverage_payoff(coverage: float, covered_value: float, uncovered_value: float) -> float:
    """Expected payoff of attacking a target covered with the given probability."""
    if not 0.0 <= coverage <= 1.0:
        raise GameValidationError(f"coverage probability must lie in [0, 1], got {coverage}")
    return coverage * covered_value + (1.0 - coverage) * uncovered_value


def build_game(
    model: UtilityModel,
    schedules: Sequence[Schedule],
    vulns: Sequence[VulnId],
) -> GameInstance:
    """Materialize both payoff matrices from a utility model."""
    if model.num_schedules != len(schedules) or model.num_vulns != len(vulns):
        raise GameValidationError(
            f"model covers {model.num_schedules}x{model.num_vulns} (schedule, vuln) "
            f"pairs but {len(schedules)}x{len(vulns)} were requested"
        )
    p = model.detect_prob
    miss = 1.0 - p
    u_a = miss * model.reward_a[None, :] - model.tradeoffs.gamma_a * model.cost_a[None, :]
    u_d = miss * model.reward_d[None, :] - model.tradeoffs.gamma_d * model.cost_d[:, None]
    return GameInstance(tuple(schedules), tuple(vulns), u_d, u_a, model.vuln_prior)


def expected_utilities(
    game: GameInstance,
    defender: MixedStrategy,
    attacker,
) -> tuple[float, float]:
    """Expected (defender, attacker) utility of a mixed-strategy profile."""
    if len(defender) != game.num_schedules:
        raise GameValidationError(
            f"defender strategy has {len(defender)} entries for {game.num_schedules} schedules"
        )
    att = np.asarray(attacker, dtype=np.float64)
    if att.ndim != 1 or att.shape[0] != game.num_vulns:
        raise GameValidationError(
            f"attacker strategy has shape {att.shape} for {game.num_vulns} vulnerabilities"
        )
    _validate_distribution(att, game.num_vulns, "attacker strategy")
    d = defender.probs
    return float(d @ game.u_d @ att), float(d @ game.u_a @ att)


def attacker_best_responses(
    game: GameInstance,
    defender: MixedStrategy,
    tol: float = BEST_RESPONSE_TOL,
) -> set[int]:
    """All vulnerabilities maximizing the attacker's expected utility.

    Ties are resolved as the full argmax set under an absolute tolerance.
    """
    if len(defender) != game.num_schedules:
        raise GameValidationError(
            f"defender strategy has {len(defender)} entries for {game.num_schedules} schedules"
        )
    expected = defender.probs @ game.u_a
    return set(np.flatnonzero(expected >= expected.max() - tol).tolist())


def tool_list(names: Iterable[str]) -> list[ToolId]:
    """Assign stable ordinals to tool names (given order)."""
    return [ToolId(name, i) for i, name in enumerate(names)]


def vuln_list(cves: Iterable[str]) -> list[VulnId]:
    """Assign stable ordinals to CVE identifiers (given order)."""
    return [VulnId(cve, i) for i, cve in enumerate(cves)]
