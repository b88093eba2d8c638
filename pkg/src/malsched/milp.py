"""Mixed-integer encoding of the full game, written to an LP-format file.

The file targets external MILP solvers for cross-validation; the in-tree
solver (:mod:`malsched.solver`) never reads it, because enumerating the
attacker's pure targets solves the same problem exactly with plain LPs.

Encoding, for defender probabilities ``p_s``, attack indicators ``y_v``
and free utility variables ``Ud``/``Ua`` with a large constant ``Z``::

    maximize Ud
    sum_v y_v = 1                                 (single target)
    sum_s p_s = 1                                 (valid distribution)
    Ud - sum_s u_d(s,v) p_s <= (1 - y_v) Z        (per v)
    Ua - sum_s u_a(s,v) p_s >= 0                  (per v)
    Ua - sum_s u_a(s,v) p_s <= (1 - y_v) Z        (per v)
    p_s in [0, 1],  y_v binary,  Ud, Ua free

which makes the attacked target a best response and binds ``Ud`` to the
defender's expected utility against it.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .game import GameInstance

__all__ = [
    "MilpEmitConfig",
    "MilpSummary",
    "ParsedLpFile",
    "LpFileRow",
    "emit_milp",
    "effective_big_z",
    "read_lp_file",
    "restricted_rows",
]

# Print floats so that parsing the file back recovers them exactly.
_NUM = "{:.17g}"


@dataclass(frozen=True)
class MilpEmitConfig:
    """``big_z`` must dominate every utility gap; an instance-aware floor of
    ten times the widest payoff range is applied on top of it."""

    big_z: float = 1e6

    def __post_init__(self):
        if not np.isfinite(self.big_z) or self.big_z <= 0:
            raise ValueError(f"big_z must be positive and finite, got {self.big_z}")


@dataclass(frozen=True)
class MilpSummary:
    num_vars: int
    num_constraints: int
    big_z: float
    path: str


def effective_big_z(game: GameInstance, cfg: MilpEmitConfig) -> float:
    span = max(
        float(game.u_d.max() - game.u_d.min()),
        float(game.u_a.max() - game.u_a.min()),
    )
    return max(cfg.big_z, 10.0 * span)


def _terms(pairs) -> str:
    """Render [(coef, name), ...] skipping zero coefficients."""
    parts: list[str] = []
    for coef, name in pairs:
        if coef == 0.0:
            continue
        sign = "-" if coef < 0 else "+"
        mag = abs(coef)
        if mag == 1.0:
            body = name
        else:
            body = f"{_NUM.format(mag)} {name}"
        if not parts and sign == "+":
            parts.append(body)
        else:
            parts.append(f"{sign} {body}")
    return " ".join(parts) if parts else "0 " + pairs[0][1]


def emit_milp(game: GameInstance, cfg: MilpEmitConfig, path) -> MilpSummary:
    """Write the game's MILP; returns variable/constraint counts."""
    num_s, num_v = game.num_schedules, game.num_vulns
    z = effective_big_z(game, cfg)
    p = [f"p_{s}" for s in range(num_s)]
    y = [f"y_{v}" for v in range(num_v)]

    lines = ["Maximize", " obj: Ud", "Subject To"]
    k = 0

    def row(expr: str, rel: str, rhs: float) -> None:
        nonlocal k
        k += 1
        lines.append(f" c{k}: {expr} {rel} {_NUM.format(rhs)}")

    row(_terms([(1.0, name) for name in y]), "=", 1.0)
    row(_terms([(1.0, name) for name in p]), "=", 1.0)
    for v in range(num_v):
        pairs = [(1.0, "Ud")]
        pairs += [(-game.u_d[s, v], p[s]) for s in range(num_s)]
        pairs.append((z, y[v]))
        row(_terms(pairs), "<=", z)
    for v in range(num_v):
        pairs = [(1.0, "Ua")]
        pairs += [(-game.u_a[s, v], p[s]) for s in range(num_s)]
        row(_terms(pairs), ">=", 0.0)
    for v in range(num_v):
        pairs = [(1.0, "Ua")]
        pairs += [(-game.u_a[s, v], p[s]) for s in range(num_s)]
        pairs.append((z, y[v]))
        row(_terms(pairs), "<=", z)

    lines.append("Bounds")
    for name in p:
        lines.append(f" 0 <= {name} <= 1")
    lines.append(" Ud free")
    lines.append(" Ua free")
    lines.append("Binaries")
    lines.append(" " + " ".join(y))
    lines.append("End")

    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")
    return MilpSummary(num_s + num_v + 2, k, z, str(path))


# ---------------------------------------------------------------------------
# Round-trip reader for the subset of LP format emitted above.


@dataclass(frozen=True)
class LpFileRow:
    name: str
    coefs: dict[str, float]
    relation: str
    rhs: float


@dataclass(frozen=True)
class ParsedLpFile:
    objective: dict[str, float]
    rows: tuple[LpFileRow, ...] = ()
    bounds: dict[str, tuple[float, float]] = field(default_factory=dict)
    free: frozenset[str] = frozenset()
    binaries: frozenset[str] = frozenset()

    def row_by_name(self, name: str) -> LpFileRow:
        for row in self.rows:
            if row.name == name:
                return row
        raise KeyError(name)


_TERM_RE = re.compile(r"([+-])?\s*(\d+(?:\.\d*)?(?:[eE][+-]?\d+)?)?\s*([A-Za-z_][\w]*)")


def _parse_expr(text: str) -> dict[str, float]:
    coefs: dict[str, float] = {}
    pos = 0
    text = text.strip()
    while pos < len(text):
        match = _TERM_RE.match(text, pos)
        if match is None:
            raise ValueError(f"cannot parse LP expression at {text[pos:]!r}")
        sign, number, name = match.groups()
        value = float(number) if number is not None else 1.0
        if sign == "-":
            value = -value
        coefs[name] = coefs.get(name, 0.0) + value
        pos = match.end()
        while pos < len(text) and text[pos] == " ":
            pos += 1
    return coefs


def read_lp_file(path) -> ParsedLpFile:
    """Parse an emitted file back into coefficient maps."""
    objective: dict[str, float] = {}
    rows: list[LpFileRow] = []
    bounds: dict[str, tuple[float, float]] = {}
    free: set[str] = set()
    binaries: set[str] = set()
    section = None
    with open(path, encoding="ascii") as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            keyword = line.lower()
            if keyword in ("maximize", "subject to", "bounds", "binaries", "end"):
                section = keyword
                continue
            if section == "maximize":
                _, expr = line.split(":", 1)
                objective.update(_parse_expr(expr))
            elif section == "subject to":
                name, rest = line.split(":", 1)
                match = re.search(r"(<=|>=|=)", rest)
                if match is None:
                    raise ValueError(f"constraint {name!r} has no relation")
                rel = match.group(1)
                expr, rhs = rest.split(rel, 1)
                rows.append(LpFileRow(name.strip(), _parse_expr(expr), rel, float(rhs)))
            elif section == "bounds":
                if line.endswith(" free"):
                    free.add(line[: -len(" free")].strip())
                else:
                    lo, name, hi = re.fullmatch(
                        r"(\S+)\s*<=\s*(\S+)\s*<=\s*(\S+)", line
                    ).groups()
                    bounds[name] = (float(lo), float(hi))
            elif section == "binaries":
                binaries.update(line.split())
    return ParsedLpFile(objective, tuple(rows), bounds, frozenset(free), frozenset(binaries))


def restricted_rows(parsed: ParsedLpFile, target: int, num_schedules: int, num_vulns: int):
    """Fix ``y_target`` := 1 and eliminate ``Ud``/``Ua`` from the file.

    Returns (objective coefficients over p, best-response rows over p, both
    as arrays) for structural comparison with the per-target LP that the
    equilibrium solver builds directly.
    """
    p_names = [f"p_{s}" for s in range(num_schedules)]

    def p_vector(coefs) -> np.ndarray:
        return np.array([coefs.get(name, 0.0) for name in p_names])

    named = {row.name: row for row in parsed.rows}
    # Rows appear in emission order: 2 distribution rows, then the defender
    # block, the attacker lower block, and the attacker upper block.
    defender = named[f"c{3 + target}"]
    # Binding Ud <= sum u_d p: the maximized objective equals that sum.
    objective = -p_vector(defender.coefs)
    lower = {v: named[f"c{3 + num_vulns + v}"] for v in range(num_vulns)}
    u_a_target = -p_vector(lower[target].coefs)
    br_rows = []
    for v in range(num_vulns):
        if v == target:
            continue
        # Ua - sum u_a(.,v) p >= 0 with Ua = sum u_a(.,target) p.
        br_rows.append(u_a_target - (-p_vector(lower[v].coefs)))
    return objective, br_rows
