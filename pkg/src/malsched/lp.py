"""Self-contained dense linear-program solver (two-phase simplex).

Programs are maximization problems over real variables with arbitrary
``<=``/``>=``/``=`` rows and per-variable bounds defaulting to [0, +inf).
The solver is deterministic: entering variables follow Bland's smallest-
index rule (anti-cycling) and ratio-test ties break on the smallest basis
index.

The pivot loop is the hot kernel; it ships as a numba ``@njit`` build and
a vectorized numpy build (see :mod:`malsched._accel`).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._accel import USING_NUMBA, njit

__all__ = [
    "LpValidationError",
    "LpNumericsError",
    "LpStatus",
    "LinearProgram",
    "LpSolution",
    "maximize",
    "solve_lp",
    "residuals",
]

LE, GE, EQ = 0, 1, 2
_REL_CODES = {"<=": LE, ">=": GE, "=": EQ, "==": EQ}
_REL_TEXT = {LE: "<=", GE: ">=", EQ: "="}

# Reduced-cost tolerance, pivot-element tolerance, residual acceptance.
TOL_REDUCED_COST = 1e-9
TOL_PIVOT = 1e-9
TOL_RESIDUAL = 1e-7
TOL_BOUNDS = 1e-9


class LpValidationError(ValueError):
    """The program is malformed (NaN/inf coefficient, shape mismatch...)."""


class LpNumericsError(RuntimeError):
    """The solver failed to produce a solution meeting its own tolerances."""


class LpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LinearProgram:
    """max objective @ x  s.t.  lhs @ x (rel) rhs,  lower <= x <= upper."""

    objective: np.ndarray
    lhs: np.ndarray
    relations: np.ndarray
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    @property
    def num_vars(self) -> int:
        return self.objective.shape[0]

    @property
    def num_constraints(self) -> int:
        return self.rhs.shape[0]

    def constraint(self, i: int) -> tuple[np.ndarray, str, float]:
        return self.lhs[i], _REL_TEXT[int(self.relations[i])], float(self.rhs[i])


def maximize(
    objective,
    constraints: Sequence[tuple] = (),
    bounds: Sequence[tuple[float, float] | None] | None = None,
) -> LinearProgram:
    """Assemble a maximization program.

    ``constraints`` holds (coefficients, relation, rhs) triples with
    relation one of ``"<="``, ``">="``, ``"="``.  ``bounds`` gives (lo, hi)
    per variable; ``None`` entries (or a ``None`` table) mean [0, +inf).
    """
    c = np.ascontiguousarray(objective, dtype=np.float64)
    if c.ndim != 1:
        raise LpValidationError(f"objective must be a vector, got shape {c.shape}")
    n = c.shape[0]
    m = len(constraints)
    lhs = np.zeros((m, n))
    rel = np.zeros(m, dtype=np.int8)
    rhs = np.zeros(m)
    for i, (coefs, relation, b) in enumerate(constraints):
        row = np.asarray(coefs, dtype=np.float64)
        if row.shape != (n,):
            raise LpValidationError(
                f"constraint {i} has {row.shape[0] if row.ndim == 1 else '?'} "
                f"coefficients, expected {n}"
            )
        if relation not in _REL_CODES:
            raise LpValidationError(f"constraint {i}: unknown relation {relation!r}")
        lhs[i] = row
        rel[i] = _REL_CODES[relation]
        rhs[i] = b
    lower = np.zeros(n)
    upper = np.full(n, np.inf)
    if bounds is not None:
        if len(bounds) != n:
            raise LpValidationError(f"bounds table has {len(bounds)} entries for {n} variables")
        for j, entry in enumerate(bounds):
            if entry is None:
                continue
            lo, hi = entry
            lower[j] = -np.inf if lo is None else lo
            upper[j] = np.inf if hi is None else hi
    lp = LinearProgram(c, lhs, rel, rhs, lower, upper)
    _validate(lp)
    return lp


def _validate(lp: LinearProgram) -> None:
    if lp.lhs.shape != (lp.rhs.shape[0], lp.objective.shape[0]):
        raise LpValidationError(
            f"inconsistent shapes: lhs {lp.lhs.shape}, rhs {lp.rhs.shape}, "
            f"objective {lp.objective.shape}"
        )
    for name, arr in (("objective", lp.objective), ("lhs", lp.lhs), ("rhs", lp.rhs)):
        if not np.isfinite(arr).all():
            raise LpValidationError(f"{name} contains NaN or infinite coefficients")
    if np.isnan(lp.lower).any() or np.isnan(lp.upper).any():
        raise LpValidationError("bounds may be infinite but not NaN")


@dataclass(frozen=True)
class LpSolution:
    status: LpStatus
    x: np.ndarray | None = None
    objective_value: float | None = None


# ---------------------------------------------------------------------------
# Simplex kernel: iterate a dense tableau to optimality.
#
# Tableau layout: rows 0..m-1 are constraints, row m is the objective in
# "reduced cost" form (entering columns have T[m, j] < -tol_rc); the last
# column is the RHS.  Returns 0 = optimal, 1 = unbounded, 2 = iteration cap.


def _simplex_core_py(T, basis, tol_rc, tol_piv, max_iter):
    m = T.shape[0] - 1
    last = T.shape[1] - 1
    for _ in range(max_iter):
        enter = -1
        for j in range(last):
            if T[m, j] < -tol_rc:
                enter = j
                break
        if enter < 0:
            return 0
        leave = -1
        best = np.inf
        for i in range(m):
            a = T[i, enter]
            if a > tol_piv:
                r = T[i, last] / a
                if leave < 0 or r < best or (r == best and basis[i] < basis[leave]):
                    best = r
                    leave = i
        if leave < 0:
            return 1
        piv = T[leave, enter]
        T[leave, :] /= piv
        for i in range(m + 1):
            if i != leave:
                f = T[i, enter]
                if f != 0.0:
                    T[i, :] -= f * T[leave, :]
        basis[leave] = enter
    return 2


_simplex_core_jit = njit(cache=True)(_simplex_core_py)


def _simplex_core_np(T, basis, tol_rc, tol_piv, max_iter):
    m = T.shape[0] - 1
    last = T.shape[1] - 1
    for _ in range(max_iter):
        entering = np.flatnonzero(T[m, :last] < -tol_rc)
        if entering.size == 0:
            return 0
        enter = int(entering[0])
        col = T[:m, enter]
        ratios = np.full(m, np.inf)
        positive = col > tol_piv
        if not positive.any():
            return 1
        ratios[positive] = T[:m, last][positive] / col[positive]
        best = ratios.min()
        tied = np.flatnonzero(ratios == best)
        leave = int(tied[np.argmin(basis[tied])])
        T[leave, :] /= T[leave, enter]
        factors = T[:, enter].copy()
        factors[leave] = 0.0
        T -= np.outer(factors, T[leave, :])
        basis[leave] = enter
    return 2


_simplex_core = _simplex_core_jit if USING_NUMBA else _simplex_core_np


# ---------------------------------------------------------------------------
# Standard-form reduction and the two phases.


def _run_phase(T, basis, max_iter):
    return _simplex_core(T, np.asarray(basis), TOL_REDUCED_COST, TOL_PIVOT, max_iter)


def _solve_standard(A, rel, b, c):
    """max c @ y  s.t.  A y (rel) b, y >= 0.  Returns (status, y, value)."""
    m, n = A.shape
    A = A.copy()
    b = b.copy()
    rel = rel.copy()
    neg = b < 0
    if neg.any():
        A[neg] *= -1.0
        b[neg] *= -1.0
        flip = rel[neg]
        flip = np.where(flip == LE, GE, np.where(flip == GE, LE, EQ)).astype(np.int8)
        rel[neg] = flip

    le_rows = np.flatnonzero(rel == LE)
    ge_rows = np.flatnonzero(rel == GE)
    art_rows = np.flatnonzero(rel != LE)
    n_slack, n_surp, n_art = len(le_rows), len(ge_rows), len(art_rows)
    slack0 = n
    surp0 = slack0 + n_slack
    art0 = surp0 + n_surp
    width = art0 + n_art + 1

    T = np.zeros((m + 1, width))
    T[:m, :n] = A
    T[:m, -1] = b
    basis = np.empty(m, dtype=np.int64)
    for k, i in enumerate(le_rows):
        T[i, slack0 + k] = 1.0
        basis[i] = slack0 + k
    for k, i in enumerate(ge_rows):
        T[i, surp0 + k] = -1.0
    for k, i in enumerate(art_rows):
        T[i, art0 + k] = 1.0
        basis[i] = art0 + k

    max_iter = 200 * (m + width) + 1000

    if n_art:
        # Phase 1: maximize -(sum of artificials); feasible iff optimum ~ 0.
        T[m, art0:art0 + n_art] = 1.0
        for i in art_rows:
            T[m, :] -= T[i, :]
        status = _run_phase(T, basis, max_iter)
        if status != 0:
            # Phase 1 maximizes -(sum of artificials) <= 0: it cannot be
            # unbounded, and Bland's rule rules out cycling.
            raise LpNumericsError(f"phase-1 simplex failed with status {status}")
        if T[m, -1] < -TOL_RESIDUAL:
            return LpStatus.INFEASIBLE, None, None
        # Drive leftover artificial variables out of the basis.
        drop_rows = []
        for i in range(m):
            if basis[i] >= art0:
                pivot_col = -1
                for j in range(art0):
                    if abs(T[i, j]) > TOL_PIVOT:
                        pivot_col = j
                        break
                if pivot_col < 0:
                    drop_rows.append(i)  # redundant constraint
                    continue
                T[i, :] /= T[i, pivot_col]
                for r in range(m + 1):
                    if r != i:
                        f = T[r, pivot_col]
                        if f != 0.0:
                            T[r, :] -= f * T[i, :]
                basis[i] = pivot_col
        if drop_rows:
            keep = [i for i in range(m) if i not in set(drop_rows)]
            T = np.vstack([T[keep, :], T[m:, :]])
            basis = basis[keep]
            m = len(keep)

    # Phase 2 on the tableau without artificial columns.
    T2 = np.zeros((m + 1, art0 + 1))
    T2[:m, :art0] = T[:m, :art0]
    T2[:m, -1] = T[:m, -1]
    T2[m, :n] = -c
    for i in range(m):
        j = basis[i]
        f = T2[m, j]
        if f != 0.0:
            T2[m, :] -= f * T2[i, :]
    status = _run_phase(T2, basis, max_iter)
    if status == 2:
        raise LpNumericsError("phase-2 simplex exceeded its iteration cap")
    if status == 1:
        return LpStatus.UNBOUNDED, None, None
    y = np.zeros(art0)
    for i in range(m):
        y[basis[i]] = T2[i, -1]
    return LpStatus.OPTIMAL, y[:n], float(T2[m, -1])


def solve_lp(lp: LinearProgram) -> LpSolution:
    """Solve the program; deterministic for identical inputs."""
    _validate(lp)
    n = lp.num_vars
    if (lp.lower > lp.upper).any():
        return LpSolution(LpStatus.INFEASIBLE)

    # Reduce to standard form (all variables >= 0): shift finite lower
    # bounds, mirror upper-bounded-only variables, split free ones.
    col_of = np.full(n, -1, dtype=np.int64)  # primary column per variable
    neg_col = np.full(n, -1, dtype=np.int64)  # second column for free vars
    offset = np.zeros(n)
    sign = np.ones(n)
    cols = 0
    extra_rows: list[tuple[int, float]] = []  # (variable, width) for x <= hi
    for j in range(n):
        lo, hi = lp.lower[j], lp.upper[j]
        if np.isneginf(lo) and np.isposinf(hi):
            col_of[j] = cols
            neg_col[j] = cols + 1
            cols += 2
        elif np.isneginf(lo):
            col_of[j] = cols  # x = hi - y
            offset[j] = hi
            sign[j] = -1.0
            cols += 1
        else:
            col_of[j] = cols  # x = lo + y
            offset[j] = lo
            cols += 1
            if not np.isposinf(hi):
                extra_rows.append((j, hi - lo))

    free = neg_col >= 0
    m = lp.num_constraints
    A = np.zeros((m + len(extra_rows), cols))
    rel = np.zeros(m + len(extra_rows), dtype=np.int8)
    b = np.zeros(m + len(extra_rows))
    for i in range(m):
        row = lp.lhs[i]
        A[i, col_of] += row * sign
        if free.any():
            A[i, neg_col[free]] -= row[free]
        rel[i] = lp.relations[i]
        b[i] = lp.rhs[i] - row @ offset
    for k, (j, width) in enumerate(extra_rows):
        A[m + k, col_of[j]] = 1.0
        rel[m + k] = LE
        b[m + k] = width

    c = np.zeros(cols)
    c[col_of] += lp.objective * sign
    if free.any():
        c[neg_col[free]] -= lp.objective[free]

    status, y, _ = _solve_standard(A, rel, b, c)
    if status is not LpStatus.OPTIMAL:
        return LpSolution(status)

    x = offset + sign * y[col_of]
    x[free] = y[col_of[free]] - y[neg_col[free]]
    # Snap solutions onto their box; anything larger than the tolerance is
    # a solver defect, not an input property.
    viol = np.maximum(lp.lower - x, x - lp.upper)
    if (viol > TOL_BOUNDS).any():
        raise LpNumericsError(f"bound violation {viol.max():.3e} exceeds {TOL_BOUNDS}")
    x = np.minimum(np.maximum(x, lp.lower), lp.upper)
    worst = residuals(lp, x).max() if lp.num_constraints else 0.0
    if worst > TOL_RESIDUAL:
        raise LpNumericsError(f"constraint residual {worst:.3e} exceeds {TOL_RESIDUAL}")
    return LpSolution(LpStatus.OPTIMAL, x, float(lp.objective @ x))


def residuals(lp: LinearProgram, x: np.ndarray) -> np.ndarray:
    """Per-constraint violation of ``x`` (0 when satisfied)."""
    values = lp.lhs @ x
    out = np.zeros(lp.num_constraints)
    le = lp.relations == LE
    ge = lp.relations == GE
    eq = lp.relations == EQ
    out[le] = np.maximum(0.0, values[le] - lp.rhs[le])
    out[ge] = np.maximum(0.0, lp.rhs[ge] - values[ge])
    out[eq] = np.abs(values[eq] - lp.rhs[eq])
    return out
