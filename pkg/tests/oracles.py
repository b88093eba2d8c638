"""Independent brute-force oracles for cross-checking the solvers.

These deliberately avoid the production code paths: linear programs are
checked by dense vertex enumeration, the equilibrium by enumerating the
vertices of every per-target polytope, and pruning by quadratic pairwise
comparison.
"""

from __future__ import annotations

import itertools

import numpy as np

FEAS_TOL = 1e-9


def polytope_simplex_max(c, ineq_rows, tol: float = FEAS_TOL):
    """max c @ p over {p >= 0, sum(p) = 1, row @ p >= 0} by enumerating
    basic feasible points; None when the region is empty."""
    c = np.asarray(c, dtype=float)
    n = c.shape[0]
    planes = [np.eye(n)[j] for j in range(n)]
    planes += [np.asarray(r, dtype=float) for r in ineq_rows]
    best = None
    for combo in itertools.combinations(range(len(planes)), n - 1):
        a = np.vstack([np.ones(n)] + [planes[i] for i in combo])
        rhs = np.zeros(n)
        rhs[0] = 1.0
        try:
            p = np.linalg.solve(a, rhs)
        except np.linalg.LinAlgError:
            continue
        if (p < -tol).any():
            continue
        if any(row @ p < -tol for row in ineq_rows):
            continue
        value = float(c @ p)
        if best is None or value > best:
            best = value
    return best


def sse_value_oracle(u_d, u_a):
    """Optimal commitment value via per-target vertex enumeration."""
    u_d = np.asarray(u_d, dtype=float)
    u_a = np.asarray(u_a, dtype=float)
    num_v = u_d.shape[1]
    best = None
    for v in range(num_v):
        rows = [u_a[:, v] - u_a[:, v2] for v2 in range(num_v) if v2 != v]
        value = polytope_simplex_max(u_d[:, v], rows)
        if value is not None and (best is None or value > best):
            best = value
    return best


def sse_value_grid_oracle_2(u_d, u_a, step: float = 1e-4):
    """Grid search over the 1-d defender simplex (two schedules only)."""
    u_d = np.asarray(u_d, dtype=float)
    u_a = np.asarray(u_a, dtype=float)
    assert u_d.shape[0] == 2
    q = np.linspace(0.0, 1.0, round(1.0 / step) + 1)
    strategies = np.stack([1.0 - q, q], axis=1)  # (grid, 2)
    e_a = strategies @ u_a
    e_d = strategies @ u_d
    best = e_a.max(axis=1, keepdims=True)
    best_value = -np.inf
    for v in range(u_d.shape[1]):
        feasible = e_a[:, v] >= best[:, 0] - FEAS_TOL
        if feasible.any():
            best_value = max(best_value, float(e_d[feasible, v].max()))
    return best_value


def lp_vertex_max(lp):
    """max objective over an LP's feasible region by vertex enumeration.

    Only meaningful for bounded regions; returns None when no feasible
    vertex exists.
    """
    n = lp.num_vars
    planes: list[tuple[np.ndarray, float]] = []
    forced: list[tuple[np.ndarray, float]] = []
    for i in range(lp.num_constraints):
        row, rel, rhs = lp.constraint(i)
        if rel == "=":
            forced.append((row, rhs))
        else:
            planes.append((row, rhs))
    for j in range(n):
        unit = np.eye(n)[j]
        if np.isfinite(lp.lower[j]):
            planes.append((unit, float(lp.lower[j])))
        if np.isfinite(lp.upper[j]):
            planes.append((unit, float(lp.upper[j])))
    need = n - len(forced)
    if need < 0:
        return None
    best = None
    for combo in itertools.combinations(range(len(planes)), need):
        rows = forced + [planes[i] for i in combo]
        a = np.vstack([r for r, _ in rows])
        rhs = np.array([b for _, b in rows])
        try:
            x = np.linalg.solve(a, rhs)
        except np.linalg.LinAlgError:
            continue
        if not _feasible(lp, x):
            continue
        value = float(lp.objective @ x)
        if best is None or value > best:
            best = value
    return best


def _feasible(lp, x, tol: float = 1e-7) -> bool:
    if (x < lp.lower - tol).any() or (x > lp.upper + tol).any():
        return False
    values = lp.lhs @ x
    for i in range(lp.num_constraints):
        _, rel, rhs = lp.constraint(i)
        if rel == "<=" and values[i] > rhs + tol:
            return False
        if rel == ">=" and values[i] < rhs - tol:
            return False
        if rel == "=" and abs(values[i] - rhs) > tol:
            return False
    return True


def dominance_oracle(u_d):
    """Quadratic pairwise scan; returns (kept set, dominated set)."""
    u_d = np.asarray(u_d, dtype=float)
    n = u_d.shape[0]
    dominated = set()
    for i in range(n):
        for j in range(n):
            if i != j and (u_d[j] >= u_d[i]).all() and (u_d[j] > u_d[i]).any():
                dominated.add(i)
                break
    return set(range(n)) - dominated, dominated


def expected_pair_oracle(u_d, u_a, defender, attacker):
    """Plain double loop over action profiles."""
    total_d = 0.0
    total_a = 0.0
    for s in range(len(defender)):
        for v in range(len(attacker)):
            w = defender[s] * attacker[v]
            total_d += w * u_d[s][v]
            total_a += w * u_a[s][v]
    return total_d, total_a
