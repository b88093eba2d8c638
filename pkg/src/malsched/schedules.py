"""Budget-bounded schedule enumeration and dominated-schedule pruning.

A schedule is dominated when some other schedule gives the defender at
least the same utility against every vulnerability and strictly more
against at least one.  Pruning finds the unique maximal non-dominated set.

Pruning is lossy under leader-follower play (removing a dominated row can
push the attacker onto a target that hurts the defender more), so callers
must opt in explicitly.

The sweep sorts utility rows in descending lexicographic order, which
guarantees every dominator of a row precedes it; each row is then compared
against the frontier of survivors only, and transitivity covers the rest.
The frontier comparison is the hot kernel (numba / numpy builds); the
parallel path partitions candidates into blocks compared against a shared
frontier that is synchronized between blocks.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._accel import USING_NUMBA, njit, prange
from .game import GameInstance, Schedule, ToolId

__all__ = [
    "ScheduleSet",
    "PruneResult",
    "count_schedules",
    "enumerate_schedules",
    "prune_dominated",
]


@dataclass(frozen=True)
class ScheduleSet:
    """Every non-empty tool subset of size <= budget, canonically ordered.

    Ordering is by size, then lexicographically by tool indices.
    """

    budget: int
    schedules: tuple[Schedule, ...]

    def __post_init__(self):
        if self.budget < 1:
            raise ValueError(f"budget must be >= 1, got {self.budget}")

    def __len__(self) -> int:
        return len(self.schedules)


def count_schedules(num_tools: int, budget: int) -> int:
    """Number of schedules without materializing them."""
    _check_budget(num_tools, budget)
    return sum(math.comb(num_tools, k) for k in range(1, budget + 1))


def _check_budget(num_tools: int, budget: int) -> None:
    if num_tools < 1:
        raise ValueError(f"need at least one tool, got {num_tools}")
    if not 1 <= budget <= num_tools:
        raise ValueError(f"budget must lie in [1, {num_tools}], got {budget}")


def enumerate_schedules(tools: Sequence[ToolId] | int, budget: int) -> ScheduleSet:
    """Materialize the schedule set for the given tools (or tool count)."""
    if isinstance(tools, int):
        tools = [ToolId(f"t{i:03d}", i) for i in range(tools)]
    else:
        tools = sorted(tools, key=lambda t: t.index)
    _check_budget(len(tools), budget)
    out = []
    for size in range(1, budget + 1):
        for combo in itertools.combinations(tools, size):
            out.append(Schedule(combo))
    return ScheduleSet(budget, tuple(out))


@dataclass(frozen=True)
class PruneResult:
    """kept: surviving schedule indices (ascending); removed: (dominated,
    dominator) witness pairs, ascending by dominated index."""

    kept: tuple[int, ...]
    removed: tuple[tuple[int, int], ...]


# ---------------------------------------------------------------------------
# Kernels.  All comparisons are exact (no epsilon): near-ties never prune.


def _prune_sweep_py(rows):
    """Sequential sweep over descending-lexicographic rows.

    Returns witness[i] = sorted position of the first surviving dominator,
    or -1 when row i itself survives.
    """
    n, width = rows.shape
    frontier = np.empty(n, np.int64)
    count = 0
    witness = np.full(n, -1, np.int64)
    for pos in range(n):
        hit = -1
        for fi in range(count):
            r = frontier[fi]
            ge_all = True
            gt_any = False
            for j in range(width):
                a = rows[r, j]
                b = rows[pos, j]
                if a < b:
                    ge_all = False
                    break
                if a > b:
                    gt_any = True
            if ge_all and gt_any:
                hit = r
                break
        if hit < 0:
            frontier[count] = pos
            count += 1
        else:
            witness[pos] = hit
    return witness


_prune_sweep_jit = njit(cache=True)(_prune_sweep_py)


def _prune_sweep_np(rows):
    n = rows.shape[0]
    frontier = np.empty(n, np.int64)
    count = 0
    witness = np.full(n, -1, np.int64)
    for pos in range(n):
        if count:
            front = rows[frontier[:count]]
            dom = (front >= rows[pos]).all(axis=1) & (front > rows[pos]).any(axis=1)
            hits = np.flatnonzero(dom)
        else:
            hits = ()
        if len(hits):
            witness[pos] = frontier[hits[0]]
        else:
            frontier[count] = pos
            count += 1
    return witness


def _block_vs_frontier_py(rows, frontier, count, start, stop, out):
    """First frontier dominator per candidate in [start, stop), else -1."""
    width = rows.shape[1]
    for pos in prange(start, stop):
        hit = -1
        for fi in range(count):
            r = frontier[fi]
            ge_all = True
            gt_any = False
            for j in range(width):
                a = rows[r, j]
                b = rows[pos, j]
                if a < b:
                    ge_all = False
                    break
                if a > b:
                    gt_any = True
            if ge_all and gt_any:
                hit = r
                break
        out[pos - start] = hit


_block_vs_frontier_jit = njit(cache=True, parallel=True)(_block_vs_frontier_py)


def _block_vs_frontier_np(rows, frontier, count, start, stop, out):
    block = rows[start:stop]
    if count == 0:
        out[:] = -1
        return
    front = rows[frontier[:count]]
    ge = front[None, :, :] >= block[:, None, :]
    gt = front[None, :, :] > block[:, None, :]
    dom = ge.all(axis=2) & gt.any(axis=2)  # (block, frontier)
    any_dom = dom.any(axis=1)
    first = np.argmax(dom, axis=1)
    out[:] = np.where(any_dom, frontier[first], -1)


if USING_NUMBA:
    _prune_sweep = _prune_sweep_jit
    _block_vs_frontier = _block_vs_frontier_jit
else:
    _prune_sweep = _prune_sweep_np
    _block_vs_frontier = _block_vs_frontier_np


def _dominates(a, b) -> bool:
    return bool((a >= b).all() and (a > b).any())


def _prune_blocked(rows, block_size: int):
    """Block-synchronous parallel sweep; identical output to _prune_sweep."""
    n = rows.shape[0]
    frontier = np.empty(n, np.int64)
    count = 0
    witness = np.full(n, -1, np.int64)
    for start in range(0, n, block_size):
        stop = min(start + block_size, n)
        hits = np.empty(stop - start, np.int64)
        _block_vs_frontier(rows, frontier, count, start, stop, hits)
        # Synchronization point: settle intra-block dominance sequentially
        # so survivors match the one-by-one sweep exactly.
        block_survivors: list[int] = []
        for k, pos in enumerate(range(start, stop)):
            hit = int(hits[k])
            if hit < 0:
                for r in block_survivors:
                    if _dominates(rows[r], rows[pos]):
                        hit = r
                        break
            if hit < 0:
                block_survivors.append(pos)
            else:
                witness[pos] = hit
        for pos in block_survivors:
            frontier[count] = pos
            count += 1
    return witness


def prune_dominated(
    game: GameInstance,
    parallel: bool = False,
    block_size: int = 128,
) -> PruneResult:
    """Remove every dominated schedule, recording one witness dominator each.

    The kept set is the unique maximal non-dominated set; it does not
    depend on schedule order or on the parallel flag.
    """
    u = np.ascontiguousarray(game.u_d, dtype=np.float64)
    n = u.shape[0]
    # Descending lexicographic row order, ties by original index: dominators
    # always precede the rows they dominate.
    keys = [np.arange(n)] + [-u[:, j] for j in range(u.shape[1] - 1, -1, -1)]
    order = np.lexsort(keys)
    rows = np.ascontiguousarray(u[order])
    if parallel:
        witness = _prune_blocked(rows, block_size)
    else:
        witness = _prune_sweep(rows)
    kept = tuple(sorted(int(order[pos]) for pos in np.flatnonzero(witness < 0)))
    removed = tuple(
        sorted(
            (int(order[pos]), int(order[witness[pos]]))
            for pos in np.flatnonzero(witness >= 0)
        )
    )
    return PruneResult(kept, removed)
