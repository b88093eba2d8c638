import numpy as np
import pytest

from conftest import random_game
from malsched.game import GameInstance
from malsched.lp import LpStatus, solve_lp
from malsched.milp import (
    MilpEmitConfig,
    effective_big_z,
    emit_milp,
    read_lp_file,
    restricted_rows,
)
from malsched.solver import per_target_lp


class TestCounts:
    def test_three_by_two(self, tmp_path):
        game = GameInstance.from_payoffs(np.zeros((3, 2)), np.zeros((3, 2)))
        summary = emit_milp(game, MilpEmitConfig(), tmp_path / "g.lp")
        assert summary.num_vars == 7
        assert summary.num_constraints == 8

    def test_one_by_one(self, tmp_path):
        game = GameInstance.from_payoffs([[1.0]], [[2.0]])
        summary = emit_milp(game, MilpEmitConfig(), tmp_path / "g.lp")
        assert summary.num_vars == 4
        assert summary.num_constraints == 5

    def test_closed_form_on_random_shapes(self, tmp_path):
        rng = np.random.default_rng(0)
        for _ in range(10):
            num_s, num_v = int(rng.integers(1, 7)), int(rng.integers(1, 6))
            game = GameInstance.from_payoffs(
                rng.uniform(-5, 5, (num_s, num_v)), rng.uniform(-5, 5, (num_s, num_v)))
            summary = emit_milp(game, MilpEmitConfig(), tmp_path / "g.lp")
            assert summary.num_vars == num_s + num_v + 2
            assert summary.num_constraints == 2 + 3 * num_v

    def test_unwritable_path(self, tmp_path):
        game = GameInstance.from_payoffs([[1.0]], [[2.0]])
        with pytest.raises(OSError):
            emit_milp(game, MilpEmitConfig(), tmp_path / "missing" / "g.lp")


class TestBigZ:
    def test_default_floor(self):
        game = GameInstance.from_payoffs([[0.0, 1.0]], [[0.0, 2.0]])
        assert effective_big_z(game, MilpEmitConfig()) == 1e6

    def test_instance_aware_floor_kicks_in(self):
        game = GameInstance.from_payoffs([[0.0, 2e5]], [[0.0, 1.0]])
        assert effective_big_z(game, MilpEmitConfig()) == 2e6

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            MilpEmitConfig(0.0)


class TestRoundTrip:
    def test_coefficient_multiset_survives(self, tmp_path, escalation):
        path = tmp_path / "esc.lp"
        emit_milp(escalation, MilpEmitConfig(), path)
        parsed = read_lp_file(path)
        assert parsed.objective == {"Ud": 1.0}
        assert parsed.binaries == {"y_0", "y_1"}
        assert parsed.free == {"Ud", "Ua"}
        assert parsed.bounds == {"p_0": (0.0, 1.0), "p_1": (0.0, 1.0)}
        assert len(parsed.rows) == 8
        assert parsed.row_by_name("c1").coefs == {"y_0": 1.0, "y_1": 1.0}
        assert parsed.row_by_name("c2").coefs == {"p_0": 1.0, "p_1": 1.0}
        # Defender row for Phishing: Ud - (-3) p_0 - 0 p_1 + Z y_0 <= Z; the
        # zero coefficient is dropped.
        row = parsed.row_by_name("c3")
        assert row.relation == "<="
        assert row.coefs["Ud"] == 1.0
        assert row.coefs["p_0"] == 3.0
        assert "p_1" not in row.coefs
        assert row.coefs["y_0"] == row.rhs == 1e6

    def test_exact_float_recovery(self, tmp_path):
        rng = np.random.default_rng(42)
        u_d = rng.uniform(-10, 10, (4, 3))
        u_a = rng.uniform(-10, 10, (4, 3))
        game = GameInstance.from_payoffs(u_d, u_a)
        path = tmp_path / "g.lp"
        emit_milp(game, MilpEmitConfig(), path)
        parsed = read_lp_file(path)
        for v in range(3):
            row = parsed.row_by_name(f"c{3 + v}")
            for s in range(4):
                if u_d[s, v] != 0.0:
                    assert row.coefs[f"p_{s}"] == -u_d[s, v]  # bitwise equal
            lower = parsed.row_by_name(f"c{3 + 3 + v}")
            for s in range(4):
                assert lower.coefs[f"p_{s}"] == -u_a[s, v]


class TestPerTargetEquivalence:
    @pytest.mark.parametrize("seed", range(8))
    def test_restriction_matches_solver_lp(self, tmp_path, seed):
        game, _ = random_game(seed)
        path = tmp_path / "g.lp"
        emit_milp(game, MilpEmitConfig(), path)
        parsed = read_lp_file(path)
        for v in range(game.num_vulns):
            objective, br_rows = restricted_rows(
                parsed, v, game.num_schedules, game.num_vulns)
            lp = per_target_lp(game, v)
            assert np.array_equal(objective, lp.objective)
            # Solver rows: the simplex equality first, then one
            # best-response row per rival target in index order.
            assert len(br_rows) == lp.num_constraints - 1
            for k, row in enumerate(br_rows):
                coefs, rel, rhs = lp.constraint(1 + k)
                assert rel == ">=" and rhs == 0.0
                assert np.array_equal(row, coefs)

    def test_escalation_value_via_file_restrictions(self, tmp_path, escalation):
        # Solving each fixed-target restriction of the emitted file and
        # taking the best feasible value reproduces the equilibrium value.
        path = tmp_path / "esc.lp"
        emit_milp(escalation, MilpEmitConfig(), path)
        parsed = read_lp_file(path)
        from malsched.lp import maximize

        best = None
        for v in range(2):
            objective, br_rows = restricted_rows(parsed, v, 2, 2)
            program = maximize(
                objective,
                [(np.ones(2), "=", 1.0)] + [(row, ">=", 0.0) for row in br_rows],
                [(0.0, 1.0)] * 2,
            )
            sol = solve_lp(program)
            if sol.status is LpStatus.OPTIMAL:
                best = sol.objective_value if best is None else max(best, sol.objective_value)
        assert best == pytest.approx(-1.5, abs=1e-9)
