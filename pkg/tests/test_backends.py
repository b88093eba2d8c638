"""The numba and numpy builds of each hot kernel must agree exactly."""

import numpy as np
import pytest

from malsched import _accel
from malsched.estimation import (
    _detection_counts_jit,
    _detection_counts_np,
    _fp_counts_jit,
    _fp_counts_np,
)
from malsched.lp import _simplex_core_jit, _simplex_core_np
from malsched.schedules import (
    _block_vs_frontier_jit,
    _block_vs_frontier_np,
    _prune_sweep_jit,
    _prune_sweep_np,
)


class TestResolution:
    def test_current_backend_is_reported(self):
        assert _accel.backend() in ("numba", "numpy")

    def test_env_values(self):
        assert _accel._resolve("numpy") is False
        assert _accel._resolve("auto") == _accel._resolve("")
        with pytest.raises(ValueError):
            _accel._resolve("cuda")


def tableau(seed):
    rng = np.random.default_rng(seed)
    m, n = int(rng.integers(1, 5)), int(rng.integers(2, 7))
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = rng.uniform(-2, 2, (m, n))
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = rng.uniform(0, 4, m)
    T[m, :n] = -rng.uniform(-1, 3, n)
    basis = np.arange(n, n + m, dtype=np.int64)
    return T, basis


class TestSimplexKernel:
    @pytest.mark.parametrize("seed", range(25))
    def test_builds_agree(self, seed):
        T1, b1 = tableau(seed)
        T2, b2 = T1.copy(), b1.copy()
        s1 = _simplex_core_jit(T1, b1, 1e-9, 1e-9, 10_000)
        s2 = _simplex_core_np(T2, b2, 1e-9, 1e-9, 10_000)
        assert s1 == s2
        assert np.array_equal(b1, b2)
        assert np.allclose(T1, T2, atol=1e-12, rtol=0.0)


class TestPruneKernels:
    @pytest.mark.parametrize("seed", range(25))
    def test_sweeps_agree(self, seed):
        rng = np.random.default_rng(seed)
        rows = rng.integers(-3, 4, size=(int(rng.integers(1, 30)), 4)).astype(float)
        assert np.array_equal(_prune_sweep_jit(rows), _prune_sweep_np(rows))

    @pytest.mark.parametrize("seed", range(10))
    def test_block_kernels_agree(self, seed):
        rng = np.random.default_rng(seed)
        rows = rng.integers(-3, 4, size=(20, 3)).astype(float)
        frontier = np.arange(6, dtype=np.int64)
        out1 = np.empty(10, np.int64)
        out2 = np.empty(10, np.int64)
        _block_vs_frontier_jit(rows, frontier, 6, 8, 18, out1)
        _block_vs_frontier_np(rows, frontier, 6, 8, 18, out2)
        assert np.array_equal(out1, out2)


class TestCountingKernels:
    @pytest.mark.parametrize("seed", range(10))
    def test_detection_counts_agree(self, seed):
        rng = np.random.default_rng(seed)
        files, tools, vulns = 30, 5, 3
        ran = (rng.random((files, tools)) < 0.7).astype(np.uint8)
        det = (ran & (rng.random((files, tools)) < 0.5)).astype(np.uint8)
        tagged = (rng.random((files, vulns)) < 0.5).astype(np.uint8)
        table = np.array([[0, -1], [1, 2], [3, 4]], dtype=np.int64)
        length = np.array([1, 2, 2], dtype=np.int64)
        got = _detection_counts_jit(tagged, ran, det, table, length)
        want = _detection_counts_np(tagged, ran, det, table, length)
        assert np.array_equal(got[0], want[0])
        assert np.array_equal(got[1], want[1])

    @pytest.mark.parametrize("seed", range(10))
    def test_fp_counts_agree(self, seed):
        rng = np.random.default_rng(seed)
        ran = (rng.random((25, 4)) < 0.8).astype(np.uint8)
        det = (ran & (rng.random((25, 4)) < 0.3)).astype(np.uint8)
        table = np.array([[0, -1, -1], [1, 2, 3]], dtype=np.int64)
        length = np.array([1, 3], dtype=np.int64)
        got = _fp_counts_jit(ran, det, table, length)
        want = _fp_counts_np(ran, det, table, length)
        assert np.array_equal(got[0], want[0])
        assert np.array_equal(got[1], want[1])
