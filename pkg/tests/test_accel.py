"""Backend parity and selection for the jitted kernels."""

import math
import subprocess
import sys

import numpy as np
import pytest

from impact_game import _accel

HAVE_NUMBA = _accel._decay_matrix_numba is not None


def run_python(code, env_overrides):
    import os

    env = dict(os.environ)
    env.update(env_overrides)
    return subprocess.run(
        [sys.executable, "-c", code], capture_output=True, text=True, env=env
    )


class TestDecayMatrix:
    def test_exponential_entries(self):
        times = np.array([0.0, 0.5, 2.0])
        matrix = _accel.decay_matrix(times, _accel.KIND_EXPONENTIAL, 1.3)
        assert matrix.shape == (3, 3)
        np.testing.assert_array_equal(np.diag(matrix), np.ones(3))
        assert matrix[0, 1] == pytest.approx(math.exp(-1.3 * 0.5), rel=1e-15)
        assert matrix[2, 0] == pytest.approx(math.exp(-1.3 * 2.0), rel=1e-15)

    def test_power_entries(self):
        times = np.array([0.0, 1.0, 3.0])
        matrix = _accel.decay_matrix(times, _accel.KIND_POWER, 2.0)
        assert matrix[0, 1] == pytest.approx(0.25, rel=1e-15)
        assert matrix[0, 2] == pytest.approx(1.0 / 16.0, rel=1e-15)

    @pytest.mark.skipif(not HAVE_NUMBA, reason="numba backend not importable")
    def test_backends_agree(self):
        rng = np.random.default_rng(31)
        times = np.sort(rng.uniform(0.0, 3.0, 40))
        for kind, param in [(_accel.KIND_EXPONENTIAL, 0.7), (_accel.KIND_POWER, 1.8)]:
            fast = _accel._decay_matrix_numba(times, kind, param)
            plain = _accel._decay_matrix_numpy(times, kind, param)
            np.testing.assert_allclose(fast, plain, rtol=1e-14, atol=0.0)
            np.testing.assert_array_equal(fast, fast.T)


class TestPathCosts:
    def test_formula(self):
        paths = np.array([[1.0, 2.0], [0.0, -1.0]])
        trades = np.array([[1.0, 0.5], [2.0, -1.0]])
        fixed = np.array([10.0, 20.0])
        out = _accel.path_costs(paths, trades, fixed)
        np.testing.assert_allclose(out, fixed[None, :] - paths @ trades, rtol=1e-14)

    @pytest.mark.skipif(not HAVE_NUMBA, reason="numba backend not importable")
    def test_backends_agree(self):
        rng = np.random.default_rng(32)
        paths = rng.normal(size=(50, 12))
        trades = rng.normal(size=(12, 4))
        fixed = rng.normal(size=4)
        fast = _accel._path_costs_numba(paths, trades, fixed)
        plain = _accel._path_costs_numpy(paths, trades, fixed)
        np.testing.assert_allclose(fast, plain, rtol=1e-12, atol=1e-12)


class TestBackendSelection:
    CODE = "import impact_game; print(impact_game.BACKEND)"

    def test_numpy_can_be_forced(self):
        result = run_python(self.CODE, {"IMPACT_GAME_BACKEND": "numpy"})
        assert result.returncode == 0
        assert result.stdout.strip() == "numpy"

    @pytest.mark.skipif(not HAVE_NUMBA, reason="numba backend not importable")
    def test_numba_can_be_required(self):
        result = run_python(self.CODE, {"IMPACT_GAME_BACKEND": "numba"})
        assert result.returncode == 0
        assert result.stdout.strip() == "numba"

    def test_unknown_backend_fails_the_import(self):
        result = run_python(self.CODE, {"IMPACT_GAME_BACKEND": "fortran"})
        assert result.returncode != 0
        assert "IMPACT_GAME_BACKEND" in result.stderr

    def test_default_backend_is_exposed(self):
        assert _accel.BACKEND in ("numba", "numpy")
        from impact_game import BACKEND

        assert BACKEND == _accel.BACKEND
