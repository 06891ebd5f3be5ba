"""Hot numerical kernels: numba-jitted versions with a pure-numpy fallback.

Two inner loops dominate the package's non-LAPACK runtime: assembling the
decay-kernel matrix G(|t_i - t_j|) (rebuilt for every grid) and turning
simulated price paths into per-agent realized costs (one pass over every
path).  Both are implemented twice, once with numba.njit and once with
vectorized numpy.

Backend selection happens at import time via the IMPACT_GAME_BACKEND
environment variable:

    numba   require the jitted kernels (raise if numba is unavailable)
    numpy   force the pure-numpy fallback
    auto    (default) use numba when importable, else numpy

``benchmarks/bench_kernels.py`` compares the two implementations.
"""

from __future__ import annotations

import os

import numpy as np

KIND_EXPONENTIAL = 0
KIND_POWER = 1


def _decay_matrix_numpy(times: np.ndarray, kind: int, param: float) -> np.ndarray:
    lag = np.abs(times[:, None] - times[None, :])
    if kind == KIND_EXPONENTIAL:
        return np.exp(-param * lag)
    return (1.0 + lag) ** (-param)


def _path_costs_numpy(paths: np.ndarray, trades: np.ndarray, fixed: np.ndarray) -> np.ndarray:
    # cost[p, i] = fixed[i] - sum_k paths[p, k] * trades[k, i]
    return fixed[None, :] - paths @ trades


_requested = os.environ.get("IMPACT_GAME_BACKEND", "auto").strip().lower() or "auto"
if _requested not in ("auto", "numba", "numpy"):
    raise RuntimeError(
        f"IMPACT_GAME_BACKEND must be 'numba', 'numpy', or 'auto', got {_requested!r}"
    )

_decay_matrix_numba = None
_path_costs_numba = None
_import_error = None

if _requested in ("auto", "numba"):
    try:
        import numba

        @numba.njit(cache=True)
        def _decay_matrix_numba(times, kind, param):  # type: ignore[no-redef]
            m = times.shape[0]
            out = np.empty((m, m))
            for i in range(m):
                out[i, i] = 1.0
                for j in range(i):
                    lag = abs(times[i] - times[j])
                    if kind == 0:
                        val = np.exp(-param * lag)
                    else:
                        val = (1.0 + lag) ** (-param)
                    out[i, j] = val
                    out[j, i] = val
            return out

        @numba.njit(cache=True)
        def _path_costs_numba(paths, trades, fixed):  # type: ignore[no-redef]
            n_paths, n_times = paths.shape
            n_agents = trades.shape[1]
            out = np.empty((n_paths, n_agents))
            for p in range(n_paths):
                for i in range(n_agents):
                    acc = 0.0
                    for k in range(n_times):
                        acc += paths[p, k] * trades[k, i]
                    out[p, i] = fixed[i] - acc
            return out

    except ImportError as exc:  # pragma: no cover - depends on environment
        _import_error = exc
        if _requested == "numba":
            raise RuntimeError("IMPACT_GAME_BACKEND=numba but numba is not importable") from exc

if _decay_matrix_numba is not None:
    BACKEND = "numba"
    decay_matrix = _decay_matrix_numba
    path_costs = _path_costs_numba
else:
    BACKEND = "numpy"
    decay_matrix = _decay_matrix_numpy
    path_costs = _path_costs_numpy
