"""Compare the numba and numpy implementations of the hot kernels.

Run as a script:

    python3 benchmarks/bench_kernels.py

Times the decay-matrix assembly (dominant when scanning many grids) and the
batched path-cost evaluation (dominant in Monte Carlo) for both backends.
The LU solves behind the equilibrium computations go through LAPACK either
way and are unaffected by this choice.
"""

import timeit

import numpy as np

from impact_game import _accel


def best_of(func, repeat=5, number=10) -> float:
    """Best per-call time in seconds."""
    timer = timeit.Timer(func)
    return min(timer.repeat(repeat=repeat, number=number)) / number


def bench_decay_matrix(sizes=(101, 501)):
    print("decay_matrix: G(|t_i - t_j|) assembly")
    for m in sizes:
        times = np.linspace(0.0, 1.0, m)
        for kind, name in ((_accel.KIND_EXPONENTIAL, "exp"), (_accel.KIND_POWER, "power")):
            plain = best_of(lambda: _accel._decay_matrix_numpy(times, kind, 1.0))
            if _accel._decay_matrix_numba is None:
                print(f"  m={m:4d} {name:5s}  numpy {plain * 1e3:8.3f} ms   numba unavailable")
                continue
            _accel._decay_matrix_numba(times, kind, 1.0)  # warm-up compile
            jitted = best_of(lambda: _accel._decay_matrix_numba(times, kind, 1.0))
            print(
                f"  m={m:4d} {name:5s}  numpy {plain * 1e3:8.3f} ms   "
                f"numba {jitted * 1e3:8.3f} ms   speedup {plain / jitted:5.2f}x"
            )


def bench_path_costs(count=100_000, grid_len=11, agents=2):
    print(f"path_costs: {count} paths x {grid_len} times x {agents} agents")
    rng = np.random.default_rng(0)
    paths = rng.normal(size=(count, grid_len))
    trades = rng.normal(size=(grid_len, agents))
    fixed = rng.normal(size=agents)
    plain = best_of(lambda: _accel._path_costs_numpy(paths, trades, fixed), number=3)
    if _accel._path_costs_numba is None:
        print(f"  numpy {plain * 1e3:8.3f} ms   numba unavailable")
        return
    _accel._path_costs_numba(paths, trades, fixed)  # warm-up compile
    jitted = best_of(lambda: _accel._path_costs_numba(paths, trades, fixed), number=3)
    print(
        f"  numpy {plain * 1e3:8.3f} ms   numba {jitted * 1e3:8.3f} ms   "
        f"speedup {plain / jitted:5.2f}x"
    )


if __name__ == "__main__":
    print(f"active backend: {_accel.BACKEND}")
    bench_decay_matrix()
    bench_path_costs()
