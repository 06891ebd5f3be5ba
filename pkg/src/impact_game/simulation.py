"""Monte Carlo checks of the cost statistics behind the equilibrium formulas.

The realized execution cost of agent i along one unaffected price path is

    cost_i = sum_k [ G(0)/2 xi_{i,k}^2 - S_impacted_k xi_{i,k}
                     + G(0)/2 xi_{i,k} (tot_k - xi_{i,k}) + theta xi_{i,k}^2 ]

with S_impacted_k = S_unaffected_k - sum_{l<k} G(t_k - t_l) tot_l and
tot = sum_j xi_j.  This is affine in the path, cost_i = A_i - xi_i . S0,
so a batch of paths reduces to one matrix product (the accelerated kernel
in _accel); A_i is obtained by pricing a zero path.

Closed-form targets for the mean come from the gamma = 0 kernel matrices;
the variance target is xi' Phi xi with Phi_{kl} = phi(t_k ^ t_l), which
tests the model identity rather than the sampler.  Reductions use
compensated summation so reported moments do not depend on accumulation
order.

Contents
--------
PricePath          unaffected and impacted prices at the grid times
CostSample         per-agent realized costs of one path
impacted_path      price after the aggregate transient impact
realized_costs     per-agent costs of one path by the direct sum
simulate_paths     batch simulation, one CostSample per path
validate_moments   sample mean/variance vs closed-form targets, z-scored
validate_cara      sample exponential utility vs its Gaussian closed form
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from . import _accel
from .errors import ParameterError
from .finite_game import _strategy_like, build_matrices
from .market_model import BachelierVariance, GameParams, kernel_eval

__all__ = [
    "PricePath",
    "CostSample",
    "MomentReport",
    "CaraReport",
    "impacted_path",
    "realized_costs",
    "simulate_paths",
    "validate_moments",
    "validate_cara",
]

# exponents beyond this switch the utility comparison to log space
_EXP_GUARD = 500.0


@dataclass(frozen=True)
class PricePath:
    """Unaffected and impacted prices at the grid times.

    The impacted price at t_k subtracts the decayed impact of all trades
    strictly before t_k; same-time trades affect execution prices through
    the half-spread term in the cost, not through the path.
    """

    unaffected: np.ndarray
    impacted: np.ndarray

    def __post_init__(self):
        for name in ("unaffected", "impacted"):
            arr = np.array(getattr(self, name), dtype=float, copy=True)
            if arr.ndim != 1 or not np.all(np.isfinite(arr)):
                raise ParameterError(f"{name} must be a finite 1-d array")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.unaffected.shape != self.impacted.shape:
            raise ParameterError("unaffected and impacted paths differ in length")


@dataclass(frozen=True)
class CostSample:
    """Per-agent realized costs of one simulated path.

    seed is the batch seed; index is the path's position within the batch,
    so (seed, index) pins the sample down exactly.
    """

    costs: np.ndarray
    seed: int
    index: int

    def __post_init__(self):
        costs = np.array(self.costs, dtype=float, copy=True)
        if costs.ndim != 1 or not np.all(np.isfinite(costs)):
            raise ParameterError("costs must be a finite 1-d array")
        costs.setflags(write=False)
        object.__setattr__(self, "costs", costs)


def _trades_matrix(params: GameParams, strategies: Sequence) -> np.ndarray:
    """Stack n validated strategies into a (grid length, n) matrix."""
    strategies = [_strategy_like(s) for s in strategies]
    if len(strategies) != params.n:
        raise ParameterError(f"expected {params.n} strategies, got {len(strategies)}")
    m = len(params.grid)
    for s in strategies:
        if len(s) != m:
            raise ParameterError("strategy length does not match the grid")
    return np.column_stack([s.trades for s in strategies])


def _unaffected_vector(unaffected, m: int) -> np.ndarray:
    arr = np.asarray(unaffected, dtype=float)
    if arr.ndim != 1 or arr.size != m:
        raise ParameterError(f"unaffected path must be a length-{m} vector")
    if not np.all(np.isfinite(arr)):
        raise ParameterError("unaffected path must be finite")
    return arr


def impacted_path(params: GameParams, strategies: Sequence, unaffected) -> PricePath:
    """Price path after the aggregate transient impact of all agents.

    impacted_k = unaffected_k - sum over t_l < t_k of G(t_k - t_l) tot_l.
    With zero aggregate trading the two paths coincide exactly.
    """
    trades = _trades_matrix(params, strategies)
    times = params.grid.times
    unaffected = _unaffected_vector(unaffected, times.size)
    lag = np.abs(times[:, None] - times[None, :])
    decay_strict = np.tril(kernel_eval(params.kernel, lag), -1)
    impact = decay_strict @ trades.sum(axis=1)
    return PricePath(unaffected=unaffected, impacted=unaffected - impact)


def realized_costs(params: GameParams, strategies: Sequence, unaffected) -> np.ndarray:
    """Per-agent realized costs of one path, by the direct per-time sum.

    This is the reference evaluation: quadratic in the grid length and
    independent of the kernel-matrix machinery used for the closed-form
    targets.
    """
    trades = _trades_matrix(params, strategies)
    path = impacted_path(params, strategies, unaffected)
    g0 = kernel_eval(params.kernel, 0.0)
    tot = trades.sum(axis=1)
    costs = np.empty(params.n)
    for i in range(params.n):
        xi = trades[:, i]
        costs[i] = math.fsum(
            0.5 * g0 * xi[k] ** 2
            - path.impacted[k] * xi[k]
            + 0.5 * g0 * xi[k] * (tot[k] - xi[k])
            + params.theta * xi[k] ** 2
            for k in range(xi.size)
        )
    return costs


def _validate_count_seed(count, seed) -> tuple[int, int]:
    if not isinstance(count, (int, np.integer)) or isinstance(count, bool) or count < 1:
        raise ParameterError(f"count must be an integer >= 1, got {count!r}")
    if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool) or seed < 0:
        raise ParameterError(f"seed must be a nonnegative integer, got {seed!r}")
    return int(count), int(seed)


def _increment_stds(params: GameParams) -> np.ndarray:
    """Standard deviations of the price increments between grid times.

    The first increment runs from time zero, so its variance is phi(t_0);
    the covariance of the resulting path values is phi(t_k ^ t_l).
    """
    phi = params.phi_at_grid()
    dphi = np.diff(phi, prepend=0.0)
    if np.any(dphi < 0.0):
        raise ParameterError("variance function must be nondecreasing along the grid")
    return np.sqrt(dphi)


def _cost_matrix(params: GameParams, trades: np.ndarray, count: int, seed: int) -> np.ndarray:
    """Realized costs for `count` paths, shape (count, n)."""
    fixed = realized_costs(params, list(trades.T), np.zeros(trades.shape[0]))
    stds = _increment_stds(params)
    rng = np.random.default_rng(seed)
    increments = rng.standard_normal((count, trades.shape[0])) * stds[None, :]
    paths = params.s0 + np.cumsum(increments, axis=1)
    return _accel.path_costs(paths, trades, fixed)


def simulate_paths(params: GameParams, strategies: Sequence, count: int, seed: int) -> list[CostSample]:
    """Simulate `count` unaffected paths and realize every agent's costs.

    Gaussian increments come from a single seeded generator, so the batch
    is reproducible bit for bit given (seed, count).
    """
    count, seed = _validate_count_seed(count, seed)
    trades = _trades_matrix(params, strategies)
    costs = _cost_matrix(params, trades, count, seed)
    return [CostSample(costs=costs[p], seed=seed, index=p) for p in range(count)]


@dataclass(frozen=True)
class MomentReport:
    """Sample mean and variance of one agent's cost against closed-form targets."""

    agent: int
    count: int
    sample_mean: float
    target_mean: float
    se_mean: float
    z_mean: float
    sample_variance: float
    target_variance: float
    se_variance: float
    z_variance: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class CaraReport:
    """Sample exponential utility of one agent's cost against its Gaussian value.

    mode records how the comparison was computed: "linear" for gamma = 0
    (plain expected cost), "direct" when exponents stay small enough for
    plain averaging, "log" when the comparison moved to log space (sample
    and target are then log moment-generating-function values).
    """

    agent: int
    count: int
    mode: str
    sample: float
    target: float
    se: float
    z: float

    def to_dict(self) -> dict:
        return asdict(self)


def _moment_targets(params: GameParams, trades: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form mean and variance of each agent's cost."""
    flat = GameParams(
        n=params.n,
        gamma=0.0,
        theta=params.theta,
        kernel=params.kernel,
        variance=params.variance,
        grid=params.grid,
        s0=params.s0,
    )
    matrices = build_matrices(flat)
    phi = params.phi_at_grid()
    cov = np.minimum.outer(phi, phi)
    tot = trades.sum(axis=1)
    means = np.empty(params.n)
    variances = np.empty(params.n)
    for i in range(params.n):
        xi = trades[:, i]
        means[i] = (
            -xi.sum() * params.s0
            + 0.5 * xi @ matrices.full @ xi
            + xi @ matrices.tilde @ (tot - xi)
        )
        variances[i] = xi @ cov @ xi
    return means, variances


def _z_score(difference: float, se: float) -> float:
    if se > 0.0:
        return difference / se
    return 0.0 if difference == 0.0 else math.copysign(math.inf, difference)


def _mean(values: np.ndarray) -> float:
    return math.fsum(values) / values.size


def validate_moments(params: GameParams, strategies: Sequence, count: int, seed: int) -> list[MomentReport]:
    """Compare sample cost moments against their closed forms, one report per agent.

    z-scores are (sample - target) / standard error; the variance check uses
    the asymptotic standard error sqrt((m4 - m2^2) / count) built from the
    sample's central moments.
    """
    count, seed = _validate_count_seed(count, seed)
    trades = _trades_matrix(params, strategies)
    costs = _cost_matrix(params, trades, count, seed)
    target_means, target_variances = _moment_targets(params, trades)

    reports = []
    for i in range(trades.shape[1]):
        c = costs[:, i]
        mean = _mean(c)
        centered = c - mean
        m2 = _mean(centered**2)
        m4 = _mean(centered**4)
        sample_var = m2 * count / (count - 1) if count > 1 else 0.0
        se_mean = math.sqrt(m2 / count)
        se_var = math.sqrt(max(m4 - m2 * m2, 0.0) / count)
        reports.append(
            MomentReport(
                agent=i,
                count=count,
                sample_mean=mean,
                target_mean=float(target_means[i]),
                se_mean=se_mean,
                z_mean=_z_score(mean - target_means[i], se_mean),
                sample_variance=sample_var,
                target_variance=float(target_variances[i]),
                se_variance=se_var,
                z_variance=_z_score(sample_var - target_variances[i], se_var),
            )
        )
    return reports


def _cara_report(agent: int, count: int, gamma: float, c: np.ndarray, mean: float, var: float) -> CaraReport:
    if gamma == 0.0:
        # risk-neutral limit of the utility: u(x) = x, applied to wealth -cost
        sample = -_mean(c)
        centered = c + sample
        se = math.sqrt(_mean(centered**2) / count)
        return CaraReport(
            agent=agent, count=count, mode="linear",
            sample=sample, target=-mean, se=se, z=_z_score(sample + mean, se),
        )
    exponents = gamma * c
    log_target = gamma * mean + 0.5 * gamma * gamma * var
    if max(exponents.max(), log_target) <= _EXP_GUARD:
        utilities = (1.0 - np.exp(exponents)) / gamma
        sample = _mean(utilities)
        target = (1.0 - math.exp(log_target)) / gamma
        centered = utilities - sample
        se = math.sqrt(_mean(centered**2) / count)
        return CaraReport(
            agent=agent, count=count, mode="direct",
            sample=sample, target=target, se=se, z=_z_score(sample - target, se),
        )
    # log space: compare log E[e^{gamma cost}] against its Gaussian value
    shift = exponents.max()
    scaled = np.exp(exponents - shift)
    scaled_mean = _mean(scaled)
    sample = shift + math.log(scaled_mean)
    centered = scaled - scaled_mean
    # delta method: se(log m) = se(m) / m
    se = math.sqrt(_mean(centered**2) / count) / scaled_mean
    return CaraReport(
        agent=agent, count=count, mode="log",
        sample=sample, target=log_target, se=se, z=_z_score(sample - log_target, se),
    )


def validate_cara(params: GameParams, strategies: Sequence, count: int, seed: int) -> list[CaraReport]:
    """Compare sample exponential utility of -cost against its Gaussian closed form.

    Costs are Gaussian in this model, so E[u(-cost)] has the closed form
    (1 - exp(gamma mean + gamma^2 var / 2)) / gamma; gamma = 0 degenerates
    to the plain mean comparison.  Only the Bachelier variance function is
    accepted because the equivalence needs Gaussian costs.
    """
    if not isinstance(params.variance, BachelierVariance):
        raise ParameterError("the utility comparison requires a Bachelier variance function")
    count, seed = _validate_count_seed(count, seed)
    trades = _trades_matrix(params, strategies)
    costs = _cost_matrix(params, trades, count, seed)
    target_means, target_variances = _moment_targets(params, trades)
    return [
        _cara_report(
            i, count, params.gamma, costs[:, i],
            float(target_means[i]), float(target_variances[i]),
        )
        for i in range(trades.shape[1])
    ]
