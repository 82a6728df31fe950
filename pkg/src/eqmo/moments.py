"""Conditional moments of terminal wealth under deterministic strategies.

Wealth follows dX_s = [r X_s + theta u_s] ds + sigma u_s dW_s with
piecewise-constant parameters and controls, so the conditional law of X_T
given (t, x) is Gaussian with mean and variance given by finite left-endpoint
sums. The Monte Carlo oracle uses the matching exact per-step update
X_{i+1} = e^{r dt} (X_i + theta u dt + sigma u sqrt(dt) xi), which reproduces
those sums with zero discretization bias.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    NegativeVariance,
    OrderMismatch,
    TooFewPaths,
    UnsupportedOrder,
    ValidationError,
)
from .model import (
    MAX_ORDER,
    MarketScenario,
    ObjectiveSpec,
    StrategyGrid,
    _DOUBLE_FACTORIAL,
    moments_to_cumulants,
    rate_to_horizon,
)
from .sampling import blocked_normals


@dataclass(frozen=True)
class MomentVector:
    """Conditional moments of X_T given (t, x): mean, variance, m2..mn, k2..kn."""

    m1: float
    V: float
    central: tuple[float, ...]
    cumulant: tuple[float, ...]
    order: int

    def __post_init__(self) -> None:
        if self.V < 0.0:
            raise NegativeVariance(f"V = {self.V} < 0")
        if self.order != len(self.central) + 1 or self.order != len(self.cumulant) + 1:
            raise ValidationError(
                f"order {self.order} inconsistent with moment list lengths "
                f"{len(self.central)}/{len(self.cumulant)}"
            )
        vals = (self.m1, self.V) + self.central + self.cumulant
        if not all(math.isfinite(v) for v in vals):
            raise ValidationError("moments must be finite")
        scale = max(1.0, abs(self.V))
        if abs(self.central[0] - self.V) > 1e-12 * scale:
            raise ValidationError(f"central[2] = {self.central[0]} != V = {self.V}")
        if self.order >= 4:
            m2, m4 = self.central[0], self.central[2]
            if m4 < m2 ** 2 - 1e-9 * max(1.0, m2 ** 2):
                raise ValidationError(f"m4 = {m4} < m2^2 = {m2 ** 2}")

    def moment(self, k: int, mode: str) -> float:
        """q_k in the requested mode; k = 1 returns the conditional mean."""
        if k == 1:
            return self.m1
        return self.central[k - 2] if mode == "central" else self.cumulant[k - 2]


@dataclass(frozen=True)
class McEstimate:
    """Sampled MomentVector plus batch standard errors (m1, m2..mn order)."""

    moments: MomentVector
    standard_errors: tuple[float, ...]
    paths: int
    seed: int

    def __post_init__(self) -> None:
        if not all(math.isfinite(s) and s >= 0.0 for s in self.standard_errors):
            raise ValidationError("standard errors must be finite and nonnegative")


def _check_moment_order(n: int) -> None:
    if n < 2 or n > MAX_ORDER:
        raise UnsupportedOrder(f"order {n} outside [2, {MAX_ORDER}]")


def gaussian_central_moments(V: float, n: int) -> list[float]:
    """Central moments [m2..mn] of N(mu, V): (k-1)!! V^{k/2} even, 0 odd."""
    _check_moment_order(n)
    if V < 0.0:
        raise NegativeVariance(f"V = {V} < 0")
    return [
        _DOUBLE_FACTORIAL[k] * V ** (k // 2) if k % 2 == 0 else 0.0
        for k in range(2, n + 1)
    ]


def moments_to_go(scenario: MarketScenario, strategy: StrategyGrid):
    """Grid profiles (M, V): controlled mean contribution and variance of X_T
    accumulated over [t_i, T], so m1(t_i, x) = x e^{R_i} + M_i.

    Single right-to-left accumulation shared by the analytic engine, the
    equilibrium sweep, and the verifier, so their float arithmetic agrees
    bitwise.
    """
    strategy.check_grid(scenario)
    R = rate_to_horizon(scenario)
    n = scenario.grid_n
    dt = scenario.dt
    M = np.zeros(n + 1)
    V = np.zeros(n + 1)
    u = strategy.values
    for i in range(n - 1, -1, -1):
        g = math.exp(R[i])
        M[i] = M[i + 1] + g * scenario.theta[i] * u[i] * dt
        V[i] = V[i + 1] + g * g * scenario.sigma[i] ** 2 * u[i] ** 2 * dt
    return M, V


def conditional_moments(scenario: MarketScenario, strategy: StrategyGrid,
                        t: float, x: float, n: int) -> MomentVector:
    """Exact conditional moments of X_T given (t, x) at a grid time t."""
    _check_moment_order(n)
    i = scenario.grid_index(t)
    R = rate_to_horizon(scenario)
    M, V = moments_to_go(scenario, strategy)
    m1 = x * math.exp(R[i]) + M[i]
    v = float(V[i])
    central = tuple(gaussian_central_moments(v, n))
    cumulant = (v,) + (0.0,) * (n - 2)
    return MomentVector(m1, v, central, cumulant, n)


def objective_value(objective: ObjectiveSpec, mv: MomentVector) -> float:
    """Evaluate the sparse objective polynomial at the given moments."""
    if mv.order < objective.max_order:
        raise OrderMismatch(
            f"moment order {mv.order} < objective order {objective.max_order}"
        )
    total = 0.0
    for term in objective.terms:
        val = term.coeff
        for k, e in term.factors:
            val *= mv.moment(k, objective.mode) ** e
        total += val
    return total


def _wealth_step_coeffs(scenario: MarketScenario, strategy: StrategyGrid):
    """Per-step update X_{i+1} = g_i (X_i + a_i + b_i xi_i) for i < grid_n."""
    strategy.check_grid(scenario)
    dt = scenario.dt
    n = scenario.grid_n
    u = strategy.values[:n]
    g = np.exp(scenario.r[:n] * dt)
    a = scenario.theta[:n] * u * dt
    b = scenario.sigma[:n] * u * math.sqrt(dt)
    return g, a, b


def simulate_terminal_wealth(scenario: MarketScenario, strategy: StrategyGrid,
                             t: float, x: float, paths: int, seed: int) -> np.ndarray:
    """Sample X_T from (t, x) under the strategy; exact discrete transitions."""
    i0 = scenario.grid_index(t)
    g, a, b = _wealth_step_coeffs(scenario, strategy)
    steps = scenario.grid_n - i0
    X = np.full(paths, float(x))
    if steps == 0:
        return X
    Z = blocked_normals(seed, paths, steps)
    for j, i in enumerate(range(i0, scenario.grid_n)):
        X = g[i] * (X + a[i] + b[i] * Z[:, j])
    return X


def simulate_wealth_paths(scenario: MarketScenario, strategy: StrategyGrid,
                          paths: int, seed: int):
    """Full wealth path matrix (grid_n+1, paths) plus Brownian increments
    (grid_n, paths); same per-step law as :func:`simulate_terminal_wealth`."""
    g, a, b = _wealth_step_coeffs(scenario, strategy)
    n = scenario.grid_n
    Z = blocked_normals(seed, paths, n)
    sq = math.sqrt(scenario.dt)
    X = np.empty((n + 1, paths))
    X[0] = scenario.x0
    for i in range(n):
        X[i + 1] = g[i] * (X[i] + a[i] + b[i] * Z[:, i])
    return X, (sq * Z).T.copy()


def mc_conditional_moments(scenario: MarketScenario, strategy: StrategyGrid,
                           t: float, x: float, n: int, paths: int, seed: int,
                           batches: int = 20) -> McEstimate:
    """Monte Carlo oracle for :func:`conditional_moments`.

    Point estimates use all paths; standard errors come from the spread of
    ``batches`` contiguous path batches (batch boundaries depend only on path
    index, keeping results independent of the worker count).
    """
    _check_moment_order(n)
    if paths < 1000:
        raise TooFewPaths(f"paths = {paths} < 1000")
    if batches < 2 or paths < batches:
        raise ValidationError(f"need 2 <= batches <= paths, got {batches}")
    X = simulate_terminal_wealth(scenario, strategy, t, x, paths, seed)

    def sample_stats(v: np.ndarray) -> list[float]:
        m1 = float(np.mean(v))
        d = v - m1
        return [m1] + [float(np.mean(d ** k)) for k in range(2, n + 1)]

    est = sample_stats(X)
    edges = np.linspace(0, paths, batches + 1).astype(int)
    per_batch = np.array([sample_stats(X[lo:hi]) for lo, hi in zip(edges[:-1], edges[1:])])
    se = np.std(per_batch, axis=0, ddof=1) / math.sqrt(batches)
    central = tuple(est[1:])
    cumulant = tuple(moments_to_cumulants(central))
    mv = MomentVector(est[0], central[0], central, cumulant, n)
    return McEstimate(mv, tuple(float(s) for s in se), paths, seed)
