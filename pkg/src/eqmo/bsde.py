"""Least-squares Monte Carlo solver for (flows of) backward SDEs.

Backward scheme on simulated state paths: Y_N = xi pathwise; at each earlier
step the continuation C_i = E[Y_{i+1} | state_i] is fitted by polynomial
regression, Z_i is fitted from martingale-increment projections, and
Y_i = C_i + f(t_i, state_i, C_i, Z_i) dt. The Z target is centered by default,
regressing (Y_{i+1} - C_i) dW_i / dt, which leaves the conditional expectation
unchanged (E[C_i dW_i | state_i] = 0) and removes most of the sampling
variance of the plain Y_{i+1} dW_i / dt estimator.

A flow solves one BSDE per start index s on [s, T] over a shared path set;
its diagonal samples member s at time s. Recurrent systems solve an ordered
list of specs, feeding each driver the (Y, Z) grids of its dependencies.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    CyclicDependency,
    RegressionSingular,
    ValidationError,
    ZTruncationSaturated,
)
from .equilibrium import mv_closed_form
from .model import MarketScenario, StrategyGrid, rate_to_horizon
from .moments import simulate_wealth_paths
from .sampling import blocked_normals

# state counts as constant across paths below this spread; conditioning on a
# constant is plain averaging, so those rows regress on the intercept only
_CONST_STATE_TOL = 1e-13


@dataclass(frozen=True)
class FactorModel:
    """Scalar risk-premium factor: none (frozen at theta0) or an OU process."""

    kind: str = "none"
    kappa: float = 0.0
    theta_bar: float = 0.0
    eta: float = 0.0
    rho: float = 0.0
    theta0: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ("none", "ou"):
            raise ValidationError(f"factor kind must be 'none' or 'ou', got {self.kind!r}")
        if self.eta < 0.0:
            raise ValidationError(f"eta must be nonnegative, got {self.eta}")
        if abs(self.rho) > 1.0:
            raise ValidationError(f"rho must lie in [-1, 1], got {self.rho}")


@dataclass(frozen=True)
class FactorPaths:
    """Simulated state matrix (times x paths) plus the Brownian increments of
    the state's own driving motion (needed by the Z projections)."""

    times: np.ndarray
    state: np.ndarray
    dW: np.ndarray
    seed: int

    @property
    def grid_n(self) -> int:
        return len(self.times) - 1

    @property
    def paths(self) -> int:
        return self.state.shape[1]

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])


def brownian_factor() -> FactorModel:
    """Pure Brownian state: OU with kappa = 0, eta = 1, started at 0."""
    return FactorModel(kind="ou", kappa=0.0, theta_bar=0.0, eta=1.0, rho=0.0, theta0=0.0)


def simulate_factors(model: FactorModel, times: np.ndarray, paths: int,
                     seed: int) -> FactorPaths:
    """Exact transition sampling of the factor on the given uniform grid.

    OU step: theta' = theta_bar + (theta - theta_bar) e^{-kappa dt}
    + eta sqrt(-expm1(-2 kappa dt) / (2 kappa)) xi, with the kappa -> 0 limit
    variance dt. kind "none" freezes the state at theta0 but still carries
    Brownian increments so downstream projections stay well defined.
    """
    if paths < 1:
        raise ValidationError(f"paths must be >= 1, got {paths}")
    times = np.asarray(times, dtype=float)
    n = len(times) - 1
    dt = float(times[1] - times[0])
    Z = blocked_normals(seed, paths, n)
    dW = (math.sqrt(dt) * Z).T.copy()
    state = np.empty((n + 1, paths))
    state[0] = model.theta0
    if model.kind == "none":
        state[1:] = model.theta0
        return FactorPaths(times, state, dW, seed)
    if model.kappa == 0.0:
        decay = 1.0
        sd = model.eta * math.sqrt(dt)
    else:
        decay = math.exp(-model.kappa * dt)
        sd = model.eta * math.sqrt(-math.expm1(-2.0 * model.kappa * dt) / (2.0 * model.kappa))
    for i in range(n):
        state[i + 1] = model.theta_bar + (state[i] - model.theta_bar) * decay \
            + sd * Z[:, i]
    return FactorPaths(times, state, dW, seed)


def wealth_factor_paths(scenario: MarketScenario, strategy: StrategyGrid,
                        paths: int, seed: int) -> FactorPaths:
    """Wealth itself as the regression state (deterministic-parameter flows)."""
    X, dW = simulate_wealth_paths(scenario, strategy, paths, seed)
    return FactorPaths(scenario.times, X, dW, seed)


# ---------------------------------------------------------------------------
# driver specification and solver


@dataclass(frozen=True)
class DriverSpec:
    """Driver f(t, state, y, z [, deps]) and terminal xi(factor_paths, s).

    Both are vectorized over paths. ``deps`` is passed iff ``depends_on`` is
    nonempty, as a tuple of (Y_row, Z_row) arrays of the referenced solutions
    at the current time index. growth_class "quadratic_in_z" enables Z
    truncation before the driver call.
    """

    driver: Callable
    terminal: Callable
    growth_class: str = "linear"
    depends_on: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.growth_class not in ("linear", "quadratic_in_z"):
            raise ValidationError(
                f"growth_class must be 'linear' or 'quadratic_in_z', got {self.growth_class!r}"
            )
        object.__setattr__(self, "depends_on", tuple(int(i) for i in self.depends_on))
        if any(i < 0 for i in self.depends_on):
            raise ValidationError("depends_on indices must be nonnegative")


@dataclass(frozen=True)
class BsdeGrid:
    """Discretized solution: Y (times x paths), Z (same shape, terminal row 0),
    regression metadata, and the Y_0 cross-path summary."""

    times: np.ndarray
    Y: np.ndarray
    Z: np.ndarray
    basis_degree: int
    paths: int
    seed: int
    y0_mean: float
    y0_se: float
    z_saturation: float = 0.0


class _Regression:
    """Per-time-step polynomial regression operator on the state cross-section.

    Gram system B'B c = B'y solved through SVD of the (d+1) x (d+1) Gram
    matrix; rank deficiency raises unless the state is constant, where the
    basis drops to the intercept.
    """

    def __init__(self, state_row: np.ndarray, degree: int):
        mean = float(np.mean(state_row))
        std = float(np.std(state_row))
        if std <= _CONST_STATE_TOL * (1.0 + abs(mean)) or degree == 0:
            self.B = np.ones((state_row.size, 1))
        else:
            x = (state_row - mean) / std
            self.B = np.vander(x, degree + 1, increasing=True)
        G = self.B.T @ self.B
        U, s, Vt = np.linalg.svd(G)
        if s[0] <= 0.0 or s[-1] <= 1e-13 * s[0]:
            raise RegressionSingular(
                f"regression Gram matrix rank-deficient: singular values {s}"
            )
        self._U, self._s, self._Vt = U, s, Vt

    def fit_values(self, target: np.ndarray) -> np.ndarray:
        """Fitted conditional expectation of target given the state row."""
        rhs = self.B.T @ target
        coeffs = self._Vt.T @ ((self._U.T @ rhs) / self._s)
        return self.B @ coeffs


def _regression_bank(fp: FactorPaths, degree: int) -> list[_Regression | None]:
    """Lazily filled per-time regression cache shared across flow members."""
    return [None] * (fp.grid_n + 1)


def solve_bsde(spec: DriverSpec, fp: FactorPaths, basis_degree: int = 3,
               start_index: int = 0, flow_index: int | None = None,
               z_bound: float = 50.0, picard: int = 1,
               z_estimator: str = "centered",
               deps: Sequence[BsdeGrid] = (),
               _bank: list | None = None) -> BsdeGrid:
    """Backward regression solve of one BSDE on [t_start, T].

    Rows with index below ``start_index`` are left at zero (flow members live
    on their own subinterval). Y_0 statistics refer to the first solved row.
    """
    if basis_degree < 1:
        raise ValidationError(f"basis degree must be >= 1, got {basis_degree}")
    if z_estimator not in ("centered", "plain"):
        raise ValidationError(f"z_estimator must be 'centered' or 'plain', got {z_estimator!r}")
    if picard < 1:
        raise ValidationError(f"picard iterations must be >= 1, got {picard}")
    n, paths, dt = fp.grid_n, fp.paths, fp.dt
    if not 0 <= start_index <= n:
        raise ValidationError(f"start_index {start_index} outside [0, {n}]")
    s_idx = start_index if flow_index is None else flow_index
    if any(d >= len(deps) for d in spec.depends_on):
        raise ValidationError("driver dependencies not supplied to solve_bsde")

    Y = np.zeros((n + 1, paths))
    Z = np.zeros((n + 1, paths))
    Y[n] = np.broadcast_to(np.asarray(spec.terminal(fp, s_idx), dtype=float), (paths,))
    if not np.all(np.isfinite(Y[n])):
        raise ValidationError("terminal condition produced non-finite values")
    bank = _bank if _bank is not None else _regression_bank(fp, basis_degree)
    quad = spec.growth_class == "quadratic_in_z"
    saturated = 0
    total = 0
    y0_samples = Y[n]

    for i in range(n - 1, start_index - 1, -1):
        if bank[i] is None:
            bank[i] = _Regression(fp.state[i], basis_degree)
        reg = bank[i]
        C = reg.fit_values(Y[i + 1])
        if z_estimator == "centered":
            z_target = (Y[i + 1] - C) * fp.dW[i] / dt
        else:
            z_target = Y[i + 1] * fp.dW[i] / dt
        Zfit = reg.fit_values(z_target)
        Z[i] = Zfit
        z_in = np.clip(Zfit, -z_bound, z_bound) if quad else Zfit
        if quad:
            saturated += int(np.count_nonzero(np.abs(Zfit) >= z_bound))
            total += Zfit.size
        dep_rows = tuple((deps[d].Y[i], deps[d].Z[i]) for d in spec.depends_on)
        y_pred = C
        for _ in range(picard):
            if spec.depends_on:
                f_val = spec.driver(float(fp.times[i]), fp.state[i], y_pred, z_in, dep_rows)
            else:
                f_val = spec.driver(float(fp.times[i]), fp.state[i], y_pred, z_in)
            y_new = C + np.asarray(f_val, dtype=float) * dt
            y_pred = y_new
        Y[i] = y_pred
        y0_samples = Y[i + 1] + np.asarray(f_val, dtype=float) * dt if i == start_index else y0_samples

    if quad and total > 0 and saturated > 0.01 * total:
        warnings.warn(
            f"{saturated / total:.1%} of Z values hit the truncation bound {z_bound}",
            ZTruncationSaturated,
            stacklevel=2,
        )
    y0_mean = float(np.mean(Y[start_index]))
    y0_se = float(np.std(y0_samples, ddof=1) / math.sqrt(paths)) if paths > 1 else 0.0
    return BsdeGrid(
        times=fp.times, Y=Y, Z=Z, basis_degree=basis_degree, paths=paths,
        seed=fp.seed, y0_mean=y0_mean, y0_se=y0_se,
        z_saturation=(saturated / total if total else 0.0),
    )


@dataclass(frozen=True)
class DiagonalProcess:
    """Flow member s sampled at its own start time s.

    y_values[s] = path mean of Y^{(s)}_s; y_paths keeps the per-path variant;
    z_values[s] = path mean of Z^{(s)}_s for s < grid_n (terminal row has no
    martingale increment, stored as 0).
    """

    times: np.ndarray
    y_values: np.ndarray
    y_paths: np.ndarray
    z_values: np.ndarray

    @property
    def values(self) -> np.ndarray:
        return self.y_values


def solve_flow_diagonal(family: Callable[[int], DriverSpec], fp: FactorPaths,
                        basis_degree: int = 3, **solver_kwargs) -> DiagonalProcess:
    """Solve one BSDE per grid index s on [s, T] over the shared path set and
    extract member s at time s. Regression operators are reused across
    members (identical state rows), so a family constant in s reproduces the
    single-solve rows bitwise."""
    n = fp.grid_n
    bank = _regression_bank(fp, basis_degree)
    y_diag = np.zeros(n + 1)
    y_paths = np.zeros((n + 1, fp.paths))
    z_diag = np.zeros(n + 1)
    for s in range(n, -1, -1):
        grid = solve_bsde(family(s), fp, basis_degree, start_index=s,
                          flow_index=s, _bank=bank, **solver_kwargs)
        y_paths[s] = grid.Y[s]
        y_diag[s] = float(np.mean(grid.Y[s]))
        if s < n:
            z_diag[s] = float(np.mean(grid.Z[s]))
    return DiagonalProcess(fp.times, y_diag, y_paths, z_diag)


def solve_recurrent_system(specs: Sequence[DriverSpec], fp: FactorPaths,
                           basis_degree: int = 3, **solver_kwargs) -> list[BsdeGrid]:
    """Solve an ordered list of BSDEs where drivers may read the (Y, Z) grids
    of strictly earlier members."""
    for own, spec in enumerate(specs):
        bad = [d for d in spec.depends_on if d >= own]
        if bad:
            raise CyclicDependency(
                f"spec {own} depends on indices {bad}; dependencies must be "
                "strictly earlier in the list"
            )
    bank = _regression_bank(fp, basis_degree)
    solved: list[BsdeGrid] = []
    for spec in specs:
        solved.append(
            solve_bsde(spec, fp, basis_degree, deps=solved, _bank=bank, **solver_kwargs)
        )
    return solved


# ---------------------------------------------------------------------------
# equilibrium cross-validation through the flow diagonal


@dataclass(frozen=True)
class FlowDiagnostics:
    """Diagonal check of the mean-variance first-order condition.

    The zero-driver BSDE with terminal X_T has Z_s = e^{R(s)} sigma(s) u(s)
    under a deterministic strategy, so theta(s) - 2 gamma2 sigma(s) Z_s = 0
    exactly at the mean-variance equilibrium; residuals below sampling noise
    confirm the flow solver against the closed-form sweep.
    """

    diagonal: DiagonalProcess
    residuals: np.ndarray
    residual_rms: float
    residual_max: float
    gamma2: float
    implied_u: np.ndarray


def mv_flow_residual(scenario: MarketScenario, gamma2: float, paths: int,
                     seed: int, basis_degree: int = 3,
                     strategy: StrategyGrid | None = None) -> FlowDiagnostics:
    """Solve the terminal-wealth flow under the MV strategy (or a supplied
    one) and report the first-order-condition residual along the diagonal."""
    if strategy is None:
        strategy = mv_closed_form(scenario, gamma2)
    fp = wealth_factor_paths(scenario, strategy, paths, seed)

    spec = DriverSpec(
        driver=lambda t, state, y, z: 0.0,
        terminal=lambda fpaths, s: fpaths.state[-1],
    )
    diag = solve_flow_diagonal(lambda s: spec, fp, basis_degree)
    n = scenario.grid_n
    res = scenario.theta[:n] - 2.0 * gamma2 * scenario.sigma[:n] * diag.z_values[:n]
    R = rate_to_horizon(scenario)
    implied = diag.z_values[:n] * np.exp(-R[:n]) / scenario.sigma[:n]
    return FlowDiagnostics(
        diagonal=diag,
        residuals=res,
        residual_rms=float(np.sqrt(np.mean(res ** 2))),
        residual_max=float(np.max(np.abs(res))),
        gamma2=gamma2,
        implied_u=implied,
    )
