"""Spike-variation equilibrium machinery for higher-moment objectives.

Perturbing a strategy by v on a vanishing window [t, t+eps) shifts the
conditional mean of X_T by eps e^{R(t)} theta(t) v and its variance by
eps e^{2R(t)} sigma(t)^2 (2 u(t) v + v^2), while the conditional law stays
Gaussian. The first-order objective gain rate is therefore the quadratic

    Phi(t, v) = w1 e^R theta v + D(t) e^{2R} sigma^2 (2 u v + v^2),

with w1 the mean weight and D(t) = G'(V(t)), where G(V) is the objective's
risk part restricted to the Gaussian family. An equilibrium is a strategy
with Phi(t, v) <= 0 everywhere, which at interior optimum means the linear
coefficient vanishes (the per-step stationarity equation solved backward
here) and D <= 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    AmbiguousRoot,
    EmptyVGrid,
    NoRealRoot,
    NoSecondOrderTerm,
    SolverError,
    UnsupportedObjectiveClass,
    ValidationError,
)
from .model import (
    MarketScenario,
    ObjectiveSpec,
    Polynomial,
    StrategyGrid,
    gaussian_risk_polynomial,
    rate_to_horizon,
    validate_scenario,
)
from .moments import moments_to_go
from .roots import real_roots

SCHEMES = ("explicit", "implicit")

PERTURBATION_CONVENTION = "additive-spike"
"""Deviations are added to the candidate control on the spike window."""


@dataclass(frozen=True)
class PhiPolynomial:
    """Quadratic in the deviation v: the first-order gain rate at time t."""

    t: float
    poly: Polynomial
    D_eff: float

    def __post_init__(self) -> None:
        if abs(self.poly.coeff(0)) > 1e-12:
            raise ValidationError(
                f"Phi(0) must vanish, got constant term {self.poly.coeff(0)}"
            )

    @property
    def linear(self) -> float:
        return self.poly.coeff(1)

    @property
    def quadratic(self) -> float:
        return self.poly.coeff(2)

    def __call__(self, v):
        return self.poly(v)


@dataclass(frozen=True)
class SweepResult:
    """Backward-sweep output: candidate strategy plus per-step diagnostics."""

    strategy: StrategyGrid
    variance_to_go: np.ndarray
    D: np.ndarray
    residuals: np.ndarray
    scheme: str


def _check_scheme(scheme: str) -> None:
    if scheme not in SCHEMES:
        raise ValidationError(f"scheme must be one of {SCHEMES}, got {scheme!r}")


def phi_profile(scenario: MarketScenario, objective: ObjectiveSpec,
                strategy: StrategyGrid):
    """Arrays (a, b) with Phi(t_i, v) = a_i v + b_i v^2 for every grid index."""
    strategy.check_grid(scenario)
    w1 = objective.mean_weight()
    Dpoly = gaussian_risk_polynomial(objective).derivative()
    R = rate_to_horizon(scenario)
    _, V = moments_to_go(scenario, strategy)
    g = np.exp(R)
    D = Dpoly(V) if not Dpoly.is_zero else np.zeros_like(V)
    b = D * g * g * scenario.sigma ** 2
    a = w1 * g * scenario.theta + 2.0 * b * strategy.values
    return a, b


def phi_polynomial(scenario: MarketScenario, objective: ObjectiveSpec,
                   strategy: StrategyGrid, t: float) -> PhiPolynomial:
    """The perturbation gain quadratic at grid time t (zero constant term)."""
    i = scenario.grid_index(t)
    a, b = phi_profile(scenario, objective, strategy)
    return PhiPolynomial(t, Polynomial((0.0, float(a[i]), float(b[i]))), float(b[i]))


# ---------------------------------------------------------------------------
# backward sweep


def mv_closed_form(scenario: MarketScenario, gamma2: float) -> StrategyGrid:
    """Equilibrium of J = m1 - gamma2 m2: u(t) = theta e^{-R} / (2 gamma2 sigma^2)."""
    if gamma2 <= 0.0 or not math.isfinite(gamma2):
        raise ValidationError(f"gamma2 must be positive, got {gamma2}")
    R = rate_to_horizon(scenario)
    values = scenario.theta * np.exp(-R) / (2.0 * gamma2 * scenario.sigma ** 2)
    return StrategyGrid(scenario.times, values)


def _cauchy_root_bound(poly: Polynomial) -> float:
    """Radius containing every root: 1 + max |c_i| / |c_lead|."""
    lead = abs(poly.coeffs[-1])
    return 1.0 + max(abs(c) for c in poly.coeffs[:-1]) / lead


def _solve_step(objective: ObjectiveSpec, Dpoly: Polynomial, V_plus: float,
                theta: float, sigma: float, g: float, dt: float,
                prev_value: float, scheme: str, terminal: bool) -> float:
    """Stationarity root at one grid point given the future variance-to-go."""
    w1 = objective.mean_weight()
    if theta == 0.0:
        return 0.0  # stationarity degenerates to 2 D e^{2R} sigma^2 u = 0
    s = g * g * sigma ** 2
    if scheme == "explicit" or terminal:
        D = float(Dpoly(V_plus)) if not Dpoly.is_zero else 0.0
        if D == 0.0:
            raise NoSecondOrderTerm(f"D = 0 at variance-to-go {V_plus}")
        return -w1 * g * theta / (2.0 * D * s)
    # implicit: substitute V = V_plus + dt * e^{2R} sigma^2 u^2 into D(V)
    if Dpoly.is_zero:
        raise NoSecondOrderTerm("objective has no even-order risk sensitivity")
    Dw = Dpoly.compose(Polynomial((V_plus, dt * s)))  # D as poly in w = u^2
    coeffs = [0.0] * (2 * max(Dw.degree, 0) + 2)
    coeffs[0] = w1 * g * theta
    for j, c in enumerate(Dw.coeffs):
        coeffs[2 * j + 1] += 2.0 * s * c
    poly = Polynomial(tuple(coeffs))
    if poly.degree < 1:
        raise NoSecondOrderTerm("stationarity polynomial degenerates to a constant")
    bound = _cauchy_root_bound(poly)
    candidates = real_roots(poly, -bound, bound)
    if not candidates:
        raise NoRealRoot("stationarity polynomial has no real root")
    admissible = [u for u in candidates
                  if Dpoly(V_plus + dt * s * u * u) <= 0.0]
    if not admissible:
        raise AmbiguousRoot(
            f"no stationarity root on the maximizer branch (D <= 0); "
            f"candidates: {candidates}",
            candidates=tuple(candidates),
        )
    return min(admissible, key=lambda u: abs(u - prev_value))


def stationarity_solve_step(scenario: MarketScenario, objective: ObjectiveSpec,
                            future_state: tuple[float, float], t: float,
                            prev_value: float, scheme: str = "explicit") -> float:
    """Control value solving the per-step first-order condition at time t.

    ``future_state`` is the (variance, mean)-to-go accumulated over (t, T]
    by the already-fixed future controls; only the variance enters the
    equation because the objective is affine in the conditional mean.
    """
    _check_scheme(scheme)
    i = scenario.grid_index(t)
    V_plus = float(future_state[0])
    R = rate_to_horizon(scenario)
    return _solve_step(
        objective, gaussian_risk_polynomial(objective).derivative(), V_plus,
        float(scenario.theta[i]), float(scenario.sigma[i]), math.exp(R[i]),
        scenario.dt, prev_value, scheme, terminal=(i == scenario.grid_n),
    )


def backward_sweep(scenario: MarketScenario, objective: ObjectiveSpec,
                   scheme: str = "explicit") -> SweepResult:
    """Solve the stationarity condition backward from T on the whole grid.

    V(T) = 0; at each earlier step the control solves the (linear or
    polynomial) stationarity equation given the variance-to-go of the future
    steps, then its own variance contribution is committed. Residuals report
    |dPhi/dv at 0| re-evaluated at the committed state.
    """
    _check_scheme(scheme)
    validate_scenario(scenario, objective)
    Dpoly = gaussian_risk_polynomial(objective).derivative()
    w1 = objective.mean_weight()
    R = rate_to_horizon(scenario)
    n = scenario.grid_n
    dt = scenario.dt
    u = np.zeros(n + 1)
    V = np.zeros(n + 1)
    D = np.zeros(n + 1)
    res = np.zeros(n + 1)

    def solve_at(i: int, V_plus: float, prev: float, terminal: bool) -> float:
        try:
            return _solve_step(
                objective, Dpoly, V_plus, float(scenario.theta[i]),
                float(scenario.sigma[i]), math.exp(R[i]), dt, prev, scheme,
                terminal,
            )
        except SolverError as e:
            cls = type(e)
            msg = f"step {i} (t = {i * dt:.6g}): {e}"
            if isinstance(e, AmbiguousRoot):
                raise cls(msg, candidates=e.candidates, step=i) from e
            raise cls(msg, step=i) from e

    u[n] = solve_at(n, 0.0, 0.0, terminal=True)
    for i in range(n - 1, -1, -1):
        u[i] = solve_at(i, float(V[i + 1]), float(u[i + 1]), terminal=False)
        g = math.exp(R[i])
        V[i] = V[i + 1] + g * g * scenario.sigma[i] ** 2 * u[i] ** 2 * dt
    D[:] = Dpoly(V) if not Dpoly.is_zero else 0.0
    g_all = np.exp(R)
    res[:] = np.abs(
        w1 * g_all * scenario.theta
        + 2.0 * D * g_all * g_all * scenario.sigma ** 2 * u
    )
    return SweepResult(StrategyGrid(scenario.times, u), V, D, res, scheme)


# ---------------------------------------------------------------------------
# homogeneity decision


@dataclass(frozen=True)
class HomogeneityVerdict:
    """Outcome of testing the MV strategy against the full objective."""

    holds: bool
    gamma2: float
    max_phi: float
    witness: tuple[float, float, float] | None  # (t, v, Phi) maximizer


def default_v_grid(strategy: StrategyGrid, points_per_side: int = 20) -> np.ndarray:
    """Symmetric log-spaced deviation grid: 2*points_per_side + 1 values
    covering [-10 |u|_max, 10 |u|_max] down to 1e-4 of that, plus 0."""
    scale = 10.0 * float(np.max(np.abs(strategy.values)))
    if scale == 0.0:
        scale = 10.0
    side = scale * np.logspace(-4.0, 0.0, points_per_side)
    return np.concatenate([-side[::-1], [0.0], side])


def _mv_gamma2(objective: ObjectiveSpec) -> float:
    w1 = objective.mean_weight()
    w2 = objective.pure_weight(2)
    if w1 <= 0.0 or w2 >= 0.0:
        raise UnsupportedObjectiveClass(
            f"need mean weight > 0 and second-order weight < 0 to form the "
            f"reference mean-variance strategy, got w1 = {w1}, w2 = {w2}"
        )
    return -w2 / w1


def scan_phi_max(scenario: MarketScenario, objective: ObjectiveSpec,
                 strategy: StrategyGrid, v_grid: np.ndarray):
    """Max of Phi over grid times x (v_grid plus the continuous quadratic
    vertex where D_eff < 0); returns (max_phi, witness, per_t_max)."""
    v_grid = np.asarray(v_grid, dtype=float)
    if v_grid.size == 0:
        raise EmptyVGrid("deviation grid is empty")
    a, b = phi_profile(scenario, objective, strategy)
    phis = a[:, None] * v_grid[None, :] + b[:, None] * v_grid[None, :] ** 2
    per_t_max = phis.max(axis=1)
    per_t_arg = v_grid[np.argmax(phis, axis=1)]
    concave = b < 0.0
    v_star = np.where(concave, -a / np.where(concave, 2.0 * b, 1.0), 0.0)
    phi_star = np.where(concave, -(a * a) / np.where(concave, 4.0 * b, 1.0), -np.inf)
    better = concave & (phi_star > per_t_max)
    per_t_max = np.where(better, phi_star, per_t_max)
    per_t_arg = np.where(better, v_star, per_t_arg)
    i = int(np.argmax(per_t_max))
    witness = (float(scenario.times[i]), float(per_t_arg[i]), float(per_t_max[i]))
    return float(per_t_max[i]), witness, per_t_max


def homogeneity_check_numeric(scenario: MarketScenario, objective: ObjectiveSpec,
                              v_grid: np.ndarray | None = None,
                              tolerance: float = 1e-8) -> HomogeneityVerdict:
    """Install the objective's own mean-variance strategy and test whether the
    full objective keeps Phi <= tolerance everywhere."""
    gamma2 = _mv_gamma2(objective)
    strategy = mv_closed_form(scenario, gamma2)
    if v_grid is None:
        v_grid = default_v_grid(strategy)
    max_phi, witness, _ = scan_phi_max(scenario, objective, strategy, v_grid)
    holds = max_phi <= tolerance
    return HomogeneityVerdict(holds, gamma2, max_phi, None if holds else witness)


def homogeneity_predicate(objective: ObjectiveSpec) -> bool:
    """Algebraic form of the numeric check: the mean-variance strategy stays an
    equilibrium for the full objective iff the Gaussian-restricted risk part
    G(V) is affine, G(V) = G(0) + w2 V (no V^j terms, j >= 2).

    Then D(t) = w2 for every variance level: installing the MV strategy zeroes
    the linear Phi coefficient at all times and w2 < 0 keeps the quadratic
    coefficient negative. Any curvature G''(V) != 0 leaves a linear term
    2 (G'(V) - w2) e^{2R} sigma^2 u v that changes sign, so some deviation
    gains to first order on every market with a nonzero risk premium.
    """
    _mv_gamma2(objective)  # class gate: w1 > 0, w2 < 0
    G = gaussian_risk_polynomial(objective)
    return all(G.coeff(j) == 0.0 for j in range(2, G.degree + 1))
