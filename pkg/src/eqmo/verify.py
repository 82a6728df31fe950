"""Independent checks of candidate equilibrium strategies.

Two routes that must agree: the assembled gain quadratic Phi(t, v), scanned
in closed form over times and deviations, and literal finite-window
perturbations whose objective difference quotients reproduce Phi exactly for
affine risk parts (piecewise-constant integrals have no quadrature error).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EpsNotOnGrid, OutOfRange
from .equilibrium import PERTURBATION_CONVENTION, default_v_grid, scan_phi_max
from .model import MarketScenario, ObjectiveSpec, StrategyGrid
from .moments import conditional_moments, objective_value


@dataclass(frozen=True)
class EquilibriumReport:
    """Sign report for Phi over the whole grid.

    verdict is "pass" iff max_phi <= tolerance; witness is the maximizing
    (t, v, Phi) triple when the check fails. per_t_summary rows are
    (t, max over v of Phi(t, v)) including the continuous quadratic vertex
    wherever the second-order coefficient is negative.
    """

    verdict: str
    max_phi: float
    witness: tuple[float, float, float] | None
    per_t_summary: tuple[tuple[float, float], ...]
    convention: str
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"


def equilibrium_report(scenario: MarketScenario, objective: ObjectiveSpec,
                       strategy: StrategyGrid, v_grid: np.ndarray | None = None,
                       tolerance: float = 1e-8) -> EquilibriumReport:
    """Scan Phi(t, v) over all grid times and deviations; pass iff <= tolerance."""
    if v_grid is None:
        v_grid = default_v_grid(strategy)
    max_phi, witness, per_t = scan_phi_max(scenario, objective, strategy, v_grid)
    verdict = "pass" if max_phi <= tolerance else "fail"
    summary = tuple(
        (float(t), float(m)) for t, m in zip(scenario.times, per_t)
    )
    return EquilibriumReport(
        verdict=verdict,
        max_phi=max_phi,
        witness=None if verdict == "pass" else witness,
        per_t_summary=summary,
        convention=PERTURBATION_CONVENTION,
        tolerance=tolerance,
    )


def finite_eps_check(scenario: MarketScenario, objective: ObjectiveSpec,
                     strategy: StrategyGrid, t: float, v: float,
                     eps_list) -> list[float]:
    """Difference-quotient oracle for Phi.

    For each eps = k dt, literally add v to the strategy on [t, t + eps) and
    return (J_perturbed - J_base) / (k dt), with J evaluated through the exact
    conditional moments at (t, x0). For a risk part affine in the variance the
    smallest-eps slope equals Phi(t, v) to float round-off; curvature in the
    risk part contributes an O(eps) term.
    """
    strategy.check_grid(scenario)
    i0 = scenario.grid_index(t)
    dt = scenario.dt
    n = objective.max_order
    widths: list[int] = []
    for eps in eps_list:
        k = int(round(eps / dt))
        if k < 1 or abs(k * dt - eps) > 1e-9 * max(1.0, scenario.T):
            raise EpsNotOnGrid(f"eps = {eps} is not a positive multiple of dt = {dt}")
        if i0 + k > scenario.grid_n:
            raise OutOfRange(f"t + eps = {t + eps} beyond horizon T = {scenario.T}")
        widths.append(k)
    base = objective_value(
        objective, conditional_moments(scenario, strategy, t, scenario.x0, n)
    )
    slopes = []
    for k in widths:
        pert = strategy.perturbed(i0, i0 + k, v)
        J = objective_value(
            objective, conditional_moments(scenario, pert, t, scenario.x0, n)
        )
        slopes.append((J - base) / (k * dt))
    return slopes
