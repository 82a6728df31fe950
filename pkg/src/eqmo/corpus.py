"""Named and randomized scenario/objective cases shared by tests and scripts.

The named cases pin down the hand-derivable closed forms (constant-parameter
mean-variance family and its higher-moment variants); the randomized corpus
draws constant-parameter markets with risk parts affine in the variance, the
class whose finite-window slopes reproduce the gain quadratic exactly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import MarketScenario, ObjectiveSpec, ObjectiveTerm


@dataclass(frozen=True)
class Case:
    name: str
    scenario: MarketScenario
    objective: ObjectiveSpec


def _objective(mode: str, weights: dict[int, float]) -> ObjectiveSpec:
    return ObjectiveSpec.from_weights(mode, weights)


def mv_base(grid_n: int = 100) -> Case:
    return Case(
        "mv_base",
        MarketScenario.constant(0.0, 0.3, 0.2, 1.0, 1.0, grid_n),
        _objective("central", {1: 1.0, 2: -1.0}),
    )


def mv_discounted(grid_n: int = 100) -> Case:
    return Case(
        "mv_discounted",
        MarketScenario.constant(0.05, 0.3, 0.2, 1.0, 1.0, grid_n),
        _objective("central", {1: 1.0, 2: -1.0}),
    )


def kurtosis_cumulant(grid_n: int = 100) -> Case:
    """Mean minus variance minus excess kurtosis (fourth cumulant)."""
    return Case(
        "kurtosis_cumulant",
        MarketScenario.constant(0.0, 0.3, 0.2, 1.0, 1.0, grid_n),
        _objective("cumulant", {1: 1.0, 2: -1.0, 4: -0.8}),
    )


def raw_m4(grid_n: int = 100) -> Case:
    """Mean minus variance minus raw fourth central moment."""
    return Case(
        "raw_m4",
        MarketScenario.constant(0.0, 0.3, 0.2, 1.0, 1.0, grid_n),
        _objective("central", {1: 1.0, 2: -1.0, 4: -0.5}),
    )


def mvsk_central(grid_n: int = 100) -> Case:
    """Mean - variance + skewness - kurtosis with small higher weights."""
    return Case(
        "mvsk_central",
        MarketScenario.constant(0.0, 0.3, 0.2, 1.0, 1.0, grid_n),
        _objective("central", {1: 1.0, 2: -1.0, 3: 0.05, 4: -0.1}),
    )


def skew_cumulant(grid_n: int = 100) -> Case:
    return Case(
        "skew_cumulant",
        MarketScenario.constant(0.02, 0.25, 0.3, 1.0, 1.0, grid_n),
        _objective("cumulant", {1: 1.0, 2: -1.0, 3: 0.1}),
    )


def theta_zero(grid_n: int = 50) -> Case:
    return Case(
        "theta_zero",
        MarketScenario.constant(0.03, 0.0, 0.2, 1.0, 1.0, grid_n),
        _objective("central", {1: 1.0, 2: -1.0}),
    )


def time_varying(grid_n: int = 100) -> Case:
    t = np.linspace(0.0, 1.0, grid_n + 1)
    scenario = MarketScenario(
        r=0.02 + 0.01 * t,
        theta=0.3 + 0.1 * np.sin(2.0 * np.pi * t),
        sigma=0.2 + 0.05 * np.cos(np.pi * t),
        T=1.0,
        x0=1.0,
        grid_n=grid_n,
    )
    return Case("time_varying", scenario, _objective("central", {1: 1.0, 2: -0.8}))


def named_corpus() -> list[Case]:
    """All named cases; every one except theta_zero has a nonzero risk premium."""
    return [
        mv_base(),
        mv_discounted(),
        kurtosis_cumulant(),
        raw_m4(),
        mvsk_central(),
        skew_cumulant(),
        theta_zero(),
        time_varying(),
    ]


def random_affine_corpus(seed: int = 20240811, count: int = 10) -> list[Case]:
    """Constant-parameter markets with variance-affine risk parts.

    Weight and volatility ranges keep objective values O(10) so that finite
    difference quotients of J retain at least 12 significant digits.
    """
    rng = np.random.default_rng(seed)
    cases = []
    for i in range(count):
        r = float(rng.uniform(0.0, 0.08))
        theta = float(rng.uniform(0.05, 0.3))
        sigma = float(rng.uniform(0.2, 0.5))
        T = float(rng.choice([0.5, 1.0, 2.0]))
        grid_n = int(rng.choice([40, 80, 100]))
        x0 = float(rng.uniform(0.5, 2.0))
        w1 = float(rng.uniform(0.5, 2.0))
        w2 = -float(rng.uniform(0.5, 2.0)) * w1
        mode = str(rng.choice(["central", "cumulant"]))
        weights: dict[int, float] = {1: w1, 2: w2}
        if mode == "cumulant":
            for k in (3, 4, 5, 6):
                if rng.uniform() < 0.6:
                    weights[k] = float(rng.uniform(-1.0, 1.0))
        else:
            for k in (3, 5):  # odd central moments vanish on the Gaussian family
                if rng.uniform() < 0.5:
                    weights[k] = float(rng.uniform(-1.0, 1.0))
        scenario = MarketScenario.constant(r, theta, sigma, T, x0, grid_n)
        cases.append(Case(f"random_affine_{i}", scenario, _objective(mode, weights)))
    return cases


def cross_term_objective() -> ObjectiveSpec:
    """Variance-kurtosis product term, curvature without a pure m4 weight."""
    return ObjectiveSpec(
        "central",
        (
            ObjectiveTerm(((1, 1),), 1.0),
            ObjectiveTerm(((2, 1),), -1.0),
            ObjectiveTerm(((2, 1), (4, 1)), -0.2),
        ),
    )
