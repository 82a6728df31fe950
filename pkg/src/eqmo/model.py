"""Market/objective data model, validation, and moment-cumulant algebra.

The scenario lives on a uniform time grid with piecewise-constant parameters
and strategies: every integral the package needs is then a finite left-endpoint
sum, exact for the discrete dynamics, so equilibrium residuals measure algebra
rather than quadrature noise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EmptyRiskTerm,
    GridMismatch,
    NonAffineMeanTerm,
    OutOfRange,
    SigmaTooSmall,
    UnsupportedOrder,
    ValidationError,
)

MAX_ORDER = 8

# (k-1)!! for even k: the Gaussian central moment of order k is (k-1)!! V^{k/2}
_DOUBLE_FACTORIAL = {2: 1.0, 4: 3.0, 6: 15.0, 8: 105.0}


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.asarray(a, dtype=float)
    out.flags.writeable = False
    return out


# ---------------------------------------------------------------------------
# Polynomial


@dataclass(frozen=True)
class Polynomial:
    """Dense real polynomial; ``coeffs[i]`` multiplies x**i.

    Canonical form: trailing zero coefficients are stripped on construction,
    so the trailing coefficient is nonzero unless the polynomial is zero
    (empty tuple).
    """

    coeffs: tuple[float, ...]

    def __post_init__(self) -> None:
        c = tuple(float(v) for v in self.coeffs)
        if any(not math.isfinite(v) for v in c):
            raise ValidationError("polynomial coefficients must be finite")
        while c and c[-1] == 0.0:
            c = c[:-1]
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        """Degree; -1 for the zero polynomial."""
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    def coeff(self, power: int) -> float:
        """Coefficient of x**power, 0.0 beyond the stored degree."""
        return self.coeffs[power] if 0 <= power < len(self.coeffs) else 0.0

    def __call__(self, x):
        acc = np.zeros_like(np.asarray(x, dtype=float))
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc if isinstance(x, np.ndarray) else float(acc)

    def derivative(self) -> "Polynomial":
        return Polynomial(tuple(i * c for i, c in enumerate(self.coeffs) if i >= 1))

    def scale(self, a: float) -> "Polynomial":
        return Polynomial(tuple(a * c for c in self.coeffs))

    def __add__(self, other: "Polynomial") -> "Polynomial":
        n = max(len(self.coeffs), len(other.coeffs))
        return Polynomial(tuple(self.coeff(i) + other.coeff(i) for i in range(n)))

    def __mul__(self, other: "Polynomial") -> "Polynomial":
        if self.is_zero or other.is_zero:
            return Polynomial(())
        out = [0.0] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return Polynomial(tuple(out))

    def compose(self, inner: "Polynomial") -> "Polynomial":
        """self(inner(x)) by Horner over polynomial arithmetic."""
        acc = Polynomial(())
        for c in reversed(self.coeffs):
            acc = acc * inner + Polynomial((c,))
        return acc


# ---------------------------------------------------------------------------
# MarketScenario


@dataclass(frozen=True)
class MarketScenario:
    """Single-asset market primitives on a uniform grid of ``grid_n`` steps.

    ``r``, ``theta``, ``sigma`` hold grid_n + 1 samples; the value at index i
    applies on [t_i, t_{i+1}) (left-constant interpolation). Units: r and
    theta per year, sigma per sqrt-year, T in years.
    """

    r: np.ndarray
    theta: np.ndarray
    sigma: np.ndarray
    T: float
    x0: float
    grid_n: int

    def __post_init__(self) -> None:
        if self.T <= 0.0 or not math.isfinite(self.T):
            raise ValidationError(f"T must be positive and finite, got {self.T}")
        if self.grid_n < 1:
            raise ValidationError(f"grid_n must be >= 1, got {self.grid_n}")
        if not math.isfinite(self.x0):
            raise ValidationError("x0 must be finite")
        for name in ("r", "theta", "sigma"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.ndim == 0:
                arr = np.full(self.grid_n + 1, float(arr))
            if arr.shape != (self.grid_n + 1,):
                raise GridMismatch(
                    f"{name} has shape {arr.shape}, expected ({self.grid_n + 1},)"
                )
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"{name} contains non-finite entries")
            object.__setattr__(self, name, _readonly(arr))

    @classmethod
    def constant(cls, r: float, theta: float, sigma: float, T: float,
                 x0: float, grid_n: int) -> "MarketScenario":
        n = grid_n + 1
        return cls(np.full(n, float(r)), np.full(n, float(theta)),
                   np.full(n, float(sigma)), T, x0, grid_n)

    @property
    def dt(self) -> float:
        return self.T / self.grid_n

    @property
    def times(self) -> np.ndarray:
        return _readonly(np.linspace(0.0, self.T, self.grid_n + 1))

    def grid_index(self, t: float, tol: float = 1e-9) -> int:
        """Index of the grid point equal to ``t`` (within ``tol * max(1,T)``)."""
        from .errors import OffGridTime

        idx = int(round(t / self.dt))
        if idx < 0 or idx > self.grid_n or abs(idx * self.dt - t) > tol * max(1.0, self.T):
            raise OffGridTime(f"t={t} is not a grid point of step {self.dt}")
        return idx


def rate_to_horizon(scenario: MarketScenario) -> np.ndarray:
    """R(t_i) = integral of r over [t_i, T] under left-constant interpolation.

    Accumulated right-to-left so every downstream module shares one float
    association order; R[grid_n] = 0.
    """
    R = np.zeros(scenario.grid_n + 1)
    dt = scenario.dt
    for i in range(scenario.grid_n - 1, -1, -1):
        R[i] = R[i + 1] + scenario.r[i] * dt
    return _readonly(R)


def rate_integral(scenario: MarketScenario, t1: float, t2: float) -> float:
    """Integral of r over [t1, t2], exact for the left-constant interpolant."""
    tol = 1e-9 * max(1.0, scenario.T)
    if not (-tol <= t1 <= t2 + tol and t2 <= scenario.T + tol):
        raise OutOfRange(f"need 0 <= t1 <= t2 <= T, got t1={t1}, t2={t2}, T={scenario.T}")
    t1 = min(max(t1, 0.0), scenario.T)
    t2 = min(max(t2, t1), scenario.T)
    dt = scenario.dt
    total = 0.0
    for j in range(scenario.grid_n):
        lo = max(t1, j * dt)
        hi = min(t2, (j + 1) * dt)
        if hi > lo:
            total += scenario.r[j] * (hi - lo)
    return total


# ---------------------------------------------------------------------------
# ObjectiveSpec


@dataclass(frozen=True)
class ObjectiveTerm:
    """One sparse monomial: coeff * prod over (k, e) of q_k**e.

    Index k = 1 denotes the conditional mean m1; k >= 2 denotes the k-th
    central moment or cumulant depending on the objective mode. Factors are
    sorted by k with duplicate indices merged.
    """

    factors: tuple[tuple[int, int], ...]
    coeff: float

    def __post_init__(self) -> None:
        merged: dict[int, int] = {}
        for k, e in self.factors:
            k, e = int(k), int(e)
            if k < 1 or k > MAX_ORDER:
                raise UnsupportedOrder(f"moment index {k} outside [1, {MAX_ORDER}]")
            if e < 1:
                raise ValidationError(f"exponent must be >= 1, got {e} for index {k}")
            merged[k] = merged.get(k, 0) + e
        object.__setattr__(self, "factors", tuple(sorted(merged.items())))
        if not math.isfinite(self.coeff):
            raise ValidationError("term coefficient must be finite")
        object.__setattr__(self, "coeff", float(self.coeff))

    def degree_in_mean(self) -> int:
        return sum(e for k, e in self.factors if k == 1)

    def max_index(self) -> int:
        return max((k for k, _ in self.factors), default=2)


@dataclass(frozen=True)
class ObjectiveSpec:
    """Sparse polynomial objective over (m1, q2..qn).

    ``mode`` selects whether q_k means the k-th central moment ("central") or
    the k-th cumulant ("cumulant"). Zero-coefficient terms are dropped.
    """

    mode: str
    terms: tuple[ObjectiveTerm, ...]
    max_order: int = 0  # 0 -> derived from the terms

    def __post_init__(self) -> None:
        if self.mode not in ("central", "cumulant"):
            raise ValidationError(f"mode must be 'central' or 'cumulant', got {self.mode!r}")
        terms = tuple(t for t in self.terms if t.coeff != 0.0)
        object.__setattr__(self, "terms", terms)
        order = self.max_order
        if order == 0:
            order = max([t.max_index() for t in terms] + [2])
        if order < 2 or order > MAX_ORDER:
            raise UnsupportedOrder(f"max_order {order} outside [2, {MAX_ORDER}]")
        if any(t.max_index() > order for t in terms):
            raise UnsupportedOrder("term index exceeds max_order")
        object.__setattr__(self, "max_order", int(order))

    @classmethod
    def from_weights(cls, mode: str, weights: dict[int, float],
                     max_order: int = 0) -> "ObjectiveSpec":
        """Objective sum_k weights[k] * q_k (k = 1 denotes m1)."""
        terms = tuple(ObjectiveTerm(((k, 1),), w) for k, w in sorted(weights.items()))
        return cls(mode, terms, max_order)

    def mean_weight(self) -> float:
        """Total coefficient of the pure m1 term."""
        return sum(t.coeff for t in self.terms if t.factors == ((1, 1),))

    def pure_weight(self, k: int) -> float:
        """Total coefficient of the single-factor term q_k**1."""
        return sum(t.coeff for t in self.terms if t.factors == ((k, 1),))

    def risk_terms(self) -> tuple[ObjectiveTerm, ...]:
        """Terms not involving the conditional mean."""
        return tuple(t for t in self.terms if t.degree_in_mean() == 0)


def mean_variance_objective(gamma2: float = 1.0, mode: str = "central") -> ObjectiveSpec:
    """J = m1 - gamma2 * q2."""
    return ObjectiveSpec.from_weights(mode, {1: 1.0, 2: -float(gamma2)})


def gaussian_risk_polynomial(objective: ObjectiveSpec) -> Polynomial:
    """Risk part of the objective as a polynomial G(V) in the variance.

    Restricts the mean-free terms to the Gaussian family: central moments
    become (k-1)!! V^{k/2} for even k and 0 for odd k; cumulants become V for
    k = 2 and 0 for k >= 3. The derivative G'(V) is the second-order
    sensitivity driving every stationarity equation in this package.
    """
    by_power: dict[int, float] = {}
    for term in objective.terms:
        if term.degree_in_mean() > 0:
            continue
        c = term.coeff
        power = 0
        for k, e in term.factors:
            if objective.mode == "central":
                if k % 2 == 1:
                    c = 0.0
                    break
                c *= _DOUBLE_FACTORIAL[k] ** e
                power += (k // 2) * e
            else:
                if k >= 3:
                    c = 0.0
                    break
                power += e
        if c != 0.0:
            by_power[power] = by_power.get(power, 0.0) + c
    top = max(by_power, default=-1)
    return Polynomial(tuple(by_power.get(p, 0.0) for p in range(top + 1)))


# ---------------------------------------------------------------------------
# StrategyGrid


@dataclass(frozen=True)
class StrategyGrid:
    """Piecewise-constant open-loop control: values[i] applies on [t_i, t_{i+1})."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape:
            raise GridMismatch(f"times shape {t.shape} != values shape {v.shape}")
        if t.size < 2:
            raise GridMismatch("strategy grid needs at least two points")
        if not np.all(np.isfinite(v)):
            raise ValidationError("strategy values must be finite")
        object.__setattr__(self, "times", _readonly(t))
        object.__setattr__(self, "values", _readonly(v))

    @classmethod
    def constant(cls, scenario: MarketScenario, value: float) -> "StrategyGrid":
        return cls(scenario.times, np.full(scenario.grid_n + 1, float(value)))

    @classmethod
    def from_values(cls, scenario: MarketScenario, values) -> "StrategyGrid":
        return cls(scenario.times, np.asarray(values, dtype=float))

    def check_grid(self, scenario: MarketScenario) -> None:
        if self.values.shape != (scenario.grid_n + 1,):
            raise GridMismatch(
                f"strategy length {self.values.size} != grid length {scenario.grid_n + 1}"
            )
        if not np.allclose(self.times, scenario.times, rtol=0.0, atol=1e-12):
            raise GridMismatch("strategy times differ from scenario grid")

    def scaled(self, factor: float) -> "StrategyGrid":
        return StrategyGrid(self.times, self.values * float(factor))

    def perturbed(self, i_lo: int, i_hi: int, v: float) -> "StrategyGrid":
        """Add deviation v on grid steps [i_lo, i_hi)."""
        vals = self.values.copy()
        vals[i_lo:i_hi] += v
        return StrategyGrid(self.times, vals)


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class ValidatedScenario:
    """Scenario/objective pair that passed validation, with advisory notes."""

    scenario: MarketScenario
    objective: ObjectiveSpec
    diagnostics: tuple[str, ...] = field(default_factory=tuple)


def validate_scenario(scenario: MarketScenario, objective: ObjectiveSpec,
                      sigma_min: float = 1e-8) -> ValidatedScenario:
    """Check the pair's semantic invariants; raise the first violation found.

    Structural invariants (lengths, finiteness, ranges) are enforced at
    construction; this gate adds the solver preconditions: a volatility floor,
    an objective affine in the conditional mean with no mean-risk products,
    and a nondegenerate second-order risk term.
    """
    if np.min(scenario.sigma) < sigma_min:
        i = int(np.argmin(scenario.sigma))
        raise SigmaTooSmall(
            f"sigma[{i}] = {scenario.sigma[i]} below floor {sigma_min}"
        )
    for term in objective.terms:
        d = term.degree_in_mean()
        if d > 1:
            raise NonAffineMeanTerm(
                f"term {term.factors} has mean degree {d}; objectives must be "
                "affine in the conditional mean"
            )
        if d == 1 and len(term.factors) > 1:
            raise NonAffineMeanTerm(
                f"term {term.factors} multiplies the conditional mean by risk "
                "factors; the stationarity condition would become state-dependent"
            )
    if objective.pure_weight(2) == 0.0 and not any(
        k == 2 for t in objective.risk_terms() for k, _ in t.factors
    ):
        raise EmptyRiskTerm("objective has no k = 2 term with nonzero coefficient")
    notes = (
        "mean-affine restriction active: objectives nonlinear in the "
        "conditional mean are rejected by design",
    )
    return ValidatedScenario(scenario, objective, notes)


# ---------------------------------------------------------------------------
# central moments <-> cumulants (orders 2..8)


def _check_order(values, what: str) -> list[float]:
    vals = [float(v) for v in values]
    n = len(vals) + 1
    if n < 2 or n > MAX_ORDER:
        raise UnsupportedOrder(f"{what} list implies order {n}, supported range [2, {MAX_ORDER}]")
    return vals


def moments_to_cumulants(central) -> list[float]:
    """Map central moments [m2..mn] to cumulants [k2..kn], n <= 8."""
    m = _check_order(central, "central moment")
    m2, m3, m4, m5, m6, m7, m8 = (m + [0.0] * 7)[:7]
    k = [
        m2,
        m3,
        m4 - 3.0 * m2 ** 2,
        m5 - 10.0 * m3 * m2,
        m6 - 15.0 * m4 * m2 - 10.0 * m3 ** 2 + 30.0 * m2 ** 3,
        m7 - 21.0 * m5 * m2 - 35.0 * m4 * m3 + 210.0 * m3 * m2 ** 2,
        m8 - 28.0 * m6 * m2 - 56.0 * m5 * m3 - 35.0 * m4 ** 2
        + 420.0 * m4 * m2 ** 2 + 560.0 * m3 ** 2 * m2 - 630.0 * m2 ** 4,
    ]
    return k[: len(m)]


def cumulants_to_moments(cumulants) -> list[float]:
    """Exact inverse of :func:`moments_to_cumulants`."""
    k = _check_order(cumulants, "cumulant")
    k2, k3, k4, k5, k6, k7, k8 = (k + [0.0] * 7)[:7]
    m = [
        k2,
        k3,
        k4 + 3.0 * k2 ** 2,
        k5 + 10.0 * k3 * k2,
        k6 + 15.0 * k4 * k2 + 10.0 * k3 ** 2 + 15.0 * k2 ** 3,
        k7 + 21.0 * k5 * k2 + 35.0 * k4 * k3 + 105.0 * k3 * k2 ** 2,
        k8 + 28.0 * k6 * k2 + 56.0 * k5 * k3 + 35.0 * k4 ** 2
        + 210.0 * k4 * k2 ** 2 + 280.0 * k3 ** 2 * k2 + 105.0 * k2 ** 4,
    ]
    return m[: len(k)]
