"""Batch front end: parse a scenario file, run one command, emit artifacts.

Commands: solve (backward sweep -> strategy table), verify (equilibrium
report on the swept strategy, optionally rescaled by [numerics] u_scale),
moments (per-time conditional moment table), homogeneity (numeric check +
algebraic predicate + agreement flag), bsde (flow-diagonal cross-check or
factor BSDE export, plus a manufactured convergence table), mc (analytic vs
Monte Carlo moment comparison).

Exit codes: 0 success/pass, 2 a verification-style command reports failure
(verify fail, homogeneity violated or in disagreement, mc z-score breach),
1 any module error (structured JSON diagnostic on stderr). Artifacts are
deterministic for fixed (scenario, seed, grid_n, paths) regardless of
EQMO_WORKERS.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from .artifacts import Table, emit_outputs, render_json
from .bsde import (
    DriverSpec,
    brownian_factor,
    mv_flow_residual,
    simulate_factors,
    solve_bsde,
)
from .equilibrium import _mv_gamma2, backward_sweep, homogeneity_check_numeric, \
    homogeneity_predicate
from .errors import AmbiguousRoot, EqmoError, ParseError, SolverError, ValidationError
from .moments import conditional_moments, mc_conditional_moments, objective_value
from .scenario_io import ScenarioBundle, parse_scenario
from .verify import equilibrium_report

COMMANDS = ("solve", "verify", "moments", "homogeneity", "bsde", "mc")
DEFAULT_SEED = 42


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved run parameters (CLI > EQMO_SEED > scenario > defaults)."""

    command: str
    scenario_path: str
    out_dir: str
    seed: int
    grid_n: int
    paths: int
    format: str
    scheme: str

    def __post_init__(self) -> None:
        if self.command not in COMMANDS:
            raise ValidationError(f"command must be one of {COMMANDS}, got {self.command!r}")
        if self.format not in ("csv", "json"):
            raise ValidationError(f"format must be csv or json, got {self.format!r}")
        if self.scheme not in ("explicit", "implicit"):
            raise ValidationError(f"scheme must be explicit or implicit, got {self.scheme!r}")
        if self.grid_n < 1 or self.paths < 1:
            raise ValidationError("grid_n and paths must be positive")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="eqmo",
        description="equilibrium-strategy and BSDE experiment runner",
    )
    p.add_argument("--command", required=True, choices=COMMANDS)
    p.add_argument("--scenario", required=True, help="scenario file path")
    p.add_argument("--out", required=True, help="output directory for artifacts")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--grid-n", type=int, default=None, dest="grid_n")
    p.add_argument("--paths", type=int, default=None)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--scheme", choices=("explicit", "implicit"), default=None)
    return p


def _resolve_seed(cli_seed: int | None, numerics_seed) -> int:
    if cli_seed is not None:
        return int(cli_seed)
    env = os.environ.get("EQMO_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ValidationError(f"EQMO_SEED must be an integer, got {env!r}") from None
    if numerics_seed is not None:
        return int(numerics_seed)
    return DEFAULT_SEED


def resolve_config(args: argparse.Namespace, bundle: ScenarioBundle) -> RunConfig:
    num = bundle.numerics
    return RunConfig(
        command=args.command,
        scenario_path=args.scenario,
        out_dir=args.out,
        seed=_resolve_seed(args.seed, num.get("seed")),
        grid_n=int(num["grid_n"]),
        paths=int(args.paths if args.paths is not None else num["paths"]),
        format=args.format,
        scheme=args.scheme if args.scheme is not None else str(num["scheme"]),
    )


def _swept_strategy(bundle: ScenarioBundle, config: RunConfig):
    sweep = backward_sweep(bundle.scenario, bundle.objective, config.scheme)
    u_scale = float(bundle.numerics.get("u_scale", 1.0))
    strategy = sweep.strategy if u_scale == 1.0 else sweep.strategy.scaled(u_scale)
    return sweep, strategy, u_scale


def _witness_obj(witness) -> dict | None:
    if witness is None:
        return None
    t, v, phi = witness
    return {"t": t, "v": v, "phi": phi}


def _cmd_solve(bundle: ScenarioBundle, config: RunConfig):
    sweep, strategy, _ = _swept_strategy(bundle, config)
    s = bundle.scenario
    table = Table.from_columns(
        ("t", "u", "V", "D", "residual"),
        s.times, strategy.values, sweep.variance_to_go, sweep.D, sweep.residuals,
    )
    order = max(bundle.objective.max_order, 2)
    mv = conditional_moments(s, strategy, 0.0, s.x0, order)
    summary = {
        "command": "solve",
        "scheme": sweep.scheme,
        "grid_n": config.grid_n,
        "seed": config.seed,
        "J_t0": objective_value(bundle.objective, mv),
        "u_first": float(strategy.values[0]),
        "u_terminal": float(strategy.values[-1]),
        "max_residual": float(np.max(sweep.residuals)),
    }
    return 0, {"strategy": table, "solve_summary": summary}


def _cmd_verify(bundle: ScenarioBundle, config: RunConfig):
    _, strategy, u_scale = _swept_strategy(bundle, config)
    tolerance = float(bundle.numerics.get("tolerance", 1e-8))
    report = equilibrium_report(bundle.scenario, bundle.objective, strategy,
                                tolerance=tolerance)
    payload = {
        "verdict": report.verdict,
        "max_phi": report.max_phi,
        "tolerance": report.tolerance,
        "convention": report.convention,
        "u_scale": u_scale,
        "witness": _witness_obj(report.witness),
    }
    profile = Table.from_columns(
        ("t", "phi_max"),
        [t for t, _ in report.per_t_summary],
        [m for _, m in report.per_t_summary],
    )
    return (0 if report.passed else 2), {"report": payload, "phi_profile": profile}


def _cmd_moments(bundle: ScenarioBundle, config: RunConfig):
    s = bundle.scenario
    _, strategy, _ = _swept_strategy(bundle, config)
    order = max(bundle.objective.max_order, 4)
    rows = []
    for i, t in enumerate(s.times):
        mv = conditional_moments(s, strategy, float(t), s.x0, order)
        rows.append(
            (float(t), float(strategy.values[i]), mv.m1, mv.V)
            + mv.central + mv.cumulant
            + (objective_value(bundle.objective, mv),)
        )
    header = (
        ("t", "u", "m1", "V")
        + tuple(f"m{k}" for k in range(2, order + 1))
        + tuple(f"k{k}" for k in range(2, order + 1))
        + ("J",)
    )
    table = Table(header, tuple(rows))
    summary = {"command": "moments", "order": order, "J_t0": rows[0][-1]}
    return 0, {"moments": table, "moments_summary": summary}


def _cmd_homogeneity(bundle: ScenarioBundle, config: RunConfig):
    tolerance = float(bundle.numerics.get("tolerance", 1e-8))
    numeric = homogeneity_check_numeric(bundle.scenario, bundle.objective,
                                        tolerance=tolerance)
    predicate = homogeneity_predicate(bundle.objective)
    agree = numeric.holds == predicate
    payload = {
        "numeric_holds": numeric.holds,
        "predicate_holds": predicate,
        "agree": agree,
        "gamma2": numeric.gamma2,
        "max_phi": numeric.max_phi,
        "tolerance": tolerance,
        "witness": _witness_obj(numeric.witness),
    }
    return (0 if numeric.holds and agree else 2), {"homogeneity": payload}


def _convergence_table(config: RunConfig) -> Table:
    """Manufactured-solution error study: terminal W_T^2, exact Y known in
    closed form, repeated at three grid sizes with independent replications."""
    spec = DriverSpec(
        driver=lambda t, state, y, z: 0.0,
        terminal=lambda fp, s: fp.state[-1] ** 2,
    )
    reps = 4
    rep_paths = max(config.paths // 5, 2000)
    rows = []
    for grid_n in (25, 50, 100):
        times = np.linspace(0.0, 1.0, grid_n + 1)
        mses = []
        for rep in range(reps):
            fp = simulate_factors(brownian_factor(), times, rep_paths,
                                  config.seed + 7919 * grid_n + rep)
            grid = solve_bsde(spec, fp)
            exact = fp.state ** 2 + (1.0 - times)[:, None]
            mses.append(float(np.mean((grid.Y - exact) ** 2)))
        mean = float(np.mean(mses))
        se = float(np.std(mses, ddof=1) / math.sqrt(reps))
        rows.append((grid_n, rep_paths, mean, se))
    return Table(("grid_n", "paths", "mse", "mse_se"), tuple(rows))


def _cmd_bsde(bundle: ScenarioBundle, config: RunConfig):
    s = bundle.scenario
    basis_degree = int(bundle.numerics.get("basis_degree", 3))
    convergence = _convergence_table(config)
    if bundle.factor.kind == "none":
        gamma2 = _mv_gamma2(bundle.objective)
        diag = mv_flow_residual(s, gamma2, config.paths, config.seed, basis_degree)
        n = s.grid_n
        table = Table.from_columns(
            ("t", "y_diag", "z_diag", "residual", "implied_u"),
            s.times[:n], diag.diagonal.y_values[:n], diag.diagonal.z_values[:n],
            diag.residuals, diag.implied_u,
        )
        summary = {
            "command": "bsde",
            "kind": "none",
            "gamma2": gamma2,
            "basis_degree": basis_degree,
            "paths": config.paths,
            "seed": config.seed,
            "residual_rms": diag.residual_rms,
            "residual_max": diag.residual_max,
        }
        return 0, {"bsde_diagonal": table, "bsde_convergence": convergence,
                   "bsde_summary": summary}
    fp = simulate_factors(bundle.factor, s.times, config.paths, config.seed)
    spec = DriverSpec(
        driver=lambda t, state, y, z: 0.0,
        terminal=lambda fpaths, idx: fpaths.state[-1],
    )
    z_bound = float(bundle.numerics.get("z_bound", 50.0))
    grid = solve_bsde(spec, fp, basis_degree, z_bound=z_bound)
    n = s.grid_n
    table = Table.from_columns(
        ("t", "y_mean", "z_mean"),
        s.times[:n], np.mean(grid.Y[:n], axis=1), np.mean(grid.Z[:n], axis=1),
    )
    summary = {
        "command": "bsde",
        "kind": "ou",
        "basis_degree": basis_degree,
        "paths": config.paths,
        "seed": config.seed,
        "y0_mean": grid.y0_mean,
        "y0_se": grid.y0_se,
    }
    return 0, {"bsde_grid": table, "bsde_convergence": convergence,
               "bsde_summary": summary}


def _cmd_mc(bundle: ScenarioBundle, config: RunConfig):
    s = bundle.scenario
    _, strategy, _ = _swept_strategy(bundle, config)
    order = 6
    analytic = conditional_moments(s, strategy, 0.0, s.x0, order)
    est = mc_conditional_moments(s, strategy, 0.0, s.x0, order, config.paths,
                                 config.seed)
    labels = ["m1"] + [f"m{k}" for k in range(2, order + 1)]
    exact = [analytic.m1] + list(analytic.central)
    sampled = [est.moments.m1] + list(est.moments.central)
    rows = []
    worst = 0.0
    for label, a, b, se in zip(labels, exact, sampled, est.standard_errors):
        z = (b - a) / se if se > 0.0 else 0.0
        worst = max(worst, abs(z))
        rows.append((label, a, b, se, z))
    table = Table(("moment", "analytic", "estimate", "se", "z"), tuple(rows))
    summary = {
        "command": "mc",
        "paths": config.paths,
        "seed": config.seed,
        "order": order,
        "max_abs_z": worst,
        "z_threshold": 4.0,
    }
    return (0 if worst <= 4.0 else 2), {"mc_check": table, "mc_summary": summary}


_DISPATCH = {
    "solve": _cmd_solve,
    "verify": _cmd_verify,
    "moments": _cmd_moments,
    "homogeneity": _cmd_homogeneity,
    "bsde": _cmd_bsde,
    "mc": _cmd_mc,
}


def run_command(config: RunConfig, bundle: ScenarioBundle) -> tuple[int, dict[str, str]]:
    """Execute one command and emit its artifacts; returns (exit code, manifest)."""
    status, results = _DISPATCH[config.command](bundle, config)
    manifest = emit_outputs(results, config.format, config.out_dir)
    return status, manifest


def _diagnostic(exc: EqmoError) -> str:
    payload: dict[str, object] = {
        "error": type(exc).__name__,
        "message": str(exc),
    }
    if isinstance(exc, SolverError) and exc.step is not None:
        payload["step"] = exc.step
    if isinstance(exc, AmbiguousRoot) and exc.candidates:
        payload["candidates"] = list(exc.candidates)
    if isinstance(exc, ParseError) and exc.line is not None:
        payload["line"] = exc.line
    return render_json(payload)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        bundle = parse_scenario(args.scenario, grid_n=args.grid_n)
        config = resolve_config(args, bundle)
        status, _ = run_command(config, bundle)
        return status
    except EqmoError as exc:
        print(_diagnostic(exc), file=sys.stderr)
        return 1
    except OSError as exc:
        print(render_json({"error": "OSError", "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
