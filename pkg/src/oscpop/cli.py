"""Command-line front end.

Commands: simulate, closed-form, two-phase, periodic, bifurcation,
verify. CSV goes to --output (stdout by default); human-readable
summaries go to stdout when the CSV is in a file, otherwise to stderr.
Exit codes: 0 success, 2 usage or parse error, 3 domain error, 4
numerical non-convergence.
"""
from __future__ import annotations

import argparse
import contextlib
import io
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .capacity import (
    CapacitySchedule,
    Constant,
    SinusoidOffset,
    SolverConfig,
    TwoPhase,
    parse_schedule,
)
from .closedform import (
    LogisticParams,
    logistic_constant,
    quadrature_solution,
    two_phase_trajectory,
)
from .discretemap import ScanConfig, bifurcation_scan, normalized_state
from .errors import (
    DivergenceError,
    DomainError,
    NoPeriodicSolutionError,
    NumericsError,
    PoleError,
    StiffnessError,
)
from .odesolve import adaptive_quadrature, integrate_logistic, integrate_riccati
from .periodic import (
    find_periodic_solution,
    half_peak_fraction,
    mean_identity_residual,
    time_average,
    two_phase_deductions,
)

OUTPUT_DIR_ENV = "OSCPOP_OUTPUT_DIR"


@dataclass(frozen=True)
class RunSpec:
    """Everything one CLI invocation resolved to: command, schedule,
    model parameters, solver settings, sampling horizon, and output
    target. Command-specific knobs ride in extras."""

    command: str
    schedule: CapacitySchedule | None
    params: LogisticParams | None
    cfg: SolverConfig
    t_end: float | None
    dt: float | None
    output: str
    extras: dict = field(default_factory=dict)


def _fmt(value: float) -> str:
    v = float(value)
    if v == 0.0:
        v = 0.0  # normalize negative zero for byte-stable output
    return format(v, ".12g")


def _resolve_output(target: str) -> str:
    if target == "-":
        return target
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not os.path.isabs(target):
        return os.path.join(base, target)
    return target


def _emit(header: list[str], rows, destination: str, report: str | None = None) -> None:
    target = _resolve_output(destination)
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    text = "\n".join(lines) + "\n"
    if target == "-":
        sys.stdout.write(text)
        if report:
            sys.stderr.write(report)
    else:
        Path(target).parent.mkdir(parents=True, exist_ok=True)
        with open(target, "w", newline="") as fh:
            fh.write(text)
        if report:
            sys.stdout.write(report)


_EXTRA_KEYS = (
    "r",
    "regime_tol",
    "fixed_point_tol",
    "rho_min",
    "rho_max",
    "steps",
    "transient",
    "window",
    "match_tol",
    "seed",
)


def _resolve_run(args) -> RunSpec:
    cfg_kwargs = {}
    for name in ("abs_tol", "rel_tol", "max_step", "min_step", "max_iterations"):
        value = getattr(args, name, None)
        if value is not None:
            cfg_kwargs[name] = value
    schedule = parse_schedule(args.schedule) if hasattr(args, "schedule") else None
    params = LogisticParams(args.r, args.p0, args.t0) if hasattr(args, "p0") else None
    extras = {
        k: getattr(args, k)
        for k in _EXTRA_KEYS
        if hasattr(args, k) and not (k == "r" and params is not None)
    }
    return RunSpec(
        command=args.command,
        schedule=schedule,
        params=params,
        cfg=SolverConfig(**cfg_kwargs),
        t_end=getattr(args, "t_end", None),
        dt=getattr(args, "dt", None),
        output=getattr(args, "output", "-"),
        extras=extras,
    )


def _time_grid(t0: float, t_end: float, dt: float) -> np.ndarray:
    if not dt > 0.0:
        raise ValueError("--dt must be positive")
    if t_end <= t0:
        raise ValueError("--t-end must exceed --t0")
    n = int(math.floor((t_end - t0) / dt + 1e-9))
    return t0 + dt * np.arange(n + 1)


def _add_solver_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--abs-tol", dest="abs_tol", type=float, default=None)
    p.add_argument("--rel-tol", dest="rel_tol", type=float, default=None)
    p.add_argument("--max-step", dest="max_step", type=float, default=None)
    p.add_argument("--min-step", dest="min_step", type=float, default=None)
    p.add_argument("--max-iterations", dest="max_iterations", type=int, default=None)


def _add_model_options(p: argparse.ArgumentParser, with_grid: bool = True) -> None:
    p.add_argument("--schedule", required=True, help="constant:M | twophase:M1,M2,period | sinusoid:mean,amp,period | table:path.csv")
    p.add_argument("--r", type=float, required=True, help="growth rate")
    if with_grid:
        p.add_argument("--p0", type=float, required=True, help="initial population")
        p.add_argument("--t0", type=float, default=0.0)
        p.add_argument("--t-end", dest="t_end", type=float, required=True)
        p.add_argument("--dt", type=float, required=True, help="sample spacing")
    p.add_argument("--output", default="-", help="CSV destination, '-' for stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oscpop",
        description="Logistic growth under time-varying carrying capacity.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="adaptive integration, CSV of t,P,M")
    _add_model_options(p)
    _add_solver_options(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser(
        "closed-form", help="quadrature solution vs. integrator, CSV of t,P_closed,P_numeric,abs_diff"
    )
    _add_model_options(p)
    _add_solver_options(p)
    p.set_defaults(func=_cmd_closed_form)

    p = sub.add_parser("two-phase", help="piecewise-exact square-wave trajectory plus cycle report")
    _add_model_options(p)
    _add_solver_options(p)
    p.add_argument("--regime-tol", dest="regime_tol", type=float, default=0.05)
    p.set_defaults(func=_cmd_two_phase)

    p = sub.add_parser("periodic", help="periodic cycle: orbit CSV plus summary")
    _add_model_options(p, with_grid=False)
    _add_solver_options(p)
    p.add_argument("--fixed-point-tol", dest="fixed_point_tol", type=float, default=1e-8)
    p.set_defaults(func=_cmd_periodic)

    p = sub.add_parser("bifurcation", help="discrete-map attractor scan over rho = r*M")
    p.add_argument("--rho-min", dest="rho_min", type=float, required=True)
    p.add_argument("--rho-max", dest="rho_max", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--r", type=float, default=1.0, help="fixed growth rate")
    p.add_argument("--transient", type=int, default=10_000)
    p.add_argument("--window", type=int, default=512)
    p.add_argument("--match-tol", dest="match_tol", type=float, default=1e-9)
    p.add_argument("--output", default="-")
    p.set_defaults(func=_cmd_bifurcation)

    p = sub.add_parser("verify", help="run the built-in invariant battery")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_verify)

    return parser


def _cmd_simulate(spec: RunSpec) -> int:
    cap = spec.schedule
    grid = _time_grid(spec.params.t0, spec.t_end, spec.dt)
    traj = integrate_logistic(spec.params, cap, float(grid[-1]), spec.cfg, t_eval=grid)
    rows = [(t, p, cap.at(float(t))) for t, p in zip(traj.times, traj.populations)]
    _emit(["t", "P", "M"], rows, spec.output)
    return 0


def _cmd_closed_form(spec: RunSpec) -> int:
    cap = spec.schedule
    grid = _time_grid(spec.params.t0, spec.t_end, spec.dt)
    traj = integrate_logistic(spec.params, cap, float(grid[-1]), spec.cfg, t_eval=grid)
    rows = []
    for t, p_num in zip(grid, traj.populations):
        p_closed = quadrature_solution(spec.params, cap, float(t), spec.cfg)
        rows.append((t, p_closed, p_num, abs(p_closed - p_num)))
    _emit(["t", "P_closed", "P_numeric", "abs_diff"], rows, spec.output)
    return 0


def _cmd_two_phase(spec: RunSpec) -> int:
    cap = spec.schedule
    if not isinstance(cap, TwoPhase):
        raise ValueError("two-phase command requires a twophase: schedule")
    traj = two_phase_trajectory(spec.params, cap, spec.t_end, spec.dt)
    rows = [(t, p, cap.at(float(t))) for t, p in zip(traj.times, traj.populations)]
    report = two_phase_deductions(spec.params, cap, spec.cfg, regime_tol=spec.extras["regime_tol"])
    lines = [
        f"phase1_end_population  = {_fmt(report.p1)}",
        f"phase2_end_population  = {_fmt(report.p2)}",
        f"mean_population        = {_fmt(report.mean_population)}",
        f"mean_condition_gap     = {_fmt(report.mean_condition_gap)}",
        f"plateau_gap_m1         = {_fmt(report.plateau_gaps[0])}",
        f"plateau_gap_m2         = {_fmt(report.plateau_gaps[1])}",
        f"saturated              = {report.saturated}",
    ]
    _emit(["t", "P", "M"], rows, spec.output, report="\n".join(lines) + "\n")
    if not report.saturated:
        sys.stderr.write(
            "warning: phases do not saturate at this switching rate; "
            "plateau values are not meaningful capacity estimates\n"
        )
    return 0


def _cmd_periodic(spec: RunSpec) -> int:
    cap = spec.schedule
    sol = find_periodic_solution(
        spec.extras["r"], cap, spec.cfg, fixed_point_tol=spec.extras["fixed_point_tol"]
    )
    mean_pop = time_average(sol)
    residual = mean_identity_residual(sol, cap)
    peak = cap.max_value()
    rows = list(zip(sol.orbit.times, sol.orbit.populations))
    lines = [
        f"p_star                 = {_fmt(sol.p_star)}",
        f"period                 = {_fmt(sol.period)}",
        f"closure_residual       = {_fmt(sol.residual)}",
        f"mean_population        = {_fmt(mean_pop)}",
        f"mean_identity_residual = {_fmt(residual)}",
        f"half_peak_capacity     = {_fmt(0.5 * peak)}",
        f"mean_minus_half_peak   = {_fmt(mean_pop - 0.5 * peak)}",
        f"half_peak_fraction     = {_fmt(half_peak_fraction(sol, cap))}",
    ]
    _emit(["t", "P"], rows, spec.output, report="\n".join(lines) + "\n")
    return 0


def _cmd_bifurcation(spec: RunSpec) -> int:
    opts = spec.extras
    cfg = ScanConfig(
        transient=opts["transient"], window=opts["window"], match_tol=opts["match_tol"]
    )
    result = bifurcation_scan(
        opts["rho_min"], opts["rho_max"], opts["steps"], cfg, r_fixed=opts["r"]
    )
    rows = []
    for rec in result.records:
        for value in rec.attractor:
            rows.append((rec.control, value))
    lines = [
        f"doubling_1_to_2 = {_fmt(result.doubling_1_to_2) if result.doubling_1_to_2 is not None else 'not-found'}",
        f"doubling_2_to_4 = {_fmt(result.doubling_2_to_4) if result.doubling_2_to_4 is not None else 'not-found'}",
    ]
    _emit(["rho", "branch_value"], rows, spec.output, report="\n".join(lines) + "\n")
    return 0


# ---------------------------------------------------------------------------
# verify battery


def _quiet_main(argv: list[str]) -> int:
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        return main(argv)


def _check_constant_equilibrium(rng, tmp):
    cap = Constant(1.5)
    traj = integrate_logistic(LogisticParams(1.0, 1.5, 0.0), cap, 10.0)
    assert float(np.max(np.abs(traj.populations - 1.5))) <= 1e-9


def _check_closed_form_reduction(rng, tmp):
    cap = Constant(1.0)
    cfg = SolverConfig(abs_tol=1e-12, rel_tol=1e-10)
    params = LogisticParams(1.0, 0.5, 0.0)
    for t in np.linspace(0.1, 8.0, 25):
        exact = logistic_constant(params, 1.0, float(t))
        quad = quadrature_solution(params, cap, float(t), cfg)
        assert abs(quad - exact) <= 1e-8 * abs(exact)


def _check_cross_solver_sinusoid(rng, tmp):
    cap = SinusoidOffset(2.0, 0.5, 2.0 * math.pi)
    cfg = SolverConfig(abs_tol=1e-12, rel_tol=1e-10, max_step=0.02)
    params = LogisticParams(1.0, 1.0, 0.0)
    grid = np.linspace(0.0, 4.0 * math.pi, 40)
    a = integrate_logistic(params, cap, float(grid[-1]), cfg, t_eval=grid).populations
    b = integrate_riccati(params, cap, float(grid[-1]), cfg, t_eval=grid).populations
    assert float(np.max(np.abs(a - b) / np.abs(a))) <= 1e-6


def _check_pole_error(rng, tmp):
    params = LogisticParams(1.0, 2.0, 0.0)
    t_pole = math.log(2.0 / 3.0)
    try:
        logistic_constant(params, -1.0, t_pole)
    except PoleError:
        return
    raise AssertionError("pole not detected")


def _check_no_periodic_solution(rng, tmp):
    cap = SinusoidOffset(0.0, 1.0, 2.0 * math.pi)
    try:
        find_periodic_solution(1.0, cap)
    except NoPeriodicSolutionError:
        return
    raise AssertionError("zero-mean schedule accepted")


def _check_stiffness_error(rng, tmp):
    cap = SinusoidOffset(1.0, 0.5, 0.05)
    cfg = SolverConfig(abs_tol=1e-14, rel_tol=1e-12, min_step=0.02, max_step=0.04)
    try:
        integrate_logistic(LogisticParams(1.0, 0.5, 0.0), cap, 1.0, cfg)
    except StiffnessError:
        return
    raise AssertionError("stiffness not flagged")


def _check_divergence_error(rng, tmp):
    cap = Constant(1e160)
    try:
        integrate_riccati(LogisticParams(1.0, 1.0, 0.0), cap, 1.0)
    except DivergenceError:
        return
    raise AssertionError("divergence not flagged")


def _check_quadrature_budget(rng, tmp):
    cfg = SolverConfig(abs_tol=1e-14, rel_tol=1e-14, max_iterations=1)
    try:
        adaptive_quadrature(lambda s: math.exp(-math.cos(s)), 0.0, math.pi, (), cfg)
    except NumericsError:
        return
    raise AssertionError("subdivision budget not enforced")


def _check_conjugacy(rng, tmp):
    for _ in range(1000):
        r = float(rng.uniform(0.05, 2.0))
        m = float(rng.uniform(0.1, 10.0))
        rho = r * m
        x0 = float(rng.uniform(0.01, 0.99))
        p0 = x0 * (1.0 + rho) / r
        p1 = p0 + r * (m - p0) * p0
        lhs = normalized_state(r, m, p1)
        rhs = (1.0 + rho) * x0 * (1.0 - x0)
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs))


def _check_capacity_additivity(rng, tmp):
    caps = [
        Constant(float(rng.uniform(-1, 3))),
        TwoPhase(float(rng.uniform(0, 2)), float(rng.uniform(2, 4)), 3.0),
        SinusoidOffset(1.0, float(rng.uniform(0.1, 2.0)), 4.0),
    ]
    for cap in caps:
        a, b, c = sorted(rng.uniform(-5, 5, size=3))
        whole = cap.integral(float(a), float(c))
        split = cap.integral(float(a), float(b)) + cap.integral(float(b), float(c))
        assert abs(whole - split) <= 1e-10 * max(1.0, abs(whole))


def _check_tabulated_roundtrip(rng, tmp):
    path = os.path.join(tmp, "table_check.csv")
    code = _quiet_main(
        [
            "simulate",
            "--schedule",
            "sinusoid:1,0.5,6.283185307179586",
            "--r",
            "1",
            "--p0",
            "1",
            "--t-end",
            "6",
            "--dt",
            "0.5",
            "--output",
            path,
        ]
    )
    assert code == 0
    cap = parse_schedule(f"table:{path}")
    with open(path) as fh:
        rows = fh.read().strip().splitlines()[1:]
    for row in rows:
        t_text, _, m_text = row.split(",")
        assert cap.at(float(t_text)) == float(m_text)


def _check_csv_deterministic(rng, tmp):
    argv = [
        "simulate",
        "--schedule",
        "sinusoid:1,0.25,3",
        "--r",
        "0.7",
        "--p0",
        "0.4",
        "--t-end",
        "5",
        "--dt",
        "0.1",
    ]
    first, second = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(first):
        assert main(argv) == 0
    with contextlib.redirect_stdout(second):
        assert main(argv) == 0
    assert first.getvalue() == second.getvalue()


def _check_exit_codes(rng, tmp):
    ok = _quiet_main(
        ["simulate", "--schedule", "constant:1", "--r", "1", "--p0", "1",
         "--t-end", "1", "--dt", "0.5", "--output", os.path.join(tmp, "ok.csv")]
    )
    assert ok == 0, f"expected 0, got {ok}"
    usage = _quiet_main(
        ["simulate", "--schedule", "bogus:1", "--r", "1", "--p0", "1",
         "--t-end", "1", "--dt", "0.5"]
    )
    assert usage == 2, f"expected 2, got {usage}"
    domain = _quiet_main(
        ["periodic", "--schedule", "sinusoid:0,1,6.283185307179586", "--r", "1",
         "--output", os.path.join(tmp, "cycle.csv")]
    )
    assert domain == 3, f"expected 3, got {domain}"
    numeric = _quiet_main(
        ["closed-form", "--schedule", "sinusoid:1,0.5,6.283185307179586", "--r", "1",
         "--p0", "1", "--t-end", "6", "--dt", "1", "--max-iterations", "1",
         "--abs-tol", "1e-14", "--rel-tol", "1e-14",
         "--output", os.path.join(tmp, "cf.csv")]
    )
    assert numeric == 4, f"expected 4, got {numeric}"


_BATTERY = [
    ("constant_equilibrium_flat", _check_constant_equilibrium),
    ("closed_form_reduction", _check_closed_form_reduction),
    ("cross_solver_agreement_sinusoid", _check_cross_solver_sinusoid),
    ("pole_error_raised", _check_pole_error),
    ("no_periodic_solution_raised", _check_no_periodic_solution),
    ("stiffness_error_raised", _check_stiffness_error),
    ("divergence_error_raised", _check_divergence_error),
    ("quadrature_budget_error_raised", _check_quadrature_budget),
    ("conjugacy_identity_1000_draws", _check_conjugacy),
    ("capacity_integral_additivity", _check_capacity_additivity),
    ("tabulated_roundtrip_exact", _check_tabulated_roundtrip),
    ("csv_output_deterministic", _check_csv_deterministic),
    ("cli_exit_codes_0_2_3_4", _check_exit_codes),
]


def _cmd_verify(spec: RunSpec) -> int:
    rng = np.random.default_rng(spec.extras["seed"])
    failures = 0
    with tempfile.TemporaryDirectory() as tmp:
        for name, check in _BATTERY:
            try:
                check(rng, tmp)
            except Exception as exc:  # report and keep going
                failures += 1
                print(f"FAIL {name}: {exc}")
            else:
                print(f"PASS {name}")
    print(f"{len(_BATTERY) - failures}/{len(_BATTERY)} checks passed")
    return 0 if failures == 0 else 1


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(_resolve_run(args))
    except DomainError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except NumericsError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 4
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
