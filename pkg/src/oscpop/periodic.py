"""Periodic cycles of the logistic flow under a periodic capacity.

The cycle is the fixed point of the over-one-period return map, found
by bracketing and bisection. Existence is decided analytically before
any iteration: the reciprocal-space return map is affine with slope
exp(-r * integral of M over one period), so a positive cycle exists
exactly when the capacity has positive mean over a period.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import simpson

from .capacity import CapacitySchedule, SolverConfig, TwoPhase
from .closedform import LogisticParams
from .errors import ConvergenceError, NoPeriodicSolutionError
from .odesolve import Trajectory, integrate_logistic

_ORBIT_PANELS = 1024  # target Simpson panels across one period


@dataclass(frozen=True)
class PeriodicSolution:
    """A converged cycle: start value, one-period orbit, closure residual."""

    p_star: float
    period: float
    orbit: Trajectory
    residual: float
    growth_rate: float
    fixed_point_tol: float

    def __post_init__(self) -> None:
        if not self.p_star > 0.0:
            raise ValueError("cycle population must be positive")
        if not self.residual <= self.fixed_point_tol:
            raise ValueError(
                f"closure residual {self.residual:.3e} exceeds tolerance "
                f"{self.fixed_point_tol:.3e}"
            )
        span = self.orbit.times[-1] - self.orbit.times[0]
        if abs(span - self.period) > 1e-9 * self.period:
            raise ValueError("orbit must span exactly one period")
        gap = abs(self.orbit.populations[0] - self.orbit.populations[-1])
        if gap > self.fixed_point_tol * self.p_star:
            raise ValueError("orbit endpoints do not close to tolerance")


def period_map(
    r: float, cap: CapacitySchedule, p0: float, cfg: SolverConfig | None = None
) -> float:
    """Population after one schedule period, starting from p0 at t = 0."""
    h = cap.period
    if h is None:
        raise ValueError("schedule declares no period")
    if not p0 > 0.0:
        raise ValueError("p0 must be positive")
    params = LogisticParams(r, p0, 0.0)
    return integrate_logistic(params, cap, h, cfg).final


def _orbit_grid(cap: CapacitySchedule, h: float) -> np.ndarray:
    edges = [0.0, *cap.breakpoints_between(0.0, h), h]
    chunks: list[np.ndarray] = []
    for i, (lo, hi) in enumerate(zip(edges[:-1], edges[1:])):
        n = 2 * max(8, round(_ORBIT_PANELS * (hi - lo) / (2.0 * h)))
        grid = np.linspace(lo, hi, n + 1)
        chunks.append(grid if i == 0 else grid[1:])
    return np.concatenate(chunks)


def find_periodic_solution(
    r: float,
    cap: CapacitySchedule,
    cfg: SolverConfig | None = None,
    fixed_point_tol: float = 1e-8,
) -> PeriodicSolution:
    """Locate the positive periodic cycle of the flow.

    Raises NoPeriodicSolutionError when the capacity mean over one
    period is nonpositive (the return map then has no positive fixed
    point), and ConvergenceError if bracketing or bisection stalls.
    """
    cfg = cfg or SolverConfig()
    if not r > 0.0:
        raise ValueError("growth rate r must be positive")
    h = cap.period
    if h is None:
        raise ValueError("schedule declares no period")
    mass = cap.integral(0.0, h)
    if mass <= 0.0:
        raise NoPeriodicSolutionError(
            f"capacity mean over one period is {mass / h:.3g}; no positive cycle exists"
        )
    inner = replace(
        cfg,
        rel_tol=min(cfg.rel_tol, 1e-2 * fixed_point_tol),
        abs_tol=min(cfg.abs_tol, 1e-4 * fixed_point_tol),
    )

    def gap(p: float) -> float:
        return period_map(r, cap, p, inner) - p

    m_top = cap.max_value()
    lo, hi = 1e-6 * m_top, 10.0 * m_top
    g_lo = gap(lo)
    tries = 0
    while g_lo <= 0.0:
        lo *= 1e-2
        g_lo = gap(lo)
        tries += 1
        if tries > 50:
            raise ConvergenceError("failed to bracket the cycle from below")
    g_hi = gap(hi)
    tries = 0
    while g_hi >= 0.0:
        hi *= 4.0
        g_hi = gap(hi)
        tries += 1
        if tries > 50:
            raise ConvergenceError("failed to bracket the cycle from above")
    p_star = None
    eps = 4.0 * np.finfo(float).eps
    for _ in range(cfg.max_iterations):
        mid = 0.5 * (lo + hi)
        g_mid = gap(mid)
        if abs(g_mid) <= 0.2 * fixed_point_tol * mid:
            p_star = mid
            break
        if g_mid > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= eps * mid:
            p_star = 0.5 * (lo + hi)
            break
    if p_star is None:
        raise ConvergenceError("bisection iteration budget exhausted")
    orbit_cfg = replace(inner, max_step=min(inner.max_step, h / 256.0))
    grid = _orbit_grid(cap, h)
    orbit = integrate_logistic(LogisticParams(r, p_star, 0.0), cap, h, orbit_cfg, t_eval=grid)
    residual = abs(orbit.final - p_star) / p_star
    if residual > fixed_point_tol:
        raise ConvergenceError(f"fixed point stalled at residual {residual:.3e}")
    return PeriodicSolution(p_star, h, orbit, residual, r, fixed_point_tol)


def _segment_slices(orbit: Trajectory, cap: CapacitySchedule):
    t = orbit.times
    edges = [float(t[0]), *cap.breakpoints_between(float(t[0]), float(t[-1])), float(t[-1])]
    for lo, hi in zip(edges[:-1], edges[1:]):
        i0 = int(np.searchsorted(t, lo, side="left"))
        i1 = int(np.searchsorted(t, hi, side="right")) - 1
        if i1 - i0 < 2:
            raise ValueError("orbit sampling too coarse for a schedule segment")
        yield lo, hi, t[i0 : i1 + 1], orbit.populations[i0 : i1 + 1]


def orbit_identity_residual(orbit: Trajectory, cap: CapacitySchedule) -> float:
    """|integral of (M P - P^2)| / integral of P^2 over the orbit span.

    Along any exact periodic cycle the numerator vanishes, because
    M P - P^2 is dP/dt / r and the cycle closes. Computed by composite
    Simpson on the orbit samples, segment by segment so capacity jumps
    stay on panel boundaries.
    """
    num = 0.0
    den = 0.0
    for lo, hi, tt, pp in _segment_slices(orbit, cap):
        mm = np.array([cap.piece_value(float(x), lo, hi) for x in tt])
        num += float(simpson(mm * pp - pp * pp, x=tt))
        den += float(simpson(pp * pp, x=tt))
    if den <= 0.0:
        raise ValueError("orbit has no positive mass")
    return abs(num) / den


def mean_identity_residual(sol: PeriodicSolution, cap: CapacitySchedule) -> float:
    """Normalized defect of the cycle identity mean(M P) = mean(P^2)."""
    return orbit_identity_residual(sol.orbit, cap)


def square_deviation_identity(
    sol: PeriodicSolution, cap: CapacitySchedule
) -> tuple[float, float]:
    """The equivalent quadratic form of the cycle identity.

    Returns (integral of (P - M/2)^2, integral of M^2/4) over one
    period; the two agree exactly on a true cycle since their
    difference is the same vanishing integral of P^2 - M P.
    """
    lhs = 0.0
    rhs = 0.0
    for lo, hi, tt, pp in _segment_slices(sol.orbit, cap):
        mm = np.array([cap.piece_value(float(x), lo, hi) for x in tt])
        dev = pp - 0.5 * mm
        lhs += float(simpson(dev * dev, x=tt))
        rhs += float(simpson(0.25 * mm * mm, x=tt))
    return lhs, rhs


def time_average(sol: PeriodicSolution) -> float:
    """Mean population over one period of the cycle."""
    t = sol.orbit.times
    return float(simpson(sol.orbit.populations, x=t)) / float(t[-1] - t[0])


def half_peak_fraction(sol: PeriodicSolution, cap: CapacitySchedule, band: float = 0.10) -> float:
    """Fraction of the period where P sits within band*max(M) of max(M)/2."""
    peak = cap.max_value()
    t = sol.orbit.times
    p = sol.orbit.populations
    inside = (np.abs(p - 0.5 * peak) < band * peak).astype(float)
    weight = float(np.sum(0.5 * (inside[1:] + inside[:-1]) * np.diff(t)))
    return weight / float(t[-1] - t[0])


@dataclass(frozen=True)
class TwoPhaseReport:
    """End-of-phase populations on the cycle and how the square-wave
    story holds up: plateau gaps against each capacity level and the
    gap between the cycle mean and the capacity mean."""

    p1: float
    p2: float
    mean_population: float
    mean_condition_gap: float
    plateau_gaps: tuple[float, float]
    saturated: bool
    regime_tol: float


def two_phase_deductions(
    params: LogisticParams,
    cap: TwoPhase,
    cfg: SolverConfig | None = None,
    regime_tol: float = 0.05,
) -> TwoPhaseReport:
    """Cycle diagnostics for a square-wave schedule.

    The cycle itself does not depend on params.p0 or params.t0; only
    the growth rate matters here. p1 is the population where phase one
    ends, p2 where the cycle closes. saturated reports whether both
    plateau gaps are within regime_tol of their capacity levels, the
    slow-switching regime in which each phase has time to settle.
    """
    sol = find_periodic_solution(params.r, cap, cfg)
    half = 0.5 * cap.period
    times = sol.orbit.times
    i = int(np.searchsorted(times, half, side="left"))
    if i >= times.size or abs(times[i] - half) > 1e-9 * cap.period:
        raise ValueError("orbit grid does not include the phase switch")
    p1 = float(sol.orbit.populations[i])
    p2 = sol.orbit.final
    mean_pop = time_average(sol)
    gap = abs(0.5 * (cap.m1 + cap.m2) - mean_pop)
    plateau = (abs(p1 - cap.m1), abs(p2 - cap.m2))
    saturated = (
        plateau[0] < regime_tol * abs(cap.m1) and plateau[1] < regime_tol * abs(cap.m2)
    )
    return TwoPhaseReport(p1, p2, mean_pop, gap, plateau, saturated, regime_tol)
