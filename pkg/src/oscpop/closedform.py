"""Closed-form solutions of dP/dt = r (M - P) P.

For constant capacity M the solution is

    P(t) = M P0 / (P0 + (M - P0) exp(-r M (t - t0)))

evaluated here in a form that never exponentiates a positive argument,
so growth exponents of several hundred stay finite. Square-wave
schedules chain that formula piece by piece. For general M(t) the
reciprocal substitution turns the problem into a linear one solved by
an integrating factor plus one quadrature.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .capacity import CapacitySchedule, SolverConfig, TwoPhase
from .errors import ExponentOverflowError, PoleError
from .odesolve import SolverStats, Trajectory, adaptive_quadrature


@dataclass(frozen=True)
class LogisticParams:
    """Growth rate r > 0 and initial condition P(t0) = p0 >= 0.

    p0 = 0 is admitted because the zero population is a fixed point;
    the pole and positivity statements below assume p0 > 0.
    """

    r: float
    p0: float
    t0: float = 0.0

    def __post_init__(self) -> None:
        if not self.r > 0.0:
            raise ValueError("growth rate r must be positive")
        if not self.p0 >= 0.0:
            raise ValueError("initial population must be nonnegative")
        if not math.isfinite(self.t0):
            raise ValueError("initial time must be finite")


def logistic_constant(params: LogisticParams, m: float, t: float, *, pole_tol: float = 1e-10) -> float:
    """Population at time t under constant capacity m.

    Raises PoleError when the denominator vanishes to within pole_tol
    (relative to its terms), which can only happen when evaluating at
    times on the far side of a finite-time pole (p0 > m and t < t0, or
    p0 > 0 > m likewise in the past).
    """
    r, p0, t0 = params.r, params.p0, params.t0
    if m == 0.0:
        # capacity-free limit: dP/dt = -r P^2
        den = 1.0 + r * p0 * (t - t0)
        if abs(den) <= pole_tol * max(1.0, abs(r * p0 * (t - t0))):
            raise PoleError(f"solution pole at t={t}")
        return p0 / den
    x = r * m * (t - t0)
    if x >= 0.0:
        w = math.exp(-x)
        num = m * p0
        den = m * w - p0 * math.expm1(-x)
        scale = max(abs(m * w), abs(p0 * math.expm1(-x)), abs(p0))
    else:
        w = math.exp(x)
        num = m * p0 * w
        den = m + p0 * math.expm1(x)
        scale = max(abs(m), abs(p0 * math.expm1(x)))
    if abs(den) <= pole_tol * scale:
        raise PoleError(f"solution pole at t={t}")
    return num / den


def two_phase_step(params: LogisticParams, cap: TwoPhase) -> tuple[float, float]:
    """One full square-wave cycle starting from params.

    Evolves p0 under m1 for half the cycle, then under m2 for the other
    half, each phase using the constant-capacity solution with elapsed
    time measured within the phase. Returns (population at mid-cycle,
    population at cycle end).
    """
    half = 0.5 * cap.period
    p_half = logistic_constant(params, cap.m1, params.t0 + half)
    mid = LogisticParams(params.r, p_half, params.t0 + half)
    p_full = logistic_constant(mid, cap.m2, params.t0 + cap.period)
    return p_half, p_full


def two_phase_trajectory(
    params: LogisticParams, cap: TwoPhase, t_end: float, dt_sample: float
) -> Trajectory:
    """Piecewise-exact trajectory under a square-wave schedule.

    The solution is chained across the schedule's own switch times
    (anchored at t = 0), so params.t0 may fall anywhere in a cycle.
    Samples are taken every dt_sample from t0; t_end itself is included
    only when it lands on the sample grid.
    """
    if not dt_sample > 0.0:
        raise ValueError("dt_sample must be positive")
    if t_end < params.t0:
        raise ValueError("t_end must not precede the initial time")
    n = int(math.floor((t_end - params.t0) / dt_sample + 1e-9))
    ts = params.t0 + dt_sample * np.arange(n + 1)
    edges = [params.t0, *cap.breakpoints_between(params.t0, t_end), t_end]
    pops = np.empty(n + 1)
    p_carry = params.p0
    j = 0
    for lo, hi in zip(edges[:-1], edges[1:]):
        m = cap.piece_value(0.5 * (lo + hi), lo, hi)
        seg = LogisticParams(params.r, p_carry, lo)
        slack = 1e-12 * max(1.0, abs(hi))
        while j <= n and ts[j] <= hi + slack:
            pops[j] = logistic_constant(seg, m, min(float(ts[j]), hi))
            j += 1
        p_carry = logistic_constant(seg, m, hi)
    meta = SolverStats(solver="piecewise-exact")
    return Trajectory(ts, pops, meta)


def two_phase_value(params: LogisticParams, cap: TwoPhase, t: float) -> float:
    """Exact population at a single time under a square-wave schedule."""
    if t < params.t0:
        raise ValueError("t must not precede the initial time")
    edges = [params.t0, *cap.breakpoints_between(params.t0, t), t]
    p_carry = params.p0
    for lo, hi in zip(edges[:-1], edges[1:]):
        m = cap.piece_value(0.5 * (lo + hi), lo, hi)
        seg = LogisticParams(params.r, p_carry, lo)
        if t <= hi:
            return logistic_constant(seg, m, t)
        p_carry = logistic_constant(seg, m, hi)
    return p_carry


def integrating_factor(
    r: float,
    cap: CapacitySchedule,
    t_ref: float,
    t: float,
    *,
    max_exponent: float = 700.0,
) -> float:
    """exp(r * integral of M from t_ref to t), the linearizing weight.

    Raises ExponentOverflowError when the exponent magnitude exceeds
    max_exponent; rescale time or population units in that case.
    """
    if t >= t_ref:
        exponent = r * cap.integral(t_ref, t)
    else:
        exponent = -r * cap.integral(t, t_ref)
    if abs(exponent) > max_exponent:
        raise ExponentOverflowError(
            f"integrating-factor exponent {exponent:.3g} exceeds bound {max_exponent:.3g}"
        )
    return math.exp(exponent)


def _reciprocal_parts(params, cap, t, cfg):
    # shared core: weight at t and the reciprocal-space affine term
    cfg = cfg or SolverConfig()
    if t < params.t0:
        raise ValueError("t must not precede the initial time")
    r, t0 = params.r, params.t0

    def weight(s: float) -> float:
        return integrating_factor(r, cap, t0, s)

    q_t = weight(t)
    if t == t0:
        accumulated = 0.0
    else:
        accumulated = adaptive_quadrature(
            weight, t0, t, cap.breakpoints_between(t0, t), cfg
        )
    if params.p0 == 0.0:
        den = math.inf
    else:
        den = 1.0 / params.p0 + r * accumulated
    return q_t, den


def quadrature_solution(
    params: LogisticParams, cap: CapacitySchedule, t: float, cfg: SolverConfig | None = None
) -> float:
    """Population at t for arbitrary M(t), via the reciprocal substitution.

    With Q(s) = exp(r * integral of M from t0 to s),

        P(t) = Q(t) / (1/p0 + r * integral of Q from t0 to t),

    the quadrature done adaptively with schedule breakpoints as
    mandatory subdivision points.
    """
    q_t, den = _reciprocal_parts(params, cap, t, cfg)
    return q_t / den


def reciprocal_solution(
    params: LogisticParams, cap: CapacitySchedule, t: float, cfg: SolverConfig | None = None
) -> float:
    """1/P(t), the linear-equation variable behind quadrature_solution."""
    q_t, den = _reciprocal_parts(params, cap, t, cfg)
    return den / q_t
