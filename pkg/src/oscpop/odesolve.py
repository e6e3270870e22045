"""Adaptive numerical machinery: an embedded Runge-Kutta 4/5 pair with PI
step control and cubic-Hermite dense output, plus adaptive Simpson
quadrature.

Capacity breakpoints are treated as hard step boundaries: the integrator
never takes a step across one, and each smooth piece is integrated with
the piece's own one-sided capacity values, so discontinuous forcing does
not degrade the order of the method.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np

from .capacity import CapacitySchedule, SolverConfig
from .errors import ConvergenceError, DivergenceError, StiffnessError

# Dormand-Prince 5(4) coefficients. The fifth-order solution is propagated;
# the difference row _E* feeds the error estimate. Stage 7 is FSAL.
_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71 / 57600,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
_ERR_FLOOR = 1e-10


@dataclass(frozen=True)
class SolverStats:
    """Step bookkeeping attached to every trajectory."""

    solver: str
    n_accepted: int = 0
    n_rejected: int = 0
    n_rhs_evals: int = 0
    smallest_step: float = 0.0
    largest_step: float = 0.0


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled solution: strictly increasing times, finite populations."""

    times: np.ndarray
    populations: np.ndarray
    meta: SolverStats

    def __post_init__(self) -> None:
        t = np.asarray(self.times, dtype=float)
        p = np.asarray(self.populations, dtype=float)
        if t.ndim != 1 or p.ndim != 1 or t.shape != p.shape or t.size < 1:
            raise ValueError("times and populations must be matching 1-D arrays")
        if t.size > 1 and not np.all(np.diff(t) > 0.0):
            raise ValueError("sample times must be strictly increasing")
        if not np.all(np.isfinite(p)):
            raise ValueError("populations must be finite")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "populations", p)

    def __len__(self) -> int:
        return int(self.times.size)

    @property
    def final(self) -> float:
        return float(self.populations[-1])


@dataclass(frozen=True)
class _Step:
    # one accepted step; f0/f1 are slopes at the ends, for Hermite sampling
    t0: float
    t1: float
    y0: float
    y1: float
    f0: float
    f1: float


class _RunStats:
    __slots__ = ("n_accepted", "n_rejected", "n_rhs", "h_min", "h_max")

    def __init__(self) -> None:
        self.n_accepted = 0
        self.n_rejected = 0
        self.n_rhs = 0
        self.h_min = math.inf
        self.h_max = 0.0

    def freeze(self, solver: str) -> SolverStats:
        return SolverStats(
            solver=solver,
            n_accepted=self.n_accepted,
            n_rejected=self.n_rejected,
            n_rhs_evals=self.n_rhs,
            smallest_step=0.0 if math.isinf(self.h_min) else self.h_min,
            largest_step=self.h_max,
        )


def _hermite(step: _Step, t: float) -> float:
    dt = step.t1 - step.t0
    if dt == 0.0:
        return step.y0
    theta = (t - step.t0) / dt
    omt = 1.0 - theta
    h00 = (1.0 + 2.0 * theta) * omt * omt
    h10 = theta * omt * omt
    h01 = theta * theta * (3.0 - 2.0 * theta)
    h11 = theta * theta * (theta - 1.0)
    return h00 * step.y0 + dt * h10 * step.f0 + h01 * step.y1 + dt * h11 * step.f1


def _rk45_segment(f, lo, y0, hi, cfg, stats, budget):
    """Integrate y' = f(t, y) over the smooth interval [lo, hi].

    Returns (accepted steps, y at hi). budget is a single-element list
    holding the remaining attempted-step allowance for the whole call.
    """
    steps: list[_Step] = []
    t, y = lo, y0
    k1 = f(t, y)
    stats.n_rhs += 1
    if not math.isfinite(k1) or not math.isfinite(y):
        raise DivergenceError(f"non-finite state at t={t}")
    span = hi - lo
    h = min(cfg.max_step, span, max(span / 16.0, cfg.min_step))
    err_prev = None
    while t < hi:
        h = min(h, hi - t)
        if budget[0] <= 0:
            raise ConvergenceError("step budget exhausted (max_iterations)")
        budget[0] -= 1
        k2 = f(t + _C2 * h, y + h * (_A21 * k1))
        k3 = f(t + _C3 * h, y + h * (_A31 * k1 + _A32 * k2))
        k4 = f(t + _C4 * h, y + h * (_A41 * k1 + _A42 * k2 + _A43 * k3))
        k5 = f(t + _C5 * h, y + h * (_A51 * k1 + _A52 * k2 + _A53 * k3 + _A54 * k4))
        k6 = f(t + h, y + h * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4 + _A65 * k5))
        y_new = y + h * (_B1 * k1 + _B3 * k3 + _B4 * k4 + _B5 * k5 + _B6 * k6)
        k7 = f(t + h, y_new)
        stats.n_rhs += 6
        if not (
            math.isfinite(y_new)
            and math.isfinite(k7)
            and math.isfinite(k2 + k3 + k4 + k5 + k6)
        ):
            raise DivergenceError(f"non-finite state near t={t + h}")
        err_abs = h * (
            _E1 * k1 + _E3 * k3 + _E4 * k4 + _E5 * k5 + _E6 * k6 + _E7 * k7
        )
        scale = cfg.abs_tol + cfg.rel_tol * max(abs(y), abs(y_new))
        err = abs(err_abs) / scale
        if err <= 1.0:
            t_new = hi if hi - (t + h) <= 1e-14 * max(abs(hi), 1.0) else t + h
            steps.append(_Step(t, t_new, y, y_new, k1, k7))
            stats.n_accepted += 1
            stats.h_min = min(stats.h_min, h)
            stats.h_max = max(stats.h_max, h)
            t, y, k1 = t_new, y_new, k7
            if err == 0.0:
                factor = _MAX_FACTOR
            elif err_prev is None:
                factor = _SAFETY * err ** -0.2
            else:
                factor = _SAFETY * err ** -0.14 * err_prev ** 0.08
            err_prev = max(err, _ERR_FLOOR)
            h = min(cfg.max_step, h * min(_MAX_FACTOR, max(_MIN_FACTOR, factor)))
        else:
            stats.n_rejected += 1
            h *= max(_MIN_FACTOR, _SAFETY * err ** -0.2)
            if h < cfg.min_step:
                raise StiffnessError(
                    f"step size underflow at t={t} (needed {h:.3e} < min_step)"
                )
        if t < hi and t + h == t:
            raise StiffnessError(f"step size vanished at t={t}")
    return steps, y


def _segments(cap: CapacitySchedule, t0: float, t_end: float) -> list[tuple[float, float]]:
    edges = [t0, *cap.breakpoints_between(t0, t_end), t_end]
    return [(edges[i], edges[i + 1]) for i in range(len(edges) - 1)]


def _check_eval_times(t_eval, t0, t_end) -> np.ndarray:
    ts = np.asarray(t_eval, dtype=float)
    if ts.ndim != 1 or ts.size < 1:
        raise ValueError("t_eval must be a non-empty 1-D array")
    if ts.size > 1 and not np.all(np.diff(ts) > 0.0):
        raise ValueError("t_eval must be strictly increasing")
    slack = 1e-12 * max(1.0, abs(t0), abs(t_end))
    if ts[0] < t0 - slack or ts[-1] > t_end + slack:
        raise ValueError("t_eval must lie within the integration interval")
    return ts


def _sample_steps(steps: list[_Step], ts: np.ndarray) -> np.ndarray:
    ends = [s.t1 for s in steps]
    out = np.empty(ts.size)
    for i, t in enumerate(ts):
        k = bisect.bisect_left(ends, t)
        if k >= len(steps):
            k = len(steps) - 1
        out[i] = _hermite(steps[k], float(t))
    return out


def integrate_logistic(params, cap, t_end, cfg=None, t_eval=None) -> Trajectory:
    """Solve dP/dt = r * (M(t) - P) * P from (t0, p0) up to t_end.

    Returns the accepted-step samples, or the dense-output values at
    t_eval when given. The first sample is exactly the supplied initial
    condition.
    """
    cfg = cfg or SolverConfig()
    t0, p0 = params.t0, params.p0
    if t_end < t0:
        raise ValueError("t_end must not precede the initial time")
    stats = _RunStats()
    if t_end == t0:
        return Trajectory(np.array([t0]), np.array([p0]), stats.freeze("logistic-rk45"))
    r = params.r
    budget = [cfg.max_iterations]
    steps: list[_Step] = []
    y = p0
    for lo, hi in _segments(cap, t0, t_end):
        def rhs(t: float, p: float, lo=lo, hi=hi) -> float:
            return r * (cap.piece_value(t, lo, hi) - p) * p

        seg_steps, y = _rk45_segment(rhs, lo, y, hi, cfg, stats, budget)
        steps.extend(seg_steps)
    meta = stats.freeze("logistic-rk45")
    if t_eval is None:
        times = np.array([t0] + [s.t1 for s in steps])
        pops = np.array([p0] + [s.y1 for s in steps])
        return Trajectory(times, pops, meta)
    ts = _check_eval_times(t_eval, t0, t_end)
    return Trajectory(ts, _sample_steps(steps, ts), meta)


def integrate_riccati(params, cap, t_end, cfg=None, t_eval=None) -> Trajectory:
    """Solve the shifted form W = P - M(t)/2 and report P = W + M(t)/2.

    W obeys dW/dt = r * (M^2/4 - W^2) - (1/2) dM/dt on each smooth piece
    of the schedule. P is continuous across capacity jumps while W is
    not, so each piece restarts W from the carried population.
    """
    cfg = cfg or SolverConfig()
    t0, p0, r = params.t0, params.p0, params.r
    if t_end < t0:
        raise ValueError("t_end must not precede the initial time")
    stats = _RunStats()
    if t_end == t0:
        return Trajectory(np.array([t0]), np.array([p0]), stats.freeze("riccati-rk45"))
    budget = [cfg.max_iterations]
    segs: list[tuple[float, float, list[_Step]]] = []
    p_carry = p0
    for lo, hi in _segments(cap, t0, t_end):
        w0 = p_carry - 0.5 * cap.piece_value(lo, lo, hi)

        def rhs(t: float, w: float, lo=lo, hi=hi) -> float:
            m = cap.piece_value(t, lo, hi)
            dm = cap.piece_derivative(t, lo, hi)
            return r * (0.25 * m * m - w * w) - 0.5 * dm

        seg_steps, w_end = _rk45_segment(rhs, lo, w0, hi, cfg, stats, budget)
        segs.append((lo, hi, seg_steps))
        p_carry = w_end + 0.5 * cap.piece_value(hi, lo, hi)
    meta = stats.freeze("riccati-rk45")

    def to_population(t: float, w: float, lo: float, hi: float) -> float:
        return w + 0.5 * cap.piece_value(t, lo, hi)

    if t_eval is None:
        times = [t0]
        pops = [p0]
        for lo, hi, seg_steps in segs:
            for s in seg_steps:
                times.append(s.t1)
                pops.append(to_population(s.t1, s.y1, lo, hi))
        return Trajectory(np.array(times), np.array(pops), meta)
    ts = _check_eval_times(t_eval, t0, t_end)
    his = [hi for _, hi, _ in segs]
    out = np.empty(ts.size)
    for i, t in enumerate(ts):
        k = bisect.bisect_left(his, t)
        if k >= len(segs):
            k = len(segs) - 1
        lo, hi, seg_steps = segs[k]
        w = _sample_steps(seg_steps, np.array([t]))[0]
        out[i] = to_population(float(t), w, lo, hi)
    return Trajectory(ts, out, meta)


def adaptive_quadrature(f, a, b, mandatory_points=(), cfg=None) -> float:
    """Adaptive Simpson integral of f over [a, b].

    mandatory_points become top-level panel boundaries so integrands
    with known kinks or jumps keep full accuracy. The absolute error
    target is max(abs_tol, rel_tol * |result|); each panel gets a share
    proportional to its width, and the usual Richardson correction is
    applied on acceptance.
    """
    cfg = cfg or SolverConfig()
    if b < a:
        raise ValueError("integration bounds out of order")
    if a == b:
        return 0.0
    inner = sorted({float(p) for p in mandatory_points if a < p < b})
    edges = [a, *inner, b]
    panels = []
    crude = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        mid = 0.5 * (lo + hi)
        flo, fmid, fhi = f(lo), f(mid), f(hi)
        s = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)
        panels.append((lo, hi, flo, fmid, fhi, s))
        crude += s
    tol = max(cfg.abs_tol, cfg.rel_tol * abs(crude))
    budget = [cfg.max_iterations]
    total = 0.0
    for lo, hi, flo, fmid, fhi, s in panels:
        share = tol * (hi - lo) / (b - a)
        total += _simpson_refine(f, lo, hi, flo, fmid, fhi, s, share, 0, budget)
    return total


def _simpson_refine(f, lo, hi, flo, fmid, fhi, whole, tol, depth, budget):
    if depth > 60:
        raise ConvergenceError("quadrature recursion depth exceeded")
    if budget[0] <= 0:
        raise ConvergenceError("quadrature subdivision budget exhausted")
    budget[0] -= 1
    mid = 0.5 * (lo + hi)
    lmid = 0.5 * (lo + mid)
    rmid = 0.5 * (mid + hi)
    fl, fr = f(lmid), f(rmid)
    left = (mid - lo) / 6.0 * (flo + 4.0 * fl + fmid)
    right = (hi - mid) / 6.0 * (fmid + 4.0 * fr + fhi)
    delta = left + right - whole
    if abs(delta) <= 15.0 * tol:
        return left + right + delta / 15.0
    half = 0.5 * tol
    return _simpson_refine(f, lo, mid, flo, fl, fmid, left, half, depth + 1, budget) + \
        _simpson_refine(f, mid, hi, fmid, fr, fhi, right, half, depth + 1, budget)
